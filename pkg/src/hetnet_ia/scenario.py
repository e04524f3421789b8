"""YAML scenario files: topology, power budgets and simulation settings.

A scenario file has three sections::

    topology:   {K, L, N, M_r, path_loss_exponent, distances: {...}}
    power:      {p_macrocell, p_femtocell, noise_variance}
    simulation: {frames, bits_per_frame, seed, snr_db: {start, stop, step},
                 draws_per_frame, workers, c, d}

A run manifest written by the CLI embeds the fully resolved scenario under
the key ``scenario`` and is accepted by :func:`load_scenario` as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .errors import ConfigError, HetNetError
from .network import (
    PowerConfig,
    Topology,
    example_power,
    example_topology,
    power_from_mapping,
    power_to_mapping,
    topology_from_mapping,
    topology_to_mapping,
)
from .sim import SimConfig

__all__ = ["Scenario", "snr_range", "example_scenario", "scenario_from_mapping", "load_scenario"]


def snr_range(start: float, stop: float, step: float) -> tuple:
    """Inclusive SNR grid ``start, start + step, ..., <= stop``."""
    if not step > 0:
        raise ConfigError("SNR step must be > 0")
    if stop < start:
        raise ConfigError("SNR stop must be >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(round(start + i * step, 10)) for i in range(n))


@dataclass(frozen=True, eq=False)
class Scenario:
    topology: Topology = field(default_factory=example_topology)
    power: PowerConfig = field(default_factory=example_power)
    frames: int = 500
    bits_per_frame: int = 6144
    seed: int = 0
    snr_points: tuple = snr_range(0, 40, 5)
    draws_per_frame: int = 16
    workers: int = 1
    c: float | None = None
    d: float | None = None
    name: str = "example"

    def with_overrides(self, **kw) -> "Scenario":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def sim_config(self, scheme: str, tdma_context: str = "hybrid") -> SimConfig:
        return SimConfig(
            scheme=scheme,
            snr_points=self.snr_points,
            frames=self.frames,
            bits_per_frame=self.bits_per_frame,
            seed=self.seed,
            topology=self.topology,
            power=self.power,
            tdma_context=tdma_context,
            draws_per_frame=self.draws_per_frame,
            workers=self.workers,
            c=self.c,
            d=self.d,
        )

    def to_mapping(self) -> dict:
        """Resolved, JSON-serialisable form (SNR points listed explicitly)."""
        return {
            "name": self.name,
            "topology": topology_to_mapping(self.topology),
            "power": power_to_mapping(self.power),
            "simulation": {
                "frames": int(self.frames),
                "bits_per_frame": int(self.bits_per_frame),
                "seed": int(self.seed),
                "snr_db": list(self.snr_points),
                "draws_per_frame": int(self.draws_per_frame),
                "workers": int(self.workers),
                "c": self.c,
                "d": self.d,
            },
        }

    def validate(self) -> "Scenario":
        if self.frames < 1 or self.draws_per_frame < 1 or self.workers < 1:
            raise ConfigError("frames, draws_per_frame and workers must be >= 1")
        if self.bits_per_frame < 2 or self.bits_per_frame % 2:
            raise ConfigError("bits_per_frame must be a positive even number")
        if not self.snr_points or not all(np.isfinite(self.snr_points)):
            raise ConfigError("snr points must be finite")
        return self


def example_scenario() -> Scenario:
    """Two macro users and two femtocells, 2x2 MIMO, 40 W / 5 W, 500 frames of 6144 bits."""
    return Scenario()


def _snr_points(spec: Any) -> tuple:
    if isinstance(spec, Mapping):
        try:
            return snr_range(float(spec["start"]), float(spec["stop"]), float(spec["step"]))
        except KeyError as exc:
            raise ConfigError(f"snr_db needs start, stop and step: missing {exc}") from None
    if isinstance(spec, (list, tuple)) and spec:
        return tuple(float(s) for s in spec)
    raise ConfigError("snr_db must be a {start, stop, step} mapping or a non-empty list")


def scenario_from_mapping(m: Mapping[str, Any], name: str = "scenario") -> Scenario:
    if not isinstance(m, Mapping):
        raise ConfigError("scenario must be a mapping")
    if "scenario" in m and isinstance(m["scenario"], Mapping):  # run manifest
        m = m["scenario"]
    unknown = set(m) - {"name", "topology", "power", "simulation"}
    if unknown:
        raise ConfigError(f"unknown scenario sections: {sorted(unknown)}")
    if "topology" not in m:
        raise ConfigError("scenario needs a topology section")
    try:
        topo = topology_from_mapping(m["topology"])
        power = power_from_mapping(m.get("power"))
    except HetNetError as exc:
        raise ConfigError(str(exc)) from None
    sim = m.get("simulation") or {}
    if not isinstance(sim, Mapping):
        raise ConfigError("simulation section must be a mapping")
    known = {"frames", "bits_per_frame", "seed", "snr_db", "draws_per_frame", "workers", "c", "d"}
    if set(sim) - known:
        raise ConfigError(f"unknown simulation keys: {sorted(set(sim) - known)}")
    try:
        kw = {k: int(sim[k]) for k in ("frames", "bits_per_frame", "seed", "draws_per_frame", "workers") if k in sim}
        for k in ("c", "d"):
            if sim.get(k) is not None:
                kw[k] = float(sim[k])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad simulation value: {exc}") from None
    if "snr_db" in sim:
        kw["snr_points"] = _snr_points(sim["snr_db"])
    return Scenario(topology=topo, power=power, name=str(m.get("name", name)), **kw).validate()


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {p}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse scenario {p}: {exc}") from None
    return scenario_from_mapping(data, name=p.stem)
