"""Scenario definition and random channel generation.

A :class:`Topology` fixes user counts, antenna counts and link distances; a
:class:`ChannelSet` is one (optionally batched) draw of every small-scale
fading matrix, held constant across a supersymbol.

Channel naming follows the transmitter -> receiver direction:

``macro[k]``            macro BS -> macro user a_k            (N x N)
``femto[k, l]``         femto BS kl -> femto user f_kl        (M_r x N)
``femto_macro[k, l]``   femto BS kl -> macro user a_k         (N x N)
``macro_femto[k, l]``   macro BS -> femto user f_kl           (M_r x N)
``femto_femto[k, j, l]`` femto BS kj -> femto user f_kl       (M_r x N)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, DimensionMismatch, UnsupportedTopology

__all__ = [
    "Topology",
    "PowerConfig",
    "ChannelSet",
    "example_topology",
    "example_power",
    "make_rng",
    "draw_channels",
    "lift_channel",
    "apply_lifted",
    "topology_from_mapping",
    "power_from_mapping",
    "topology_to_mapping",
    "power_to_mapping",
]


def _frozen(a, shape, name) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise ConfigError(f"{name} distances must have shape {shape}, got {arr.shape}")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ConfigError(f"{name} distances must be finite and > 0")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Topology:
    """One network scenario.

    Distances are in km. ``d_femto_femto[k, j, l]`` is the distance from the
    femto BS kj to user f_kl; its diagonal (j == l) is never used. It may be
    omitted when L == 1.
    """

    K: int
    L: int
    N: int
    d_macro: Any
    d_femto: Any
    d_macro_femto: Any
    d_femto_macro: Any
    d_femto_femto: Any = None
    M_r: int | None = None
    path_loss_exponent: float = 3.0

    def __post_init__(self):
        K, L, N = self.K, self.L, self.N
        if min(K, N) < 1 or L < 0:
            raise ConfigError("need K >= 1, N >= 1, L >= 0")
        if self.M_r is None:
            object.__setattr__(self, "M_r", N)
        if not 1 <= self.M_r <= N:
            raise ConfigError("M_r must lie in [1, N]")
        if self.path_loss_exponent <= 0:
            raise ConfigError("path-loss exponent must be positive")
        object.__setattr__(self, "d_macro", _frozen(self.d_macro, (K,), "macro"))
        object.__setattr__(self, "d_femto", _frozen(self.d_femto, (K, L), "femto"))
        object.__setattr__(self, "d_macro_femto", _frozen(self.d_macro_femto, (K, L), "macro_to_femto"))
        object.__setattr__(self, "d_femto_macro", _frozen(self.d_femto_macro, (K, L), "femto_to_macro"))
        ff = self.d_femto_femto
        if ff is None:
            if L > 1:
                raise ConfigError("femto_to_femto distances are required when L > 1")
            ff = np.ones((K, L, L))
        ff = np.array(ff, dtype=float)
        if ff.shape != (K, L, L):
            raise ConfigError(f"femto_to_femto distances must have shape {(K, L, L)}")
        off = ~np.eye(L, dtype=bool)[None].repeat(K, axis=0)
        if np.any(ff[off] <= 0) or np.any(~np.isfinite(ff[off])):
            raise ConfigError("femto_to_femto distances must be finite and > 0")
        ff[~off] = np.inf
        ff.setflags(write=False)
        object.__setattr__(self, "d_femto_femto", ff)

    # slot counts per scheme
    @property
    def hybrid_slots(self) -> int:
        return self.L + 1

    @property
    def blind_slots(self) -> int:
        return self.K + 1

    def _gain(self, d):
        return np.asarray(d, dtype=float) ** (-self.path_loss_exponent)

    @property
    def gamma_macro(self) -> np.ndarray:
        return self._gain(self.d_macro)

    @property
    def gamma_femto(self) -> np.ndarray:
        return self._gain(self.d_femto)

    @property
    def gamma_macro_femto(self) -> np.ndarray:
        return self._gain(self.d_macro_femto)

    @property
    def gamma_femto_macro(self) -> np.ndarray:
        return self._gain(self.d_femto_macro)

    @property
    def gamma_femto_femto(self) -> np.ndarray:
        # inf distance on the diagonal -> zero gain
        return self._gain(self.d_femto_femto)

    def macro_order(self) -> np.ndarray:
        """Macro users sorted strongest first; ties keep the lower index first."""
        return np.argsort(-self.gamma_macro, kind="stable")

    def require_hybrid(self) -> None:
        if self.M_r != self.N:
            raise UnsupportedTopology("the hybrid scheme needs M_r == N")
        if self.L < 1:
            raise UnsupportedTopology("the hybrid scheme needs at least one femtocell group")

    def require_blind(self) -> None:
        L, N, K = self.L, self.N, self.K
        if not 1 <= L <= 3 or L > N:
            raise UnsupportedTopology("blind IA needs 1 <= L <= 3 and L <= N")
        if K != 2:
            raise UnsupportedTopology(
                "blind IA constructions are only interference-free for K == 2 "
                "(the femto receive subspace has M_r dimensions)"
            )
        if L == 1:
            if self.M_r not in (N - 1, N) or self.M_r < 2:
                raise UnsupportedTopology("blind IA with L == 1 needs M_r in {N-1, N} and M_r >= 2")
        else:
            if self.M_r != N:
                raise UnsupportedTopology("blind IA with L > 1 needs M_r == N")
            if (L - 1) * (N - L + 1) > N - 1:
                raise UnsupportedTopology("too many group-1 femto streams to null at the macro user")


@dataclass(frozen=True)
class PowerConfig:
    """Transmit budgets (W) and receiver noise variance (W per dimension)."""

    p_macrocell: float = 40.0
    p_femtocell: float = 5.0
    noise_variance: float = 1.0

    def __post_init__(self):
        for name in ("p_macrocell", "p_femtocell", "noise_variance"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {v}")

    def snr_db(self, N: int) -> float:
        return float(10 * np.log10(self.p_macrocell / (N * self.noise_variance)))

    def at_snr(self, snr_db: float, N: int) -> "PowerConfig":
        """Same budgets, noise set so that P_macro / (N sigma^2) equals ``snr_db``."""
        sigma2 = self.p_macrocell / (N * 10.0 ** (snr_db / 10.0))
        return PowerConfig(self.p_macrocell, self.p_femtocell, sigma2)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    macro: np.ndarray
    femto: np.ndarray
    femto_macro: np.ndarray
    macro_femto: np.ndarray
    femto_femto: np.ndarray
    gamma_macro: np.ndarray
    gamma_femto: np.ndarray
    gamma_femto_macro: np.ndarray
    gamma_macro_femto: np.ndarray
    gamma_femto_femto: np.ndarray
    batch_shape: tuple = field(default=())

    def __getitem__(self, idx) -> "ChannelSet":
        """Slice along the batch axes."""
        if not self.batch_shape:
            raise IndexError("unbatched ChannelSet")
        kw = {
            n: getattr(self, n)[idx]
            for n in ("macro", "femto", "femto_macro", "macro_femto", "femto_femto")
        }
        bshape = kw["macro"].shape[:-3]
        return ChannelSet(
            **kw,
            gamma_macro=self.gamma_macro,
            gamma_femto=self.gamma_femto,
            gamma_femto_macro=self.gamma_femto_macro,
            gamma_macro_femto=self.gamma_macro_femto,
            gamma_femto_femto=self.gamma_femto_femto,
            batch_shape=bshape,
        )

    def equals(self, other: "ChannelSet") -> bool:
        names = ("macro", "femto", "femto_macro", "macro_femto", "femto_femto")
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in names)


def example_topology() -> Topology:
    """Two macro users, one femtocell each, 2x2 MIMO everywhere, distances in km."""
    return Topology(
        K=2,
        L=1,
        N=2,
        M_r=2,
        path_loss_exponent=3.0,
        d_macro=[0.5, 4.5],
        d_femto=[[0.2], [0.2]],
        d_macro_femto=[[5.0], [5.2]],
        d_femto_macro=[[5.0], [5.2]],
    )


def example_power(noise_variance: float = 1.0) -> PowerConfig:
    return PowerConfig(p_macrocell=40.0, p_femtocell=5.0, noise_variance=noise_variance)


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Philox counter-based generator keyed by ``(seed, *keys)``.

    Passing an existing Generator returns it unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return np.random.Generator(np.random.Philox(ss))


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    # CN(0, 1): unit-variance circular complex Gaussian
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def draw_channels(topo: Topology, seed, batch: int | tuple | None = None) -> ChannelSet:
    """Draw every link once (per batch item) from CN(0, 1).

    Deterministic for a given ``seed``; draws happen in a fixed link order.
    """
    rng = make_rng(seed)
    K, L, N, Mr = topo.K, topo.L, topo.N, topo.M_r
    b = () if batch is None else (batch,) if np.isscalar(batch) else tuple(batch)
    return ChannelSet(
        macro=_cn(rng, b + (K, N, N)),
        femto=_cn(rng, b + (K, L, Mr, N)),
        femto_macro=_cn(rng, b + (K, L, N, N)),
        macro_femto=_cn(rng, b + (K, L, Mr, N)),
        femto_femto=_cn(rng, b + (K, L, L, Mr, N)),
        gamma_macro=topo.gamma_macro,
        gamma_femto=topo.gamma_femto,
        gamma_femto_macro=topo.gamma_femto_macro,
        gamma_macro_femto=topo.gamma_macro_femto,
        gamma_femto_femto=topo.gamma_femto_femto,
        batch_shape=b,
    )


def lift_channel(h, gamma: float, T: int) -> np.ndarray:
    """Supersymbol channel sqrt(gamma) * (I_T kron h)."""
    h = np.asarray(h)
    return np.sqrt(gamma) * np.kron(np.eye(T), h)


def apply_lifted(h, gamma, x, matrix: bool = False) -> np.ndarray:
    """Apply ``lift_channel(h, gamma, T)`` to ``x`` without forming the kron.

    ``h`` has shape (..., R, N). ``x`` is a supersymbol (..., T*N), or with
    ``matrix=True`` a stack of columns (..., T*N, m). Batch axes broadcast.
    """
    h = np.asarray(h)
    x = np.asarray(x)
    N = h.shape[-1]
    if not matrix:
        x = x[..., None]
    TN = x.shape[-2]
    if TN % N:
        raise DimensionMismatch(f"signal length {TN} is not a multiple of N={N}")
    T = TN // N
    xb = x.reshape(x.shape[:-2] + (T, N, x.shape[-1]))
    y = np.sqrt(gamma) * np.einsum("...rn,...tnm->...trm", h, xb)
    y = y.reshape(y.shape[:-3] + (T * h.shape[-2], x.shape[-1]))
    return y if matrix else y[..., 0]


def _unnull(ff):
    if ff is None:
        return None
    return [[[np.inf if v is None else v for v in row] for row in m] for m in ff]


def topology_from_mapping(m: Mapping[str, Any]) -> Topology:
    try:
        dist = m["distances"]
        return Topology(
            K=int(m["K"]),
            L=int(m["L"]),
            N=int(m["N"]),
            M_r=None if m.get("M_r") is None else int(m["M_r"]),
            path_loss_exponent=float(m.get("path_loss_exponent", 3.0)),
            d_macro=dist["macro"],
            d_femto=dist["femto"],
            d_macro_femto=dist["macro_to_femto"],
            d_femto_macro=dist["femto_to_macro"],
            d_femto_femto=_unnull(dist.get("femto_to_femto")),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad topology section: {exc!r}") from None


def power_from_mapping(m: Mapping[str, Any] | None) -> PowerConfig:
    m = m or {}
    try:
        return PowerConfig(
            p_macrocell=float(m.get("p_macrocell", 40.0)),
            p_femtocell=float(m.get("p_femtocell", 5.0)),
            noise_variance=float(m.get("noise_variance", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad power section: {exc}") from None


def _listify_ff(a) -> list:
    # the unused diagonal holds inf, which JSON cannot represent
    return [[[None if not np.isfinite(v) else float(v) for v in row] for row in m] for m in np.asarray(a)]


def topology_to_mapping(t: Topology) -> dict:
    """Inverse of :func:`topology_from_mapping` (JSON-serialisable)."""
    return {
        "K": t.K,
        "L": t.L,
        "N": t.N,
        "M_r": t.M_r,
        "path_loss_exponent": t.path_loss_exponent,
        "distances": {
            "macro": t.d_macro.tolist(),
            "femto": t.d_femto.tolist(),
            "macro_to_femto": t.d_macro_femto.tolist(),
            "femto_to_macro": t.d_femto_macro.tolist(),
            "femto_to_femto": _listify_ff(t.d_femto_femto),
        },
    }


def power_to_mapping(p: PowerConfig) -> dict:
    return {"p_macrocell": p.p_macrocell, "p_femtocell": p.p_femtocell, "noise_variance": p.noise_variance}
