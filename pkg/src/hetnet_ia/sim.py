"""Monte-Carlo BER and ergodic-rate sweeps for the hybrid, Blind IA and TDMA chains.

Determinism: frame ``f`` at SNR index ``i`` draws everything (channels, bits,
noise) from ``make_rng(seed, i, f)``. Workers only partition the frame index
range and the reduction is an integer sum, so results do not depend on the
worker count.

SNR axis: ``snr_db = 10 log10(P_macro / (N sigma^2))``. Transmit budgets stay
fixed and only the noise variance changes along a sweep.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .blind_ia import (
    BlindIAScheme,
    blind_ia_rate,
    blind_receive,
    build_receivers,
    build_scheme,
    femto_effective_channel,
    macro_effective_channel,
)
from .errors import ConfigError
from .linalg import log_det_hermitian
from .hybrid import (
    allocate_noma_powers,
    build_precoding_basis,
    femto_receive_project,
    hybrid_rate,
    hybrid_receive,
    hybrid_transmit,
    macro_receive_project,
    sic_decode_macro,
)
from .modulation import product_constellation, qpsk_demap, qpsk_modulate
from .network import (
    ChannelSet,
    PowerConfig,
    Topology,
    draw_channels,
    example_power,
    example_topology,
    make_rng,
    power_to_mapping,
    topology_to_mapping,
)

__all__ = [
    "SCHEMES",
    "SCHEMA_VERSION",
    "SNR_DEFINITION",
    "SimConfig",
    "SimResult",
    "user_labels",
    "bits_per_supersymbol",
    "run_ber_sweep",
    "run_rate_sweep",
    "tdma_baseline_rates",
    "tdma_hybrid_user_rates",
    "macro_energy",
    "config_hash",
]

SCHEMES = ("hybrid", "blind_ia", "tdma")
SCHEMA_VERSION = 1
SNR_DEFINITION = "10*log10(P_macrocell / (N * noise_variance)); transmit powers fixed"
_RATE_STREAM = 0x7A7E  # rng key separating rate draws from BER frames
_LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class SimConfig:
    scheme: str = "hybrid"
    snr_points: tuple = tuple(range(0, 41, 5))
    frames: int = 500
    bits_per_frame: int = 6144
    seed: int = 0
    topology: Topology = field(default_factory=example_topology)
    power: PowerConfig = field(default_factory=example_power)
    tdma_context: str = "hybrid"  # slot count for TDMA rates: "hybrid" (L+1) or "blind" (K+1)
    draws_per_frame: int = 16  # channel realisations per frame in rate sweeps
    workers: int = 1
    genie_sic: bool = False
    c: float | None = None  # Blind IA schedule parameters; None = closed-form optimum
    d: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.tdma_context not in ("hybrid", "blind"):
            raise ConfigError("tdma_context must be 'hybrid' or 'blind'")
        if int(self.frames) < 1:
            raise ConfigError("frames must be >= 1")
        if int(self.bits_per_frame) < 2 or self.bits_per_frame % 2:
            raise ConfigError("bits_per_frame must be a positive even number")
        if int(self.workers) < 1 or int(self.draws_per_frame) < 1:
            raise ConfigError("workers and draws_per_frame must be >= 1")
        pts = tuple(float(s) for s in self.snr_points)
        if not pts or not all(math.isfinite(s) for s in pts):
            raise ConfigError("snr_points must be a non-empty list of finite values")
        object.__setattr__(self, "snr_points", pts)
        if self.scheme == "hybrid" or (self.scheme == "tdma" and self.tdma_context == "hybrid"):
            self.topology.require_hybrid()
        if self.scheme == "blind_ia" or (self.scheme == "tdma" and self.tdma_context == "blind"):
            self.topology.require_blind()

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "snr_points": list(self.snr_points),
            "frames": int(self.frames),
            "bits_per_frame": int(self.bits_per_frame),
            "seed": int(self.seed),
            "tdma_context": self.tdma_context,
            "draws_per_frame": int(self.draws_per_frame),
            "genie_sic": bool(self.genie_sic),
            "c": self.c,
            "d": self.d,
            "topology": topology_to_mapping(self.topology),
            "power": power_to_mapping(self.power),
        }


def config_hash(cfg: SimConfig) -> str:
    """SHA-256 of the canonical JSON form; the worker count is excluded."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(eq=False)
class SimResult:
    scheme: str
    snr_db: list
    users: list
    ber: dict = field(default_factory=dict)  # user -> list per SNR point
    bit_errors: dict = field(default_factory=dict)  # user -> list of ints
    bits: dict = field(default_factory=dict)  # user -> bits sent per SNR point
    rate: dict = field(default_factory=dict)  # user -> list (bits/s/Hz)
    sum_rate: list = field(default_factory=list)
    total_ber: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


# -- frame layout ---------------------------------------------------------------

def user_labels(topo: Topology) -> list:
    """Macro users a1..aK then femto users f1..fK (L == 1) or f{k}_{l} (L > 1)."""
    out = [f"a{k + 1}" for k in range(topo.K)]
    for k in range(topo.K):
        for l in range(topo.L):
            out.append(f"f{k + 1}" if topo.L == 1 else f"f{k + 1}_{l + 1}")
    return out


def _streams(cfg: SimConfig, scheme: BlindIAScheme | None) -> list:
    # QPSK streams per user per supersymbol, in user_labels order
    topo = cfg.topology
    if cfg.scheme == "blind_ia":
        return [topo.N] * topo.K + [scheme.femto[key].messages for key in scheme.femto_keys()]
    return [topo.N] * topo.K + [topo.N] * (topo.K * topo.L)


def bits_per_supersymbol(cfg: SimConfig) -> int:
    scheme = _blind_scheme(cfg, cfg.power) if cfg.scheme == "blind_ia" else None
    return 2 * sum(_streams(cfg, scheme))


def _blind_scheme(cfg: SimConfig, power: PowerConfig) -> BlindIAScheme:
    return build_scheme(cfg.topology, power, cfg.c, cfg.d)


def _frame_bits(rng, n_ss: int, bps: int, bits_per_frame: int):
    bits = rng.integers(0, 2, size=(n_ss, bps), dtype=np.uint8)
    mask = (np.arange(n_ss * bps).reshape(n_ss, bps) < bits_per_frame)
    bits[~mask] = 0  # zero padding of the final partial supersymbol
    return bits, mask


def _split(bits: np.ndarray, streams: list) -> list:
    edges = np.cumsum([0] + [2 * s for s in streams])
    return [bits[:, edges[i] : edges[i + 1]] for i in range(len(streams))]


# -- per-scheme frame chains ------------------------------------------------------

def _hybrid_frame(cfg, rng, noise, n_ss, streams):
    topo = cfg.topology
    K, L, N = topo.K, topo.L, topo.N
    basis = build_precoding_basis(topo.hybrid_slots)
    alloc = allocate_noma_powers(topo, cfg.power)
    ch = draw_channels(topo, rng, batch=n_ss)
    bits, mask = _frame_bits(rng, n_ss, 2 * sum(streams), cfg.bits_per_frame)
    parts = _split(bits, streams)
    u_macro = np.stack([qpsk_modulate(p) for p in parts[:K]], axis=1)
    u_femto = np.stack([qpsk_modulate(p) for p in parts[K:]], axis=1).reshape(n_ss, K, L, N)
    frame = hybrid_transmit(basis, alloc, u_macro, u_femto)
    y_m, y_f = hybrid_receive(topo, ch, frame, noise, rng)
    post = macro_receive_project(y_m, basis)
    dec = sic_decode_macro(post, alloc, ch, topo, genie=u_macro if cfg.genie_sic else None)
    est = [dec[:, k, k, :] for k in range(K)]
    cands = product_constellation(N)
    for k in range(K):
        for l in range(L):
            z = femto_receive_project(y_f[:, k, l, :], basis, l + 1)
            G = np.sqrt(ch.gamma_femto[k, l] * alloc.p_femto) * ch.femto[:, k, l]
            est.append(cands[kernels.ml_detect(z, G, cands)])
    return bits, mask, est


def _blind_frame(cfg, rng, noise, n_ss, streams, scheme):
    topo = cfg.topology
    K = topo.K
    ch = draw_channels(topo, rng, batch=n_ss)
    bits, mask = _frame_bits(rng, n_ss, 2 * sum(streams), cfg.bits_per_frame)
    parts = _split(bits, streams)
    keys = scheme.femto_keys()
    u_macro = np.stack([qpsk_modulate(p) for p in parts[:K]], axis=1)
    u_femto = {key: qpsk_modulate(p) for key, p in zip(keys, parts[K:])}
    y_m, y_f = blind_receive(ch, scheme, u_macro, u_femto, noise, rng)
    macro_p, femto_p = build_receivers(ch, scheme)
    est = []
    for k, pr in enumerate(macro_p):
        H = macro_effective_channel(ch, scheme, pr, check=False).H
        z = np.einsum("...mn,...n->...m", pr.P, y_m[:, k, :])
        cands = product_constellation(H.shape[-1])
        est.append(cands[kernels.ml_detect(z, H, cands)])
    for key in keys:
        pr = femto_p[key]
        H = femto_effective_channel(ch, scheme, pr, check=False).H
        z = np.einsum("...mn,...n->...m", pr.P, y_f[key])
        cands = product_constellation(H.shape[-1])
        est.append(cands[kernels.ml_detect(z, H, cands)])
    return bits, mask, est


def _tdma_frame(cfg, rng, noise, n_ss, streams):
    # every user alone on the air with its cell's full budget spread over N streams
    topo = cfg.topology
    K, L, N = topo.K, topo.L, topo.N
    p = cfg.power
    ch = draw_channels(topo, rng, batch=n_ss)
    bits, mask = _frame_bits(rng, n_ss, 2 * sum(streams), cfg.bits_per_frame)
    parts = _split(bits, streams)
    gains = [np.sqrt(ch.gamma_macro[k] * p.p_macrocell / N) * ch.macro[:, k] for k in range(K)]
    gains += [np.sqrt(ch.gamma_femto[k, l] * p.p_femtocell / N) * ch.femto[:, k, l] for k in range(K) for l in range(L)]
    cands = product_constellation(N)
    sd = np.sqrt(noise / 2)
    est = []
    for G, part in zip(gains, parts):
        u = qpsk_modulate(part)
        y = np.einsum("...mn,...n->...m", G, u)
        y = y + sd * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
        est.append(cands[kernels.ml_detect(y, G, cands)])
    return bits, mask, est


def _frame_errors(cfg: SimConfig, snr_idx: int, frame: int) -> np.ndarray:
    """Bit errors per user for one frame (int64, user_labels order)."""
    topo = cfg.topology
    noise = cfg.power.at_snr(cfg.snr_points[snr_idx], topo.N).noise_variance
    scheme = _blind_scheme(cfg, cfg.power) if cfg.scheme == "blind_ia" else None
    streams = _streams(cfg, scheme)
    bps = 2 * sum(streams)
    n_ss = -(-cfg.bits_per_frame // bps)
    rng = make_rng(cfg.seed, snr_idx, frame)
    if cfg.scheme == "hybrid":
        bits, mask, est = _hybrid_frame(cfg, rng, noise, n_ss, streams)
    elif cfg.scheme == "blind_ia":
        bits, mask, est = _blind_frame(cfg, rng, noise, n_ss, streams, scheme)
    else:
        bits, mask, est = _tdma_frame(cfg, rng, noise, n_ss, streams)
    got = np.concatenate([qpsk_demap(e) for e in est], axis=1)
    per_col = kernels.count_bit_errors(got, bits, mask)
    edges = np.cumsum([0] + [2 * s for s in streams])
    return np.add.reduceat(per_col, edges[:-1]).astype(np.int64)


def _frame_bits_sent(cfg: SimConfig, streams: list) -> np.ndarray:
    bps = 2 * sum(streams)
    n_ss = -(-cfg.bits_per_frame // bps)
    mask = np.arange(n_ss * bps).reshape(n_ss, bps) < cfg.bits_per_frame
    edges = np.cumsum([0] + [2 * s for s in streams])
    return np.add.reduceat(mask.sum(axis=0), edges[:-1]).astype(np.int64)


def _chunk_errors(args) -> np.ndarray:
    cfg, snr_idx, lo, hi = args
    return sum((_frame_errors(cfg, snr_idx, f) for f in range(lo, hi)), start=np.int64(0))


def _chunks(n: int, parts: int):
    step = -(-n // parts)
    return [(lo, min(lo + step, n)) for lo in range(0, n, step)]


def run_ber_sweep(cfg: SimConfig) -> SimResult:
    """Per-user BER at each SNR point over ``cfg.frames`` frames."""
    topo = cfg.topology
    labels = user_labels(topo)
    scheme = _blind_scheme(cfg, cfg.power) if cfg.scheme == "blind_ia" else None
    streams = _streams(cfg, scheme)
    sent = _frame_bits_sent(cfg, streams) * cfg.frames
    errors = []
    jobs = [(cfg, i, lo, hi) for i in range(len(cfg.snr_points)) for lo, hi in _chunks(cfg.frames, cfg.workers)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            partial = list(ex.map(_chunk_errors, jobs))
    else:
        partial = [_chunk_errors(j) for j in jobs]
    per_snr = len(jobs) // len(cfg.snr_points)
    for i in range(len(cfg.snr_points)):
        errors.append(np.sum(partial[i * per_snr : (i + 1) * per_snr], axis=0))
    errors = np.array(errors, dtype=np.int64)  # (S, U)
    res = SimResult(cfg.scheme, list(cfg.snr_points), labels)
    for u, lab in enumerate(labels):
        res.bit_errors[lab] = [int(e) for e in errors[:, u]]
        res.bits[lab] = [int(sent[u])] * len(cfg.snr_points)
        res.ber[lab] = [float(e) / float(sent[u]) for e in errors[:, u]]
    res.total_ber = [float(row.sum()) / float(sent.sum()) for row in errors]
    res.metadata = _metadata(cfg, scheme)
    return res


def _metadata(cfg: SimConfig, scheme: BlindIAScheme | None) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "seed": int(cfg.seed),
        "config_hash": config_hash(cfg),
        "snr_definition": SNR_DEFINITION,
        "bits_per_supersymbol": 2 * sum(_streams(cfg, scheme)),
        "rate_unit": "bits/s/Hz",
    }
    if scheme is not None:
        meta["c"] = scheme.c
        meta["d"] = scheme.d
    return meta


# -- ergodic rates ---------------------------------------------------------------

def _rate_channels(cfg: SimConfig) -> ChannelSet:
    # common random numbers: one batch reused at every SNR point
    return draw_channels(cfg.topology, make_rng(cfg.seed, _RATE_STREAM), batch=cfg.frames * cfg.draws_per_frame)


def _flatten_rates(topo: Topology, macro, femto) -> list:
    vals = [float(v) for v in macro]
    if isinstance(femto, dict):
        vals += [float(femto[key]) for key in sorted(femto)]
    else:
        vals += [float(v) for v in np.asarray(femto).reshape(-1)]
    return vals


def run_rate_sweep(cfg: SimConfig) -> SimResult:
    """Per-user ergodic rates (bits/s/Hz) and their sum at each SNR point.

    ``scheme == "tdma"`` delegates to :func:`tdma_baseline_rates`.
    """
    if cfg.scheme == "tdma":
        return tdma_baseline_rates(cfg)
    topo = cfg.topology
    labels = user_labels(topo)
    ch = _rate_channels(cfg)
    rows = []
    scheme = None
    if cfg.scheme == "hybrid":
        alloc = allocate_noma_powers(topo, cfg.power)
        for snr in cfg.snr_points:
            r = hybrid_rate(ch, alloc, cfg.power.at_snr(snr, topo.N), topo)
            rows.append(_flatten_rates(topo, r["macro"], r["femto"]))
    else:
        scheme = _blind_scheme(cfg, cfg.power)
        receivers = build_receivers(ch, scheme)
        for snr in cfg.snr_points:
            r = blind_ia_rate(ch, scheme, cfg.power.at_snr(snr, topo.N), receivers)
            rows.append(_flatten_rates(topo, r["macro"], r["femto"]))
    rows = np.array(rows) / _LN2
    res = SimResult(cfg.scheme, list(cfg.snr_points), labels)
    for u, lab in enumerate(labels):
        res.rate[lab] = [float(v) for v in rows[:, u]]
    res.sum_rate = [float(v) for v in rows.sum(axis=1)]
    res.metadata = _metadata(cfg, scheme)
    res.metadata["rate_draws"] = cfg.frames * cfg.draws_per_frame
    return res


def tdma_hybrid_user_rates(ch: ChannelSet, topo: Topology, power: PowerConfig) -> np.ndarray:
    """Per-user TDMA rates (nats per slot) in the hybrid context: macro users then femto users."""
    T, N, s2 = topo.hybrid_slots, topo.N, power.noise_variance
    hm = ch.macro
    gm = hm @ np.conj(np.swapaxes(hm, -1, -2))
    cm = power.p_macrocell / (N * s2) * topo.gamma_macro
    macro = log_det_hermitian(np.eye(N) + cm[:, None, None] * gm).reshape(-1, topo.K).mean(axis=0) / T
    hf = ch.femto
    gf = hf @ np.conj(np.swapaxes(hf, -1, -2))
    cf = power.p_femtocell / (N * s2) * topo.gamma_femto
    femto = log_det_hermitian(np.eye(topo.M_r) + cf[..., None, None] * gf).reshape(-1, topo.K * topo.L).mean(axis=0) / T
    return np.concatenate([macro, femto])


def tdma_baseline_rates(cfg: SimConfig) -> SimResult:
    """Single-active-user rates in the hybrid (T = L + 1) or Blind IA (T = K + 1) context.

    Hybrid context: macro (1/T) E log det(I + P_macro/(N s2) gamma h h*), femto
    (1/T) E log det(I + P_femto/(N s2) gamma h h*). Blind IA context: macro
    (1/T) E log det(I + P_macro/(N^2 s2) D K K* D*), femto identical to Blind IA.

    Users share the channel in time, so the reported sum rate is the mean of
    the per-user rates (each user is on the air 1/U of the time).
    """
    topo = cfg.topology
    labels = user_labels(topo)
    ch = _rate_channels(cfg)
    rows = []
    scheme = None
    if cfg.tdma_context == "hybrid":
        for snr in cfg.snr_points:
            rows.append(tdma_hybrid_user_rates(ch, topo, cfg.power.at_snr(snr, topo.N)))
    else:
        scheme = _blind_scheme(cfg, cfg.power)
        receivers = build_receivers(ch, scheme)
        for snr in cfg.snr_points:
            r = blind_ia_rate(ch, scheme, cfg.power.at_snr(snr, topo.N), receivers, macro_power_scale=topo.K)
            rows.append(_flatten_rates(topo, r["macro"], r["femto"]))
    rows = np.array(rows) / _LN2
    res = SimResult("tdma", list(cfg.snr_points), labels)
    for u, lab in enumerate(labels):
        res.rate[lab] = [float(v) for v in rows[:, u]]
    res.sum_rate = [float(v) for v in rows.mean(axis=1)]
    res.metadata = _metadata(cfg, scheme)
    res.metadata["tdma_context"] = cfg.tdma_context
    res.metadata["rate_draws"] = cfg.frames * cfg.draws_per_frame
    return res


# -- energy accounting -------------------------------------------------------------

def macro_energy(cfg: SimConfig, supersymbols: int = 20000) -> tuple:
    """Measured mean ||x_A||^2 per supersymbol and its configured value.

    Hybrid: the configured value is P_macro. Blind IA: the amplitude a
    satisfies P_macro = K N a^2 and each of the K beams carries a^2, so the
    configured value is P_macro / N.
    """
    topo = cfg.topology
    rng = make_rng(cfg.seed, 0xE7E7)
    K, N, L = topo.K, topo.N, topo.L
    u = qpsk_modulate(rng.integers(0, 2, size=(supersymbols, K, 2 * N)))
    if cfg.scheme == "blind_ia":
        scheme = _blind_scheme(cfg, cfg.power)
        x = sum(mb.V @ u[:, k, :, None] for k, mb in enumerate(scheme.macro))[..., 0]
        expected = cfg.power.p_macrocell / N
    else:
        basis = build_precoding_basis(topo.hybrid_slots)
        alloc = allocate_noma_powers(topo, cfg.power)
        x = hybrid_transmit(basis, alloc, u, np.zeros((supersymbols, K, L, N))).x_A
        expected = cfg.power.p_macrocell
    measured = float(np.mean(np.sum(np.abs(x) ** 2, axis=-1)))
    return measured, float(expected)
