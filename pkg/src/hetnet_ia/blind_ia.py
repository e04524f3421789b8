"""Blind interference alignment over a T = K + 1 slot supersymbol.

Slot convention: slot 0 is the broadcast slot in which the macro BS serves
every macro user; slot k + 1 is exclusive to macro user k (0-based k).

Transmitters know only this schedule (no channel state). Each receiver builds
a projection from its own channel knowledge that annihilates every
interfering beam, leaving a square effective channel to its own streams.

Femtocell groups
----------------
``L == 1``   one femto per macro user; it sends ``M_r - 1`` streams on the
             non-exclusive slots and one stream on the last antenna during the
             macro user's exclusive slot.
``L > 1``    femto index 1 (0-based) forms group G_2 and sends a single stream
             on its last antenna in the exclusive slot; the others form G_1 and
             send ``N - L + 1`` streams on their first antennas in every other
             slot.

Only K == 2 is interference-free with these constructions: the femto receive
subspace left after removing all macro beams has just M_r dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannel, DimensionMismatch, FactorizationMismatch, FullRank, InvalidParameter
from .linalg import kron, log_det_hermitian, orthonormal_complement
from .network import ChannelSet, PowerConfig, Topology, apply_lifted, draw_channels

__all__ = [
    "MacroBeamformer",
    "FemtoBeamformer",
    "BlindIAScheme",
    "MacroProjection",
    "FemtoProjection",
    "EffectiveChannel",
    "default_c",
    "default_d",
    "build_macro_beamformers",
    "build_femto_beamformers_general",
    "build_femto_beamformers_L1",
    "build_scheme",
    "macro_slot_vectors",
    "femto_slot_vector",
    "build_macro_projection",
    "build_femto_projection_general",
    "build_femto_projection_L1",
    "build_receivers",
    "effective_channel",
    "macro_effective_channel",
    "femto_effective_channel",
    "interference_terms",
    "blind_receive",
    "blind_ia_rate",
    "macro_schedule_factor",
    "femto_schedule_factor",
    "optimize_schedule_params",
]

FACTOR_TOL = 1e-8


# -- transmit side -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MacroBeamformer:
    k: int
    v: np.ndarray  # (T,) unit slot vector
    V: np.ndarray  # (T*N, N) = a/sqrt(N) (v kron I_N)
    c: float
    a: float


@dataclass(frozen=True, eq=False)
class FemtoBeamformer:
    k: int
    l: int
    group: str  # "L1", "G1" or "G2"
    xi: tuple  # per-component slot vectors, each (T,)
    r: tuple  # per-component antenna selectors, each (N, m_i)
    q: tuple  # per-component message selectors, each (m_i, M)
    V: np.ndarray  # (T*N, M)
    b: float
    d: float

    @property
    def schedule(self) -> np.ndarray:
        return np.sum(self.xi, axis=0)

    @property
    def messages(self) -> int:
        return self.V.shape[1]


def _check_c(c: float) -> None:
    if not np.isfinite(c) or abs(c) >= 1 or c == 0:
        raise InvalidParameter(f"c must satisfy 0 < |c| < 1, got {c}")


def default_c(topo: Topology) -> float:
    """Maximiser of |det D| for the macro users: c = 1/sqrt(N + 1)."""
    return float(1.0 / np.sqrt(topo.N + 1))


def _l1_streams(topo: Topology) -> int:
    return topo.M_r - 1


def _d_limit(topo: Topology) -> float:
    T = topo.blind_slots
    if topo.L == 1:
        return float(1.0 / np.sqrt((T - 1) * _l1_streams(topo)))
    return float(1.0 / np.sqrt(T - 2))


def default_d(topo: Topology, c: float | None = None) -> float:
    """Closed-form maximiser of the femto scheduling determinant."""
    T = topo.blind_slots
    if topo.L == 1:
        return float(1.0 / np.sqrt((T - 1) * topo.M_r))
    c = default_c(topo) if c is None else c
    return float(-c)


def _check_d(topo: Topology, d: float) -> None:
    lim = _d_limit(topo)
    if not np.isfinite(d) or d == 0 or abs(d) >= lim:
        raise InvalidParameter(f"d must satisfy 0 < |d| < {lim:.6g}, got {d}")


def build_macro_beamformers(topo: Topology, c: float, a: float) -> list[MacroBeamformer]:
    """v_k = c e_0 + sqrt(1 - c^2) e_{k+1};  V_k = a/sqrt(N) (v_k kron I_N)."""
    _check_c(c)
    T, N = topo.blind_slots, topo.N
    s = np.sqrt(1 - c * c)
    out = []
    for k in range(topo.K):
        v = np.zeros(T)
        v[0] = c
        v[k + 1] = s
        out.append(MacroBeamformer(k=k, v=v, V=a / np.sqrt(N) * kron(v, np.eye(N)), c=c, a=a))
    return out


def _assemble(xi, r, q, b, N) -> np.ndarray:
    V = sum(np.kron(x[:, None], ri @ qi) for x, ri, qi in zip(xi, r, q))
    return b / np.sqrt(N) * V


def build_femto_beamformers_general(topo: Topology, d: float, b1: float, b2: float) -> list[FemtoBeamformer]:
    """Group G_1 / G_2 femto beamformers for 1 < L <= 3.

    G_1 members send M_1 = N - L + 1 streams on their first M_1 antennas in
    every slot except the macro user's exclusive slot; the broadcast slot
    carries weight sqrt(1 - (T-2) d^2) and the remaining slots d. The G_2
    member sends one stream on its last antenna in the exclusive slot.
    """
    topo.require_blind()
    if topo.L < 2:
        raise InvalidParameter("general construction needs L > 1; use build_femto_beamformers_L1")
    _check_d(topo, d)
    T, N, L = topo.blind_slots, topo.N, topo.L
    M1 = N - L + 1
    eye = np.eye(N)
    r = eye[:, :M1]
    eN = eye[:, N - 1 :]
    out = []
    for k in range(topo.K):
        excl = k + 1
        for l in range(L):
            if l == 1:
                xi = np.zeros(T)
                xi[excl] = 1.0
                out.append(
                    FemtoBeamformer(k, l, "G2", (xi,), (eN,), (np.ones((1, 1)),), _assemble((xi,), (eN,), (np.ones((1, 1)),), b2, N), b2, d)
                )
                continue
            xis = []
            for t in range(T):
                if t == excl:
                    continue
                x = np.zeros(T)
                x[t] = np.sqrt(1 - (T - 2) * d * d) if t == 0 else d
                xis.append(x)
            rs = tuple(r for _ in xis)
            qs = tuple(np.eye(M1) for _ in xis)
            out.append(FemtoBeamformer(k, l, "G1", tuple(xis), rs, qs, _assemble(xis, rs, qs, b1, N), b1, d))
    return out


def build_femto_beamformers_L1(topo: Topology, d: float, b: float) -> list[FemtoBeamformer]:
    """Femto beamformers when a single femtocell sits next to each macro user.

    The M_r - 1 "d" streams use the first M_r - 1 antennas on every slot
    except the macro user's exclusive slot; the last stream uses antenna N in
    the exclusive slot with weight sqrt(1 - (T-1)(M_r-1) d^2).
    """
    topo.require_blind()
    if topo.L != 1:
        raise InvalidParameter("L == 1 construction requested for L != 1")
    _check_d(topo, d)
    T, N = topo.blind_slots, topo.N
    md = _l1_streams(topo)
    M = md + 1
    eye = np.eye(N)
    r_d = eye[:, :md]
    eN = eye[:, N - 1 :]
    q_d = np.eye(M)[:md]
    q_T = np.eye(M)[M - 1 :]
    out = []
    for k in range(topo.K):
        excl = k + 1
        xis, rs, qs = [], [], []
        for t in range(T):
            if t == excl:
                continue
            x = np.zeros(T)
            x[t] = d
            xis.append(x)
            rs.append(r_d)
            qs.append(q_d)
        x = np.zeros(T)
        x[excl] = np.sqrt(1 - (T - 1) * md * d * d)
        xis.append(x)
        rs.append(eN)
        qs.append(q_T)
        out.append(FemtoBeamformer(k, 0, "L1", tuple(xis), tuple(rs), tuple(qs), _assemble(xis, rs, qs, b, N), b, d))
    return out


@dataclass(frozen=True, eq=False)
class BlindIAScheme:
    topo: Topology
    c: float
    d: float
    a: float
    macro: list
    femto: dict  # (k, l) -> FemtoBeamformer

    @property
    def T(self) -> int:
        return self.topo.blind_slots

    def femto_keys(self) -> list:
        return sorted(self.femto)


def build_scheme(topo: Topology, power: PowerConfig, c: float | None = None, d: float | None = None) -> BlindIAScheme:
    """All beamformers for one topology.

    Amplitudes follow the power constraints P_macro = K N a^2 and
    P_femto = M b^2 / N for a femto sending M streams.
    """
    topo.require_blind()
    c = default_c(topo) if c is None else float(c)
    d = default_d(topo, c) if d is None else float(d)
    K, N = topo.K, topo.N
    a = np.sqrt(power.p_macrocell / (K * N))
    macro = build_macro_beamformers(topo, c, a)
    if topo.L == 1:
        M = topo.M_r
        fem = build_femto_beamformers_L1(topo, d, np.sqrt(N * power.p_femtocell / M))
    else:
        M1 = N - topo.L + 1
        fem = build_femto_beamformers_general(
            topo, d, np.sqrt(N * power.p_femtocell / M1), np.sqrt(N * power.p_femtocell)
        )
    return BlindIAScheme(topo, c, d, float(a), macro, {(f.k, f.l): f for f in fem})


# -- receive side --------------------------------------------------------------

def macro_slot_vectors(topo: Topology, k: int, c: float) -> np.ndarray:
    """Rows (w_1, w_2) for macro user k; both annihilate every other macro user's v.

    w_2 picks the exclusive slot; w_1 mixes the broadcast slot with the other
    users' exclusive slots.
    """
    T = topo.blind_slots
    s = np.sqrt(1 - c * c)
    w1 = np.zeros(T)
    w1[0] = -s
    for i in range(topo.K):
        if i != k:
            w1[i + 1] = c
    w1 /= np.linalg.norm(w1)
    w2 = np.zeros(T)
    w2[k + 1] = 1.0
    return np.stack([w1, w2])


def femto_slot_vector(topo: Topology, c: float) -> np.ndarray:
    """Unit w annihilating every macro slot vector: proportional to (s, -c, ..., -c)."""
    s = np.sqrt(1 - c * c)
    w = np.full(topo.blind_slots, -c)
    w[0] = s
    return w / np.linalg.norm(w)


@dataclass(frozen=True, eq=False)
class MacroProjection:
    k: int
    w: np.ndarray  # (2, T)
    D: np.ndarray  # (2, N, N) row selectors
    htilde: np.ndarray  # (..., N, N)
    P: np.ndarray  # (..., N, T*N)


@dataclass(frozen=True, eq=False)
class FemtoProjection:
    k: int
    l: int
    w: np.ndarray  # (T,)
    W: np.ndarray  # (..., M, M_r)
    P: np.ndarray  # (..., M, T*M_r)


def _complement(cols: np.ndarray, what: str) -> np.ndarray:
    # rows annihilating the given columns (..., n, m)
    try:
        return orthonormal_complement(np.swapaxes(cols, -1, -2))
    except FullRank as exc:
        raise DegenerateChannel(f"{what}: {exc}") from None


def _batched_kron_row(w: np.ndarray, M: np.ndarray) -> np.ndarray:
    # kron(w[None, :], M) for batched M (..., a, b) -> (..., a, T*b)
    out = w[:, None, None] * M[..., None, :, :]  # (..., T, a, b)
    out = np.moveaxis(out, -3, -2)  # (..., a, T, b)
    return out.reshape(out.shape[:-2] + (-1,))


def build_macro_projection(ch: ChannelSet, scheme: BlindIAScheme, k: int) -> MacroProjection:
    """P = sum_s w_s kron (D_s htilde) for macro user k.

    The last row of htilde annihilates the femto streams sent on the first
    antennas (seen through w_1); the other N - 1 rows annihilate the stream
    sent on the last antenna in the exclusive slot (seen through w_2).
    """
    topo = scheme.topo
    N = topo.N
    if topo.L == 1:
        f = scheme.femto[(k, 0)]
        hfa = ch.femto_macro[..., k, 0, :, :]
        A = hfa @ f.r[0]
        B = hfa @ f.r[-1]
    else:
        blocks = [ch.femto_macro[..., k, l, :, :] @ scheme.femto[(k, l)].r[0] for l in range(topo.L) if l != 1]
        A = np.concatenate(blocks, axis=-1)
        B = ch.femto_macro[..., k, 1, :, :] @ scheme.femto[(k, 1)].r[0]
    top = _complement(B, f"macro user {k}, exclusive-slot stream")
    last = _complement(A, f"macro user {k}, first-antenna streams")[..., :1, :]
    if top.shape[-2] != N - 1:
        raise DegenerateChannel(f"macro user {k}: exclusive-slot complement has dimension {top.shape[-2]}")
    ht = np.concatenate([top, last], axis=-2)
    if np.any(np.abs(np.linalg.det(ht)) < 1e-10):
        raise DegenerateChannel(f"macro user {k}: htilde is singular")
    w = macro_slot_vectors(topo, k, scheme.c)
    eN = np.zeros(N)
    eN[-1] = 1.0
    D = np.stack([np.diag(eN), np.diag(1 - eN)])
    P = _batched_kron_row(w[0], D[0] @ ht) + _batched_kron_row(w[1], D[1] @ ht)
    return MacroProjection(k, w, D, ht, P)


def build_femto_projection_general(ch: ChannelSet, scheme: BlindIAScheme, k: int, l: int) -> FemtoProjection:
    """P = w kron W for a femto user in G_1 (l != 1) or G_2 (l == 1)."""
    topo = scheme.topo
    if topo.L < 2:
        raise InvalidParameter("general femto projection needs L > 1")
    f = scheme.femto[(k, l)]
    w = femto_slot_vector(topo, scheme.c)
    if f.group == "G1":
        g2 = scheme.femto[(k, 1)]
        cols = ch.femto_femto[..., k, 1, l, :, :] @ g2.r[0]
    else:
        cols = np.concatenate(
            [ch.femto_femto[..., k, j, l, :, :] @ scheme.femto[(k, j)].r[0] for j in range(topo.L) if j != 1],
            axis=-1,
        )
    W = _complement(cols, f"femto user ({k},{l})")
    M = f.messages
    if W.shape[-2] < M:
        raise DegenerateChannel(f"femto user ({k},{l}): only {W.shape[-2]} free dimensions for {M} streams")
    W = W[..., :M, :]
    return FemtoProjection(k, l, w, W, _batched_kron_row(w, W))


def build_femto_projection_L1(scheme: BlindIAScheme, k: int, batch_shape: tuple = ()) -> FemtoProjection:
    """P = w kron I_{M_r}; w alone removes every macro beam, no femto interferes."""
    topo = scheme.topo
    w = femto_slot_vector(topo, scheme.c)
    W = np.broadcast_to(np.eye(topo.M_r), tuple(batch_shape) + (topo.M_r, topo.M_r))
    return FemtoProjection(k, 0, w, W, _batched_kron_row(w, W))


def build_receivers(ch: ChannelSet, scheme: BlindIAScheme):
    """Projections for every receiver: ``(list of MacroProjection, dict of FemtoProjection)``."""
    topo = scheme.topo
    macro = [build_macro_projection(ch, scheme, k) for k in range(topo.K)]
    if topo.L == 1:
        femto = {(k, 0): build_femto_projection_L1(scheme, k, ch.batch_shape) for k in range(topo.K)}
    else:
        femto = {key: build_femto_projection_general(ch, scheme, *key) for key in scheme.femto_keys()}
    return macro, femto


# -- effective channels ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    H: np.ndarray  # (..., m, m) factored form
    D: np.ndarray  # scheduling factor (delta stored as a 1x1 matrix for G_2)
    K: np.ndarray  # channel-dependent factor
    scale: float  # amplitude a/sqrt(N) or b/sqrt(N)
    kind: str  # "macro", "femto" or "femto_g2"
    mismatch: float = field(default=0.0)


def effective_channel(P, h, gamma, V, factored: EffectiveChannel, tol: float = FACTOR_TOL) -> EffectiveChannel:
    """Check P (I_T kron sqrt(gamma) h) V against the factored form and return the latter."""
    direct = np.asarray(P) @ apply_lifted(h, gamma, V, matrix=True)
    err = float(np.max(np.abs(direct - factored.H))) if direct.size else 0.0
    if not err <= tol:
        raise FactorizationMismatch(f"{factored.kind}: |P H V - factored| = {err:.3e} > {tol:g}")
    return EffectiveChannel(factored.H, factored.D, factored.K, factored.scale, factored.kind, err)


def macro_schedule_factor(topo: Topology, k: int, c: float) -> np.ndarray:
    """Diagonal D = sum_s (w_s . v_k) D_s for macro user k."""
    v = build_macro_beamformers(topo, c, 1.0)[k].v
    w = macro_slot_vectors(topo, k, c)
    N = topo.N
    diag = np.full(N, w[1] @ v)
    diag[-1] = w[0] @ v
    return np.diag(diag)


def femto_schedule_factor(f: FemtoBeamformer, w: np.ndarray) -> np.ndarray:
    """D for a femto user: sum_i (w . xi_i) r_i q_i (L1), sum_i (w . xi_i) q_i (G1), w . v (G2)."""
    if f.group == "L1":
        return sum((w @ x) * (r @ q) for x, r, q in zip(f.xi, f.r, f.q))
    if f.group == "G1":
        return sum((w @ x) * q for x, q in zip(f.xi, f.q))
    return np.array([[w @ f.schedule]])


def macro_effective_channel(ch: ChannelSet, scheme: BlindIAScheme, proj: MacroProjection, check: bool = True) -> EffectiveChannel:
    """H = a/sqrt(N) D K with K = sqrt(gamma) htilde h."""
    k = proj.k
    topo = scheme.topo
    D = macro_schedule_factor(topo, k, scheme.c)
    h = ch.macro[..., k, :, :]
    g = ch.gamma_macro[k]
    Kc = np.sqrt(g) * proj.htilde @ h
    scale = scheme.a / np.sqrt(topo.N)
    fac = EffectiveChannel(scale * D @ Kc, D, Kc, scale, "macro")
    if not check:
        return fac
    return effective_channel(proj.P, h, g, scheme.macro[k].V, fac)


def femto_effective_channel(ch: ChannelSet, scheme: BlindIAScheme, proj: FemtoProjection, check: bool = True) -> EffectiveChannel:
    """Factored femto effective channel (K D for L1 / G_1, delta K for G_2)."""
    k, l = proj.k, proj.l
    f = scheme.femto[(k, l)]
    h = ch.femto[..., k, l, :, :]
    g = ch.gamma_femto[k, l]
    D = femto_schedule_factor(f, proj.w)
    scale = f.b / np.sqrt(scheme.topo.N)
    if f.group == "L1":
        Kc = np.sqrt(g) * proj.W @ h
        fac = EffectiveChannel(scale * Kc @ D, D, Kc, scale, "femto")
    elif f.group == "G1":
        Kc = np.sqrt(g) * proj.W @ h @ f.r[0]
        fac = EffectiveChannel(scale * Kc @ D, D, Kc, scale, "femto")
    else:
        Kc = np.sqrt(g) * proj.W @ h @ f.r[0]
        fac = EffectiveChannel(scale * D[0, 0] * Kc, D, Kc, scale, "femto_g2")
    if not check:
        return fac
    return effective_channel(proj.P, h, g, f.V, fac)


def interference_terms(ch: ChannelSet, scheme: BlindIAScheme, receivers=None) -> list:
    """Every noiseless interference coefficient P_rx H_link V_tx.

    Returns a list of ``(receiver, interferer, coefficient)`` with labels like
    ``"a0"`` and ``"f0,1"``. All coefficients vanish for a correct scheme.
    """
    topo = scheme.topo
    macro_p, femto_p = build_receivers(ch, scheme) if receivers is None else receivers
    out = []
    for k, pr in enumerate(macro_p):
        for i, mb in enumerate(scheme.macro):
            if i != k:
                out.append((f"a{k}", f"a{i}", pr.P @ apply_lifted(ch.macro[..., k, :, :], ch.gamma_macro[k], mb.V, matrix=True)))
        for l in range(topo.L):
            f = scheme.femto[(k, l)]
            hv = apply_lifted(ch.femto_macro[..., k, l, :, :], ch.gamma_femto_macro[k, l], f.V, matrix=True)
            out.append((f"a{k}", f"f{k},{l}", pr.P @ hv))
    for (k, l), pr in femto_p.items():
        rx = f"f{k},{l}"
        for i, mb in enumerate(scheme.macro):
            hv = apply_lifted(ch.macro_femto[..., k, l, :, :], ch.gamma_macro_femto[k, l], mb.V, matrix=True)
            out.append((rx, f"a{i}", pr.P @ hv))
        for j in _femto_interferers(topo, l):
            f = scheme.femto[(k, j)]
            hv = apply_lifted(ch.femto_femto[..., k, j, l, :, :], ch.gamma_femto_femto[k, j, l], f.V, matrix=True)
            out.append((rx, f"f{k},{j}", pr.P @ hv))
    return out


def _femto_interferers(topo: Topology, l: int) -> list:
    # G_1 members hear only G_2; G_2 hears every G_1 member; L == 1 hears none
    if topo.L == 1:
        return []
    if l == 1:
        return [j for j in range(topo.L) if j != 1]
    return [1]


# -- full chain ----------------------------------------------------------------------

def blind_receive(ch: ChannelSet, scheme: BlindIAScheme, u_macro, u_femto: dict, noise_variance=0.0, rng=None, active=None):
    """Received supersymbols at every user.

    ``u_macro`` is (..., K, N); ``u_femto[(k, l)]`` is (..., M_kl). ``active``
    optionally restricts which transmitters radiate (labels ``"a{k}"`` /
    ``(k, l)``), used for single-user baselines.

    Returns ``(y_macro (..., K, T*N), y_femto dict of (..., T*M_r))``.
    """
    topo = scheme.topo
    K, L = topo.K, topo.L
    u_macro = np.asarray(u_macro)
    on_m = [active is None or f"a{i}" in active for i in range(K)]
    on_f = {key: active is None or key in active for key in scheme.femto}
    x_A = sum(mb.V @ u_macro[..., i, :, None] for i, mb in enumerate(scheme.macro) if on_m[i])
    x_A = np.zeros(u_macro.shape[:-2] + (scheme.T * topo.N, 1), complex) if np.isscalar(x_A) else x_A
    x_f = {key: (f.V @ np.asarray(u_femto[key])[..., None]) * on_f[key] for key, f in scheme.femto.items()}

    def lift(h, g, x):
        return apply_lifted(h, g, x, matrix=True)[..., 0]

    y_macro = []
    for k in range(K):
        y = lift(ch.macro[..., k, :, :], ch.gamma_macro[k], x_A)
        for l in range(L):
            y = y + lift(ch.femto_macro[..., k, l, :, :], ch.gamma_femto_macro[k, l], x_f[(k, l)])
        y_macro.append(y)
    y_macro = np.stack(y_macro, axis=-2)
    y_femto = {}
    for (k, l) in scheme.femto:
        y = lift(ch.femto[..., k, l, :, :], ch.gamma_femto[k, l], x_f[(k, l)])
        y = y + lift(ch.macro_femto[..., k, l, :, :], ch.gamma_macro_femto[k, l], x_A)
        for j in _femto_interferers(topo, l):
            y = y + lift(ch.femto_femto[..., k, j, l, :, :], ch.gamma_femto_femto[k, j, l], x_f[(k, j)])
        y_femto[(k, l)] = y
    if noise_variance > 0:
        if rng is None:
            raise ValueError("noisy reception needs an rng")
        sd = np.sqrt(noise_variance / 2)
        y_macro = y_macro + sd * (rng.standard_normal(y_macro.shape) + 1j * rng.standard_normal(y_macro.shape))
        for key in sorted(y_femto):
            y = y_femto[key]
            y_femto[key] = y + sd * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y_macro, y_femto


# -- rates ---------------------------------------------------------------------------

def _gram(A):
    return A @ np.conj(np.swapaxes(A, -1, -2))


def blind_ia_rate(ch: ChannelSet, scheme: BlindIAScheme, power: PowerConfig, receivers=None, macro_power_scale: float = 1.0) -> dict:
    """Ergodic per-user rates (nats per slot) averaged over the batch of draws.

    Macro: (1/T) E log det(I + P/(K N^2 s2) D K K* D*); G_1 / L1 femto:
    (1/T) E log det(I + P_f/(M s2) K D D* K*); G_2: (1/T) E log(1 + P_f/s2 |delta|^2 |K|^2).
    ``macro_power_scale`` multiplies the macro SNR factor (K for the TDMA baseline).
    """
    topo = scheme.topo
    T, K, N = scheme.T, topo.K, topo.N
    s2 = power.noise_variance
    macro_p, femto_p = build_receivers(ch, scheme) if receivers is None else receivers
    macro = np.zeros(K)
    for k, pr in enumerate(macro_p):
        eff = macro_effective_channel(ch, scheme, pr, check=False)
        DK = eff.D @ eff.K
        rho = macro_power_scale * power.p_macrocell / (K * N * N * s2)
        ld = log_det_hermitian(np.eye(N) + rho * _gram(DK))
        macro[k] = np.mean(ld) / T
    femto = {}
    for key, pr in femto_p.items():
        f = scheme.femto[key]
        eff = femto_effective_channel(ch, scheme, pr, check=False)
        if eff.kind == "femto_g2":
            g = np.abs(eff.D[0, 0]) ** 2 * np.abs(eff.K[..., 0, 0]) ** 2
            val = np.log1p(power.p_femtocell / s2 * g)
        else:
            M = f.messages
            KD = eff.K @ eff.D
            val = log_det_hermitian(np.eye(M) + power.p_femtocell / (M * s2) * _gram(KD))
        femto[key] = float(np.mean(val)) / T
    return {"macro": macro, "femto": femto}


# -- schedule parameter search ----------------------------------------------------------

def _golden_refine(fun, lo, hi, tol=1e-9):
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda x: -fun(x), bounds=(lo, hi), method="bounded", options={"xatol": tol})
    return float(res.x)


def optimize_schedule_params(topo: Topology, draws: int = 500, seed: int = 0, step: float = 1e-3, power: PowerConfig | None = None):
    """Search for (c, d) maximising the high-SNR rate proxy.

    The objective for c is E[log det(D K K* D*)] at macro user 0 and for d
    (at the best c) E[log det(K D D* K*)] at the first femto user; K is the
    channel factor from ``draws`` common channel realisations (``draws=0``
    drops it, leaving log |det D|^2). A grid of spacing ``step`` over
    the admissible interval is followed by a bounded golden-section
    refinement around the best grid point. Returns ``(c, d)`` with c > 0, d > 0 for L == 1.
    """
    topo.require_blind()
    power = power or PowerConfig()
    c0 = default_c(topo)
    scheme0 = build_scheme(topo, power, c0, default_d(topo, c0))
    if draws > 0:
        ch = draw_channels(topo, seed, batch=draws)
        mp, fp = build_receivers(ch, scheme0)
        Km = macro_effective_channel(ch, scheme0, mp[0], check=False).K
        fkey = scheme0.femto_keys()[0]
        Kf = femto_effective_channel(ch, scheme0, fp[fkey], check=False).K
    else:
        Km = Kf = None
        fkey = scheme0.femto_keys()[0]

    def obj_c(c):
        D = macro_schedule_factor(topo, 0, c)
        if Km is None:
            return 2 * np.log(abs(np.linalg.det(D)))
        return float(np.mean(log_det_hermitian(_gram(D @ Km))))

    lim_d = _d_limit(topo)

    def obj_d(dv, c):
        sch = build_scheme(topo, power, c, dv)
        f = sch.femto[fkey]
        D = femto_schedule_factor(f, femto_slot_vector(topo, c))
        if f.group == "G2":
            return 2 * np.log(abs(D[0, 0]))
        if Kf is None:
            return 2 * np.log(abs(np.linalg.det(D)))
        return float(np.mean(log_det_hermitian(_gram(Kf @ D))))

    def search(fun, lo, hi):
        grid = np.arange(lo + step, hi, step)
        vals = np.array([fun(x) for x in grid])
        i = int(np.nanargmax(vals))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        return _golden_refine(fun, a, b)

    c_star = search(obj_c, 0.0, 1.0)
    if topo.L == 1:
        d_star = search(lambda x: obj_d(x, c_star), 0.0, lim_d)
    else:
        d_star = search(lambda x: obj_d(x, c_star), -lim_d, lim_d)
    return c_star, d_star
