"""Hybrid TIM-NOMA: orthogonal group precoding across cells, NOMA + SIC inside the macrocell.

The macrocell group uses precoding vector ``v_0`` and femtocell group ``l``
uses ``v_l``; all T = L + 1 vectors are orthonormal, so projecting a received
supersymbol onto ``v_g^T kron I_N`` removes every other group exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .linalg import log_det_hermitian
from .modulation import product_constellation
from . import kernels
from .network import ChannelSet, PowerConfig, Topology, apply_lifted, make_rng

__all__ = [
    "PrecodingBasis",
    "NomaPowerAllocation",
    "HybridTxFrame",
    "build_precoding_basis",
    "allocate_noma_powers",
    "hybrid_transmit",
    "hybrid_receive",
    "project",
    "macro_receive_project",
    "femto_receive_project",
    "sic_decode_macro",
    "hybrid_rate",
    "macro_interference_power",
]


@dataclass(frozen=True, eq=False)
class PrecodingBasis:
    """Rows ``vectors[g]`` are the group precoders; row 0 serves the macrocell."""

    vectors: np.ndarray

    @property
    def T(self) -> int:
        return self.vectors.shape[0]

    @property
    def v0(self) -> np.ndarray:
        return self.vectors[0]

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T


@dataclass(frozen=True)
class NomaPowerAllocation:
    p_macro_users: np.ndarray  # W per symbol entry, one per macro user
    p_femto: float  # W per symbol entry, every femto user
    a: float
    b: float
    N: int


@dataclass(frozen=True, eq=False)
class HybridTxFrame:
    x_A: np.ndarray  # (..., T*N)
    x_femto: np.ndarray  # (..., K, L, T*N)
    u_macro: np.ndarray  # (..., K, N)
    u_femto: np.ndarray  # (..., K, L, N)


def build_precoding_basis(T: int) -> PrecodingBasis:
    """T orthonormal precoders; the T == 2 pair is (1/2, sqrt3/2), (-sqrt3/2, 1/2).

    For T > 2 the basis comes from a QR factorisation of a fixed seeded
    matrix whose first column is all ones, so ``v_0`` has no zero entry.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if T == 1:
        vecs = np.ones((1, 1))
    elif T == 2:
        r3 = np.sqrt(3.0) / 2
        vecs = np.array([[0.5, r3], [-r3, 0.5]])
    else:
        rng = make_rng(0x5EED, T)
        A = rng.standard_normal((T, T))
        A[:, 0] = 1.0
        Q, R = np.linalg.qr(A)
        Q = Q * np.sign(np.diag(R))
        vecs = Q.T
    vecs = np.ascontiguousarray(vecs)
    vecs.setflags(write=False)
    return PrecodingBasis(vecs)


def allocate_noma_powers(topo: Topology, power: PowerConfig) -> NomaPowerAllocation:
    """Distance-squared NOMA split of the macro budget; femto budget split evenly over N."""
    N = topo.N
    a2 = power.p_macrocell
    d2 = topo.d_macro ** 2
    p = (a2 / N) * d2 / d2.sum()
    b2 = power.p_femtocell
    return NomaPowerAllocation(p_macro_users=p, p_femto=b2 / N, a=float(np.sqrt(a2)), b=float(np.sqrt(b2)), N=N)


def hybrid_transmit(basis: PrecodingBasis, alloc: NomaPowerAllocation, u_macro, u_femto) -> HybridTxFrame:
    """x_A = (v_0 kron I_N) sum_k sqrt(P_k) u_k and x_kl = (v_l kron I_N) sqrt(P_f) u_kl."""
    u_macro = np.asarray(u_macro, dtype=complex)
    u_femto = np.asarray(u_femto, dtype=complex)
    N, T = alloc.N, basis.T
    if u_macro.shape[-1] != N or u_femto.shape[-1] != N:
        raise DimensionMismatch(f"symbol vectors must have length N={N}")
    K = u_macro.shape[-2]
    L = u_femto.shape[-2]
    if u_femto.shape[-3] != K or L != T - 1:
        raise DimensionMismatch("femto symbols must be shaped (..., K, T-1, N)")
    s = np.einsum("k,...kn->...n", np.sqrt(alloc.p_macro_users), u_macro)
    # (v kron I_N) s == outer(v, s) flattened slot-major
    x_A = (basis.v0[:, None] * s[..., None, :]).reshape(s.shape[:-1] + (T * N,))
    vl = basis.vectors[1:]  # (L, T)
    xf = np.sqrt(alloc.p_femto) * vl[:, :, None] * u_femto[..., :, None, :]
    x_femto = xf.reshape(u_femto.shape[:-1] + (T * N,))
    return HybridTxFrame(x_A=x_A, x_femto=x_femto, u_macro=u_macro, u_femto=u_femto)


def _noise(rng, shape, var):
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def hybrid_receive(topo: Topology, ch: ChannelSet, frame: HybridTxFrame, noise_variance: float = 0.0, rng=None):
    """Received supersymbols at every macro and femto user.

    Returns ``(y_macro, y_femto)`` with shapes (..., K, T*N) and
    (..., K, L, T*N). With ``noise_variance == 0`` the output is noiseless.
    """
    K, L = topo.K, topo.L
    xA = frame.x_A
    xf = frame.x_femto
    y_macro = []
    for k in range(K):
        y = apply_lifted(ch.macro[..., k, :, :], ch.gamma_macro[k], xA)
        for l in range(L):
            y = y + apply_lifted(ch.femto_macro[..., k, l, :, :], ch.gamma_femto_macro[k, l], xf[..., k, l, :])
        y_macro.append(y)
    y_macro = np.stack(y_macro, axis=-2)
    y_femto = np.empty(xf.shape[:-1] + (y_macro.shape[-1] // topo.N * topo.M_r,), dtype=complex)
    for k in range(K):
        for l in range(L):
            y = apply_lifted(ch.femto[..., k, l, :, :], ch.gamma_femto[k, l], xf[..., k, l, :])
            y = y + apply_lifted(ch.macro_femto[..., k, l, :, :], ch.gamma_macro_femto[k, l], xA)
            for j in range(L):
                if j != l:
                    y = y + apply_lifted(
                        ch.femto_femto[..., k, j, l, :, :], ch.gamma_femto_femto[k, j, l], xf[..., k, j, :]
                    )
            y_femto[..., k, l, :] = y
    if noise_variance > 0:
        rng = make_rng(0) if rng is None else rng
        y_macro = y_macro + _noise(rng, y_macro.shape, noise_variance)
        y_femto = y_femto + _noise(rng, y_femto.shape, noise_variance)
    return y_macro, y_femto


def project(y, v) -> np.ndarray:
    """(v^T kron I_R) y for a supersymbol ``y`` of shape (..., T*R)."""
    y = np.asarray(y)
    v = np.asarray(v)
    T = v.shape[-1]
    yb = y.reshape(y.shape[:-1] + (T, y.shape[-1] // T))
    return np.einsum("t,...tr->...r", v, yb)


def macro_receive_project(y, basis: PrecodingBasis) -> np.ndarray:
    return project(y, basis.v0)


def femto_receive_project(y, basis: PrecodingBasis, group: int) -> np.ndarray:
    """Project onto femto group ``group`` (1-based, as in G_1..G_L)."""
    if not 1 <= group < basis.T:
        raise ValueError(f"femto group must be in 1..{basis.T - 1}")
    return project(y, basis.vectors[group])


def _gain_matrix(ch: ChannelSet, k: int, p: float) -> np.ndarray:
    return np.sqrt(ch.gamma_macro[k] * p) * ch.macro[..., k, :, :]


def sic_decode_macro(post, alloc: NomaPowerAllocation, ch: ChannelSet, topo: Topology, genie=None) -> np.ndarray:
    """Successive interference cancellation at every macro user.

    Parameters
    ----------
    post : array, shape (..., K, N)
        Projected signals, one per macro user.
    genie : array, shape (..., K, N), optional
        True symbols; when given, subtraction uses them instead of the
        hard decisions (diagnostic only).

    Returns
    -------
    decisions : array, shape (..., K, K, N)
        ``decisions[..., k, j]`` is user k's ML estimate of u_j. Entries for
        users k never decodes (stronger users) are NaN. The own decisions are
        the diagonal.
    """
    post = np.asarray(post)
    K, N = topo.K, topo.N
    order = topo.macro_order()  # strongest first
    cands = product_constellation(N)
    p = alloc.p_macro_users
    out = np.full(post.shape[:-2] + (K, K, N), np.nan + 0j, dtype=complex)
    for pos, k in enumerate(order):
        resid = post[..., k, :]
        # farther users carry more power: decode them weakest-first, then self
        for j in list(order[pos + 1 :][::-1]) + [k]:
            G = _gain_matrix(ch, k, p[j])
            est = cands[kernels.ml_detect(resid, G, cands)]
            out[..., k, j, :] = est
            if j != k:
                ref = est if genie is None else genie[..., j, :]
                resid = resid - np.einsum("...mn,...n->...m", G, ref)
    return out


def macro_interference_power(ch: ChannelSet, alloc: NomaPowerAllocation, topo: Topology) -> np.ndarray:
    """Residual intra-cell interference per receive dimension after SIC.

    For each user k this sums gamma_k ||h_k||_F^2 / N * P_j over the stronger
    users j that k cannot cancel. Shape (..., K).
    """
    order = topo.macro_order()
    K, N = topo.K, topo.N
    fro = np.sum(np.abs(ch.macro) ** 2, axis=(-2, -1))  # (..., K)
    out = np.zeros(fro.shape)
    for pos, k in enumerate(order):
        stronger = order[:pos]
        pj = alloc.p_macro_users[stronger].sum() if len(stronger) else 0.0
        out[..., k] = ch.gamma_macro[k] * fro[..., k] / N * pj
    return out


def hybrid_rate(ch: ChannelSet, alloc: NomaPowerAllocation, power: PowerConfig, topo: Topology) -> dict:
    """Ergodic per-user rates (nats per slot), averaged over the batch of draws.

    Macro user k: (1/T) E log det(I + P_k gamma_k h h^H / S_k) with
    S_k = residual interference (see :func:`macro_interference_power`) + sigma^2.
    Femto user kl: (1/T) E log det(I + P_f,tot/(N sigma^2) gamma h h^H).
    """
    T = topo.hybrid_slots
    N = topo.N
    s2 = power.noise_variance
    S = macro_interference_power(ch, alloc, topo) + s2  # (..., K)
    h = ch.macro
    hh = h @ np.conj(np.swapaxes(h, -1, -2))
    coef = alloc.p_macro_users * topo.gamma_macro / S  # (..., K)
    ld = log_det_hermitian(np.eye(N) + coef[..., None, None] * hh)
    macro = np.asarray(ld).reshape(-1, topo.K).mean(axis=0) / T
    hf = ch.femto
    hhf = hf @ np.conj(np.swapaxes(hf, -1, -2))
    coef_f = power.p_femtocell / (N * s2) * topo.gamma_femto
    ldf = log_det_hermitian(np.eye(topo.M_r) + coef_f[..., None, None] * hhf)
    femto = np.asarray(ldf).reshape(-1, topo.K, topo.L).mean(axis=0) / T
    return {"macro": macro, "femto": femto}
