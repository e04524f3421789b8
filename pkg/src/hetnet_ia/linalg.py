"""Dense complex linear algebra shared by the transmit/receive constructions.

Orthogonality throughout this package is *bilinear*: a row ``w`` annihilates a
vector ``x`` when ``w @ x == 0`` (no conjugation). That is the condition the
receive projections need, since they multiply the channel directly.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, FullRank, NotPositiveDefinite

__all__ = [
    "RANK_TOL",
    "kron",
    "orthonormal_complement",
    "log_det_hermitian",
    "unit_vector",
    "basis_vector",
    "is_row_orthonormal",
]

# relative singular-value threshold for rank decisions
RANK_TOL = 1e-10


def kron(a, b) -> np.ndarray:
    """Kronecker product of two non-empty matrices.

    Vectors are promoted to column matrices so ``kron(v, I)`` with a length-T
    ``v`` gives the TN x N stacked form used by the precoders.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0 or b.size == 0:
        raise DimensionMismatch("kron of an empty matrix")
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    return np.kron(a, b)


def _complement_2d(v: np.ndarray) -> np.ndarray:
    # closed form in C^2: [-v1, v0] annihilates v
    row = np.stack([-v[..., 1], v[..., 0]], axis=-1)
    norm = np.linalg.norm(row, axis=-1, keepdims=True)
    return (row / norm)[..., None, :]


def orthonormal_complement(vs, dim: int | None = None, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal rows annihilating every input vector.

    Parameters
    ----------
    vs : array_like, shape (..., r, dim)
        Input vectors stacked as rows. Leading axes are treated as a batch;
        every batch item must have the same rank.
    dim : int, optional
        Ambient dimension, checked against ``vs`` when given.
    tol : float
        Relative singular-value threshold used to decide the rank.

    Returns
    -------
    ndarray, shape (..., dim - rank, dim)
        Rows ``W`` with ``W @ v == 0`` for every input ``v`` and
        ``W @ W.conj().T == I``.

    Raises
    ------
    FullRank
        If the inputs span the whole space.
    """
    vs = np.asarray(vs, dtype=complex)
    if vs.ndim == 1:
        vs = vs[None, :]
    if dim is not None and vs.shape[-1] != dim:
        raise DimensionMismatch(f"vectors have length {vs.shape[-1]}, expected {dim}")
    dim = vs.shape[-1]

    # orthogonal decomposition of the stacked vectors
    _, sv, vh = np.linalg.svd(vs, full_matrices=True)
    scale = np.max(np.abs(sv), axis=-1, keepdims=True) if sv.shape[-1] else np.zeros(sv.shape[:-1] + (1,))
    ranks = np.sum(sv > tol * np.where(scale > 0, scale, 1.0), axis=-1)
    rank = int(ranks.flat[0]) if ranks.size else 0
    if ranks.size and np.any(ranks != rank):
        raise FullRank("batch items have differing rank; complement is not uniform")
    if rank >= dim:
        raise FullRank(f"inputs span all of C^{dim}")
    if dim == 2 and rank == 1:
        # pick the dominant input direction; matches the textbook 2x2 form
        lead = vs[..., 0, :]
        weak = np.linalg.norm(lead, axis=-1) <= tol * scale[..., 0]
        if not np.any(weak):
            return _complement_2d(lead)
    return np.conj(vh[..., rank:, :])


def log_det_hermitian(m) -> np.ndarray | float:
    """Natural-log determinant of a Hermitian positive-definite matrix.

    Uses a Cholesky factorisation, so it works on a stack ``(..., n, n)`` and
    raises :class:`NotPositiveDefinite` on indefinite input.
    """
    m = np.asarray(m)
    if m.shape[-1] != m.shape[-2]:
        raise DimensionMismatch("log_det_hermitian needs a square matrix")
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    diag = np.real(np.diagonal(chol, axis1=-2, axis2=-1))
    out = 2.0 * np.sum(np.log(diag), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v)
    n = np.linalg.norm(v)
    if n == 0:
        raise DimensionMismatch("cannot normalise the zero vector")
    return v / n


def basis_vector(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim)
    e[index] = 1.0
    return e


def is_row_orthonormal(m, atol: float = 1e-10) -> bool:
    m = np.asarray(m)
    gram = m @ np.conj(np.swapaxes(m, -1, -2))
    return bool(np.allclose(gram, np.eye(m.shape[-2]), atol=atol, rtol=0))
