"""Hot inner loops: exhaustive ML search and bit-error counting.

Each kernel has a numba ``@njit`` version and a pure-numpy version with the
same signature. The numba path is used when numba imports cleanly and the
environment variable ``HETNET_IA_DISABLE_NUMBA`` is unset (or ``0``). Call
:func:`set_backend` to switch at runtime, e.g. from the benchmark script.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "backend",
    "set_backend",
    "ml_detect",
    "ml_detect_numpy",
    "count_bit_errors",
    "count_bit_errors_numpy",
]

try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get("HETNET_IA_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


_backend = "numba" if HAVE_NUMBA and not _env_disabled() else "numpy"


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


# -- exhaustive maximum-likelihood search ------------------------------------

def ml_detect_numpy(y: np.ndarray, G: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """Index of argmin_c ||y_b - G_b c||^2 for each batch item b.

    y: (B, M), G: (B, M, n), cands: (C, n). Ties resolve to the lowest index.
    """
    pred = np.einsum("bmn,cn->bcm", G, cands)
    diff = y[:, None, :] - pred
    cost = (diff.real ** 2 + diff.imag ** 2).sum(axis=-1)
    return np.argmin(cost, axis=1)


if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=False)
    def _ml_detect_numba(y, G, cands):  # pragma: no cover - compiled
        B, M = y.shape
        C, n = cands.shape
        out = np.empty(B, dtype=np.int64)
        for b in range(B):
            best = np.inf
            best_i = 0
            for c in range(C):
                cost = 0.0
                for m in range(M):
                    acc = y[b, m]
                    for j in range(n):
                        acc -= G[b, m, j] * cands[c, j]
                    cost += acc.real * acc.real + acc.imag * acc.imag
                if cost < best:
                    best = cost
                    best_i = c
            out[b] = best_i
        return out

    @numba.njit(cache=True)
    def _count_bit_errors_numba(a, b, mask):  # pragma: no cover - compiled
        rows, cols = a.shape
        out = np.zeros(cols, dtype=np.int64)
        for i in range(rows):
            for j in range(cols):
                if mask[i, j] and a[i, j] != b[i, j]:
                    out[j] += 1
        return out


def ml_detect(y, G, cands) -> np.ndarray:
    """Dispatching ML detector; leading batch axes of ``y``/``G`` are flattened."""
    y = np.asarray(y, dtype=np.complex128)
    G = np.asarray(G, dtype=np.complex128)
    cands = np.ascontiguousarray(cands, dtype=np.complex128)
    lead = y.shape[:-1]
    G = np.broadcast_to(G, lead + G.shape[-2:])
    y2 = np.ascontiguousarray(y.reshape(-1, y.shape[-1]))
    G2 = np.ascontiguousarray(G.reshape(-1, *G.shape[-2:]))
    if _backend == "numba":
        idx = _ml_detect_numba(y2, G2, cands)
    else:
        idx = ml_detect_numpy(y2, G2, cands)
    return idx.reshape(lead)


# -- bit-error accounting ----------------------------------------------------

def count_bit_errors_numpy(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Column-wise count of positions where a != b and mask is set."""
    return np.count_nonzero((a != b) & mask, axis=0).astype(np.int64)


def count_bit_errors(a, b, mask) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.uint8)
    b = np.ascontiguousarray(b, dtype=np.uint8)
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if _backend == "numba":
        return _count_bit_errors_numba(a, b, mask)
    return count_bit_errors_numpy(a, b, mask)
