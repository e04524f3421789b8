"""Gray-mapped QPSK and the product constellations searched by ML detection."""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import InvalidParameter

__all__ = ["QPSK", "qpsk_modulate", "qpsk_demap", "product_constellation", "qpsk_ml_detect"]

# bit pair (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2); adjacent points differ in one bit
QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)


def qpsk_modulate(bits) -> np.ndarray:
    """Map bits (last axis even length) to unit-energy QPSK symbols."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] % 2:
        raise ValueError("QPSK needs an even number of bits")
    pairs = bits.reshape(bits.shape[:-1] + (-1, 2))
    return ((1 - 2.0 * pairs[..., 0]) + 1j * (1 - 2.0 * pairs[..., 1])) / np.sqrt(2)


def qpsk_demap(symbols) -> np.ndarray:
    """Hard bits of (exact) constellation points; inverse of :func:`qpsk_modulate`."""
    s = np.asarray(symbols)
    b0 = (s.real < 0).astype(np.uint8)
    b1 = (s.imag < 0).astype(np.uint8)
    return np.stack([b0, b1], axis=-1).reshape(s.shape[:-1] + (-1,))


MAX_ML_STREAMS = 4  # exhaustive search visits 4**n candidates per symbol vector


@lru_cache(maxsize=None)
def product_constellation(n: int) -> np.ndarray:
    """All 4**n QPSK vectors of length n, shape (4**n, n)."""
    if n < 1:
        raise ValueError("need at least one stream")
    if n > MAX_ML_STREAMS:
        raise InvalidParameter(
            f"exhaustive ML over {n} streams needs 4**{n} candidates; at most {MAX_ML_STREAMS} streams are supported"
        )
    pts = np.array(list(itertools.product(QPSK, repeat=n)), dtype=complex)
    pts.setflags(write=False)
    return pts


def qpsk_ml_detect(received, effective_channel, candidates=None) -> np.ndarray:
    """ML symbol vectors argmin ||y - H u||^2 over the product constellation.

    ``received`` is (..., M), ``effective_channel`` (..., M, n). Returns the
    detected symbol vectors, shape (..., n).
    """
    H = np.asarray(effective_channel)
    n = H.shape[-1]
    cands = product_constellation(n) if candidates is None else np.asarray(candidates)
    idx = kernels.ml_detect(received, H, cands)
    return cands[idx]
