"""Compare the numba and pure-numpy kernel backends.

Times the exhaustive ML search (2x2 and 4x4 effective channels), the bit-error
counter and one small end-to-end hybrid BER sweep under each backend, and
checks that both backends return identical results.

    python3 benchmarks/bench_kernels.py [--batch 20000] [--repeats 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from hetnet_ia import kernels
from hetnet_ia.modulation import product_constellation
from hetnet_ia.sim import SimConfig, run_ber_sweep


def _ml_case(rng, batch, n):
    G = (rng.standard_normal((batch, n, n)) + 1j * rng.standard_normal((batch, n, n))) / np.sqrt(2)
    cands = product_constellation(n)
    u = cands[rng.integers(0, len(cands), batch)]
    y = np.einsum("bmn,bn->bm", G, u) + 0.3 * (rng.standard_normal((batch, n)) + 1j * rng.standard_normal((batch, n)))
    return y, G, cands


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=20000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--frames", type=int, default=10, help="frames in the end-to-end sweep")
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return 1
    rng = np.random.default_rng(0)
    ml2 = _ml_case(rng, args.batch, 2)
    ml4 = _ml_case(rng, max(args.batch // 16, 1), 4)
    bits_a = rng.integers(0, 2, size=(args.batch, 16), dtype=np.uint8)
    bits_b = bits_a ^ (rng.random(bits_a.shape) < 0.01).astype(np.uint8)
    mask = np.ones(bits_a.shape, dtype=bool)
    cfg = SimConfig(frames=args.frames, snr_points=(0.0, 20.0))
    cases = {
        f"ml_detect 2x2 (16 candidates, {args.batch} rx)": lambda: kernels.ml_detect(*ml2),
        f"ml_detect 4x4 (256 candidates, {len(ml4[0])} rx)": lambda: kernels.ml_detect(*ml4),
        f"count_bit_errors ({args.batch}x16)": lambda: kernels.count_bit_errors(bits_a, bits_b, mask),
        f"hybrid BER sweep ({args.frames} frames x 2 SNR)": lambda: run_ber_sweep(cfg).bit_errors,
    }
    original = kernels.backend()
    timings, outputs = {}, {}
    try:
        for be in ("numpy", "numba"):
            kernels.set_backend(be)
            for name, fn in cases.items():
                outputs[be, name] = fn()  # also triggers jit compilation
                timings[be, name] = min(timeit.repeat(fn, number=1, repeat=args.repeats))
    finally:
        kernels.set_backend(original)
    width = max(len(n) for n in cases)
    print(f"{'kernel':<{width}}  {'numpy [ms]':>11}  {'numba [ms]':>11}  {'speed-up':>8}  same")
    for name in cases:
        a, b = timings["numpy", name], timings["numba", name]
        x, y = outputs["numpy", name], outputs["numba", name]
        same = x == y if isinstance(x, dict) else bool(np.array_equal(x, y))
        print(f"{name:<{width}}  {a * 1e3:11.2f}  {b * 1e3:11.2f}  {a / b:7.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
