"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run under pytest (lines appear in the "acceptance criteria" summary section)
or directly with ``python3 tests/test_acceptance.py``.
"""
import itertools
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from hetnet_ia import cli
from hetnet_ia.blind_ia import (
    build_receivers,
    build_scheme,
    femto_effective_channel,
    interference_terms,
    macro_effective_channel,
    optimize_schedule_params,
)
from hetnet_ia.dof import (
    DofQuery,
    blind_ia_gain,
    blind_ia_gain_threshold,
    dof_blind_ia,
    dof_hybrid,
    dof_tdma_hybrid_comparison,
)
from hetnet_ia.hybrid import allocate_noma_powers, build_precoding_basis
from hetnet_ia.network import Topology, draw_channels, example_power, example_topology
from hetnet_ia.sim import SimConfig, run_ber_sweep, run_rate_sweep

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # direct execution outside pytest
    ACCEPTANCE_LINES = {}

DRAWS = 100


def blind_l2_topology():
    return Topology(
        K=2, L=2, N=3,
        d_macro=[0.5, 4.5],
        d_femto=[[0.2, 0.25], [0.2, 0.25]],
        d_macro_femto=[[5.0, 4.8], [5.2, 5.1]],
        d_femto_macro=[[5.0, 4.8], [5.2, 5.1]],
        d_femto_femto=[[[1.0, 0.4], [0.4, 1.0]], [[1.0, 0.45], [0.45, 1.0]]],
    )


def hybrid_coefficients(topo, ch):
    """Noiseless projected interference and desired-link coefficients of the hybrid scheme.

    Built from explicit Kronecker products per draw, independent of the
    vectorised receive path.
    """
    T, N, K, L = topo.hybrid_slots, topo.N, topo.K, topo.L
    basis = build_precoding_basis(T)
    alloc = allocate_noma_powers(topo, example_power())
    I = np.eye(N)
    prec = [np.kron(basis.vectors[t][:, None], I) for t in range(T)]
    proj = [np.kron(basis.vectors[t][None, :], I) for t in range(T)]
    interf, desired = [], []
    for b in range(ch.macro.shape[0]):
        for k in range(K):
            Hm = np.kron(np.eye(T), np.sqrt(topo.gamma_macro[k]) * ch.macro[b, k])
            for l in range(L):
                Hfm = np.kron(np.eye(T), np.sqrt(topo.gamma_femto_macro[k, l]) * ch.femto_macro[b, k, l])
                interf.append(proj[0] @ Hfm @ prec[l + 1] * np.sqrt(alloc.p_femto))
                Hf = np.kron(np.eye(T), np.sqrt(topo.gamma_femto[k, l]) * ch.femto[b, k, l])
                Hmf = np.kron(np.eye(T), np.sqrt(topo.gamma_macro_femto[k, l]) * ch.macro_femto[b, k, l])
                interf.append(proj[l + 1] @ Hmf @ prec[0])
                for j in range(L):
                    if j != l:
                        Hff = np.kron(np.eye(T), np.sqrt(topo.gamma_femto_femto[k, j, l]) * ch.femto_femto[b, k, j, l])
                        interf.append(proj[l + 1] @ Hff @ prec[j + 1])
                direct = proj[l + 1] @ Hf @ prec[l + 1]
                desired.append(direct - np.sqrt(topo.gamma_femto[k, l]) * ch.femto[b, k, l])
            desired.append(proj[0] @ Hm @ prec[0] - np.sqrt(topo.gamma_macro[k]) * ch.macro[b, k])
    return interf, desired


# -- criteria ----------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    h = dof_hybrid(DofQuery(K=2, L=1, N=2))
    b = dof_blind_ia(DofQuery(K=2, L=1, N=2, M_r=2))
    dt = time.perf_counter() - t0
    ok = h.dof_total == Fraction(8, 2) and b.dof_total == Fraction(8, 3) and dt < 1.0
    return ok, f"hybrid {h.dof_total * h.T}/{h.T}, Blind IA {b.dof_total * b.T}/{b.T}, {dt * 1e3:.1f} ms"


def criterion_2():
    t0 = time.perf_counter()
    n = bad = 0
    for K, N, L in itertools.product(range(2, 7), range(1, 5), range(1, 4)):
        T = L + 1
        for x in range(T):
            q = DofQuery(K=K, L=L, N=N, x=x)
            h, t = dof_hybrid(q).dof_total, dof_tdma_hybrid_comparison(q).dof_total
            n += 1
            if not (h > t and h - t == Fraction(N * (K - 1) * (T - x), T)):
                bad += 1
    dt = time.perf_counter() - t0
    return bad == 0 and dt < 1.0, f"{n} grid points, {bad} violations, {dt * 1e3:.1f} ms"


def criterion_3():
    n = bad = 0
    for L, N, x in itertools.product((1, 2), range(1, 5), range(0, 5)):
        q = DofQuery(K=5, L=L, N=N, x=x)
        th = blind_ia_gain_threshold(q)
        gain = blind_ia_gain(q)
        n += 1
        if (gain > 0) != (x < th.threshold):
            bad += 1
    return bad == 0, f"{n} grid points (K=5, L in 1..2, N in 1..4, x in 0..4), {bad} sign mismatches"


def criterion_4():
    t0 = time.perf_counter()
    worst = {}
    topo = example_topology()
    ch = draw_channels(topo, 2024, batch=DRAWS)
    interf, _ = hybrid_coefficients(topo, ch)
    worst["hybrid example"] = max(np.linalg.norm(c) for c in interf)
    for name, t in (("blind example", example_topology()), ("blind L2 N3", blind_l2_topology())):
        ch = draw_channels(t, 2024, batch=DRAWS)
        terms = interference_terms(ch, build_scheme(t, example_power()))
        worst[name] = max(float(np.max(np.linalg.norm(c, axis=(-2, -1)))) for _, _, c in terms)
    dt = time.perf_counter() - t0
    ok = all(v <= 1e-10 for v in worst.values()) and dt < 10.0
    detail = ", ".join(f"{k} max {v:.1e}" for k, v in worst.items())
    return ok, f"{DRAWS} draws each: {detail}; {dt:.2f} s"


def criterion_5():
    worst = {}
    topo = example_topology()
    ch = draw_channels(topo, 77, batch=DRAWS)
    _, desired = hybrid_coefficients(topo, ch)
    worst["hybrid"] = max(float(np.max(np.abs(d))) for d in desired)
    for name, t in (("blind example", example_topology()), ("blind L2 N3", blind_l2_topology())):
        ch = draw_channels(t, 77, batch=DRAWS)
        sch = build_scheme(t, example_power())
        mp, fp = build_receivers(ch, sch)
        m = [macro_effective_channel(ch, sch, p).mismatch for p in mp]
        m += [femto_effective_channel(ch, sch, p).mismatch for p in fp.values()]
        worst[name] = max(m)
    ok = all(v <= 1e-8 for v in worst.values())
    return ok, ", ".join(f"{k} max {v:.1e}" for k, v in worst.items())


def criterion_6():
    t0 = time.perf_counter()
    c, d = optimize_schedule_params(example_topology(), draws=500)
    dt = time.perf_counter() - t0
    ok = abs(abs(c) - 1 / np.sqrt(3)) <= 0.01 and abs(abs(d) - 0.5) <= 0.01 and dt < 60
    return ok, f"c* = {c:.4f}, d* = {d:.4f}, {dt:.2f} s"


def criterion_7():
    t0 = time.perf_counter()
    snr = tuple(float(s) for s in range(0, 41, 5))
    runs = {}
    for name, scheme, ctx in (
        ("hybrid", "hybrid", "hybrid"),
        ("blind", "blind_ia", "blind"),
        ("tdma_h", "tdma", "hybrid"),
        ("tdma_b", "tdma", "blind"),
    ):
        runs[name] = np.array(run_rate_sweep(SimConfig(scheme=scheme, tdma_context=ctx, frames=500, snr_points=snr)).sum_rate)
    dt = time.perf_counter() - t0
    hyb_ok = bool(np.all(runs["hybrid"] >= runs["tdma_h"]))
    bli_ok = bool(np.all(runs["blind"] >= runs["tdma_b"]))
    ratio = runs["hybrid"][-1] / runs["tdma_h"][-1]
    ok = hyb_ok and bli_ok and ratio >= 1.8 and dt < 300
    detail = (
        f"hybrid >= TDMA (same T) at all {len(snr)} points: {hyb_ok}; Blind IA >= TDMA (same T): {bli_ok}; "
        f"hybrid/TDMA at 40 dB = {ratio:.2f}; {dt:.1f} s"
    )
    return ok, detail


def _moving_average(a, w=3):
    a = np.asarray(a, float)
    return np.convolve(a, np.ones(w) / w, mode="valid")


def criterion_8():
    t0 = time.perf_counter()
    res = run_ber_sweep(SimConfig(scheme="hybrid", frames=500, snr_points=tuple(float(s) for s in range(0, 41, 5))))
    dt = time.perf_counter() - t0
    femto = {u: res.ber[u] for u in res.users if u.startswith("f")}
    a_ok = all(v == 0 for s in femto.values() for v in s)
    nonzero = sorted({res.snr_db[i] for s in femto.values() for i, v in enumerate(s) if v > 0})
    # (b) macro curves converge: the log-gap at the top point is at most half a
    # decade and below the largest gap seen along the sweep
    a1, a2 = np.array(res.ber["a1"]), np.array(res.ber["a2"])
    gap = np.abs(np.log10(a2) - np.log10(a1))
    b_ok = bool(gap[-1] <= 0.5 and gap[-1] < gap.max())
    # (c) 3-point moving average nonincreasing within two binomial standard errors
    c_ok = True
    for u in res.users:
        n = res.bits[u][0]
        ma = _moving_average(res.ber[u])
        sd = _moving_average(np.sqrt(np.maximum(np.array(res.bit_errors[u], float), 1.0)) / n)
        c_ok &= bool(np.all(np.diff(ma) <= 2 * (sd[1:] + sd[:-1])))
    ok = a_ok and b_ok and c_ok and dt < 600
    fmax = max(max(s) for s in femto.values())
    detail = (
        f"(a) femto BER all zero: {a_ok} (nonzero at {nonzero} dB, max {fmax:.1e}); "
        f"(b) macro convergence: {b_ok} (log10 gap {gap.max():.2f} -> {gap[-1]:.2f}); "
        f"(c) smoothed monotone: {c_ok}; {dt:.1f} s"
    )
    return ok, detail


def criterion_9():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        runs = [
            ["compare", "--skip-ber"],
            ["ber", "--scheme", "hybrid", "--frames", "20"],
            ["ber", "--scheme", "blind_ia", "--frames", "20"],
            ["dof"],
        ]
        checked = 0
        for i, argv in enumerate(runs):
            a, b = tmp / f"{i}a", tmp / f"{i}b"
            if cli.main(argv + ["--out", str(a)]) != 0:
                return False, f"run {argv} failed"
            if cli.main(["replay", str(a / "manifest.json"), "--out", str(b)]) != 0:
                return False, f"replay of {argv} failed"
            names = sorted(p.name for p in a.iterdir())
            if names != sorted(p.name for p in b.iterdir()):
                return False, f"replay of {argv} wrote different files"
            for f in names:
                if (a / f).read_bytes() != (b / f).read_bytes():
                    return False, f"{argv}: {f} differs on replay"
                checked += 1
    return True, f"{len(runs)} runs replayed from their manifests, {checked} files byte-identical"


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 10)}


def _record(i):
    ok, detail = CRITERIA[i]()
    line = f"criterion {i}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[i] = line
    print(line)
    return ok, line


@pytest.mark.parametrize(
    "i",
    [1, 2, 3, 4, 5, 6, pytest.param(7, marks=pytest.mark.slow), pytest.param(8, marks=pytest.mark.slow), pytest.param(9, marks=pytest.mark.slow)],
)
def test_acceptance_criterion(i):
    ok, line = _record(i)
    assert ok, line


if __name__ == "__main__":
    results = [_record(i)[0] for i in CRITERIA]
    sys.exit(0 if all(results) else 1)
