import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hetnet_ia import kernels
from hetnet_ia.modulation import QPSK, product_constellation, qpsk_demap, qpsk_ml_detect, qpsk_modulate

from conftest import crandn


def brute_force_ml(y, H):
    # exhaustive search written independently of the package
    best, arg = np.inf, None
    for combo in itertools.product(range(4), repeat=H.shape[1]):
        u = QPSK[list(combo)]
        c = np.sum(np.abs(y - H @ u) ** 2)
        if c < best:
            best, arg = c, u
    return arg


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    if request.param == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    old = kernels.backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(old)


class TestQPSK:
    def test_unit_energy_gray(self):
        assert np.allclose(np.abs(QPSK), 1)
        # neighbours (distance sqrt2) differ in exactly one bit
        for i, j in itertools.combinations(range(4), 2):
            if np.isclose(abs(QPSK[i] - QPSK[j]), np.sqrt(2)):
                assert bin(i ^ j).count("1") == 1

    @given(st.lists(st.integers(0, 1), min_size=2, max_size=64).filter(lambda b: len(b) % 2 == 0))
    def test_round_trip(self, bits):
        np.testing.assert_array_equal(qpsk_demap(qpsk_modulate(bits)), bits)

    def test_odd_bits_rejected(self):
        with pytest.raises(ValueError):
            qpsk_modulate([1, 0, 1])

    def test_product_constellation(self):
        c = product_constellation(2)
        assert c.shape == (16, 2)
        assert len({tuple(np.round(r, 9)) for r in c}) == 16


class TestML:
    def test_identity_noiseless(self, backend):
        bits = np.random.default_rng(0).integers(0, 2, size=(50, 4))
        u = qpsk_modulate(bits)
        got = qpsk_ml_detect(u, np.eye(2))
        np.testing.assert_array_equal(qpsk_demap(got), bits)

    def test_large_noise_valid_point(self, backend, rng):
        y = crandn(rng, 1) * 1e3
        out = qpsk_ml_detect(y, np.ones((1, 1)))
        assert np.min(np.abs(QPSK - out[0])) < 1e-12

    def test_matches_exhaustive_oracle(self, backend, rng):
        H = crandn(rng, 40, 2, 2)
        y = crandn(rng, 40, 2) * 2
        got = qpsk_ml_detect(y, H)
        for b in range(40):
            np.testing.assert_allclose(got[b], brute_force_ml(y[b], H[b]))

    def test_three_streams(self, backend, rng):
        H = crandn(rng, 10, 3, 3)
        y = crandn(rng, 10, 3)
        got = qpsk_ml_detect(y, H)
        for b in range(10):
            np.testing.assert_allclose(got[b], brute_force_ml(y[b], H[b]))

    def test_backends_agree(self, rng):
        if not kernels.HAVE_NUMBA:
            pytest.skip("numba not installed")
        H = crandn(rng, 500, 2, 2)
        y = crandn(rng, 500, 2)
        c = product_constellation(2)
        old = kernels.backend()
        try:
            kernels.set_backend("numba")
            a = kernels.ml_detect(y, H, c)
            kernels.set_backend("numpy")
            b = kernels.ml_detect(y, H, c)
        finally:
            kernels.set_backend(old)
        np.testing.assert_array_equal(a, b)

    def test_shared_channel_broadcast(self, backend, rng):
        H = crandn(rng, 2, 2)
        y = crandn(rng, 7, 2)
        idx = kernels.ml_detect(y, H, product_constellation(2))
        assert idx.shape == (7,)


class TestBitErrors:
    def test_counts(self, backend):
        a = np.array([[0, 1], [1, 1], [0, 0]], np.uint8)
        b = np.array([[1, 1], [1, 0], [1, 0]], np.uint8)
        mask = np.array([[1, 1], [1, 1], [0, 1]], bool)
        np.testing.assert_array_equal(kernels.count_bit_errors(a, b, mask), [1, 1])

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            kernels.set_backend("cuda")


@pytest.mark.parametrize("flag,want", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, want):
    import subprocess
    import sys

    from hetnet_ia import kernels

    if want == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    code = "from hetnet_ia import kernels; print(kernels.backend())"
    env = {**__import__("os").environ, "HETNET_IA_DISABLE_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.stdout.strip() == want


def test_benchmark_script_runs(capsys):
    import importlib.util
    from pathlib import Path

    from hetnet_ia import kernels

    if not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    before = kernels.backend()
    assert mod.main(["--batch", "200", "--repeats", "1", "--frames", "1"]) == 0
    assert kernels.backend() == before
    out = capsys.readouterr().out
    assert out.count("True") == 4


def test_ml_stream_cap():
    from hetnet_ia.errors import InvalidParameter

    assert product_constellation(4).shape == (256, 4)
    with pytest.raises(InvalidParameter):
        product_constellation(5)
