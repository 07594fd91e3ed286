"""Cross-backend agreement: compiled kernels must equal the numpy fallback bit-for-bit."""

import numpy as np
import pytest

from prunekit import backend


def both():
    impls = backend.backends()
    if "compiled" not in impls:
        pytest.skip("compiled kernels not built")
    return impls["numpy"], impls["compiled"]


def rand(shape, rng, dtype=np.float32, scale=1.0):
    return np.ascontiguousarray((rng.standard_normal(shape) * scale).astype(dtype))


@pytest.mark.parametrize("seed", range(5))
def test_matmuls_bit_identical(seed):
    py, cy = both()
    rng = np.random.default_rng(seed)
    n, k, m = rng.integers(1, 120, 3)
    scale = 10.0 ** float(rng.integers(-2, 3))
    a, b = rand((n, k), rng, scale=scale), rand((k, m), rng, scale=scale)
    assert np.array_equal(py.matmul_nn(a, b), cy.matmul_nn(a, b))
    at = rand((k, n), rng, scale=scale)
    assert np.array_equal(py.matmul_tn(at, b), cy.matmul_tn(at, b))
    bt = rand((m, k), rng, scale=scale)
    assert np.array_equal(py.matmul_nt(a, bt), cy.matmul_nt(a, bt))
    assert np.array_equal(py.colsum(a), cy.colsum(a))


@pytest.mark.parametrize("seed", range(5))
def test_distance_kernels_bit_identical(seed):
    py, cy = both()
    rng = np.random.default_rng(100 + seed)
    n, d, k = int(rng.integers(1, 200)), int(rng.integers(1, 16)), int(rng.integers(1, 8))
    x = rand((n, d), rng, np.float64)
    c = rand((k, d), rng, np.float64)
    assert np.array_equal(py.sqdist(x, c), cy.sqdist(x, c))
    labels = np.ascontiguousarray(rng.integers(0, k, n), dtype=np.int64)
    ps, pc = py.cluster_sums(x, labels, k)
    cs, cc = cy.cluster_sums(x, labels, k)
    assert np.array_equal(ps, cs) and np.array_equal(pc, cc)


def test_matmul_close_to_float64_reference():
    py, _ = backend.backends()["numpy"], None
    rng = np.random.default_rng(0)
    a, b = rand((40, 30), rng), rand((30, 20), rng)
    want = a.astype(np.float64) @ b.astype(np.float64)
    got = py.matmul_nn(a, b)
    assert np.abs(got - want).max() / np.abs(want).max() < 1e-5


def test_empty_contraction():
    for impl in backend.backends().values():
        out = impl.matmul_nn(np.zeros((3, 0), np.float32), np.zeros((0, 4), np.float32))
        assert np.array_equal(out, np.zeros((3, 4), np.float32))


def test_seqsum_order():
    # cumsum-based fold accumulates strictly in ascending index order
    v = np.array([1e8, 1.0, -1e8], dtype=np.float32)
    assert backend.seqsum(v) == np.float32(np.float32(1e8 + 1.0) - np.float32(1e8))
    rows = np.array([[1e8, 1.0, -1e8], [1.0, 2.0, 3.0]], dtype=np.float32)
    got = backend.seqsum_rows(rows)
    assert got[0] == np.float32(np.float32(1e8 + 1.0) - np.float32(1e8)) and got[1] == 6.0
