import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kamspectra import _kernels_py, kernels

compiled = pytest.importorskip("kamspectra._kernels")


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(1.0, 30.0))
def test_gap_scan_equivalence(seed, k):
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0, 2 * np.pi, 200)
    Q = rng.integers(-8, 9, size=(60, 2)).astype(float) * 0.7
    Q = Q[np.any(Q != 0, axis=1)]
    a, ia = _kernels_py.gap_scan(phi, Q, k)
    b, ib = compiled.gap_scan(phi, Q, k)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_fill_matrix_equivalence(seed):
    rng = np.random.default_rng(seed)
    n = 40
    basis = rng.integers(-5, 6, size=(n, 2)).astype(np.int64)
    diag = rng.standard_normal(n).astype(complex)
    grid = rng.standard_normal((7, 9)) + 1j * rng.standard_normal((7, 9))
    off = np.array([3, 4], dtype=np.int64)
    assert np.array_equal(_kernels_py.fill_matrix(basis, diag, grid, off),
                          compiled.fill_matrix(basis, diag, grid, off))


def test_fill_matrix_reference():
    basis = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)
    grid = np.zeros((3, 3), dtype=complex)
    grid[2, 1] = 2.0  # q = (1, 0)
    grid[0, 1] = 2.0  # q = (-1, 0)
    M = _kernels_py.fill_matrix(basis, np.array([1, 2, 3], dtype=complex), grid,
                                np.array([1, 1], dtype=np.int64))
    assert np.array_equal(M, [[1, 2, 0], [2, 2, 0], [0, 0, 3]])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(-3, 3))
def test_phase_equivalence(seed, w):
    rng = np.random.default_rng(seed)
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    vals = np.exp(1j * w * th) * (2 + 0.5 * rng.uniform(size=400))
    a = _kernels_py.winding_phase(vals)
    b = compiled.winding_phase(vals)
    assert a[0] == pytest.approx(b[0], abs=1e-10) and a[0] == pytest.approx(2 * np.pi * w, abs=1e-9)
    assert _kernels_py.open_phase(vals)[0] == pytest.approx(compiled.open_phase(vals)[0], abs=1e-10)
