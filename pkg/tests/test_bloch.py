import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_model
from kamspectra.bloch import (PoleError, TruncationParams, assemble, coset_eigh,
                              matched_eigenpair, oracle_eigs, resolvent_gap)
from kamspectra.lattice import nu

TR = TruncationParams(c_rho=1.3, R=4, Q=64)


def test_free_matrix_is_diagonal(free_model):
    M = assemble(free_model, 1, (0.3, 0.1), TR)
    A = M.matrix
    assert np.array_equal(A, np.diag(np.diag(A)))
    P = free_model.momenta(1, np.array([0.3, 0.1]), M.basis)
    assert np.real(np.diag(A)) == pytest.approx(np.einsum("ij,ij->i", P, P) ** 2, rel=1e-15)


def test_free_eigenvalues_sorted_diagonal(free_model):
    M = assemble(free_model, 1, (0.2, 0.7), TR)
    w, _ = oracle_eigs(M, vectors=False)
    assert np.allclose(w, np.sort(np.real(np.diag(M.matrix))), rtol=1e-14)


def test_one_by_one(cosine_model):
    M = assemble(cosine_model, 1, (0.3, 0.4), TruncationParams(rho=0.6))
    assert M.dim == 1
    w, _ = oracle_eigs(M)
    assert w[0] == pytest.approx(0.25 ** 2, rel=1e-14)


def test_cosine_two_offdiagonals(cosine_model):
    M = assemble(cosine_model, 1, (0.3, 0.4), TR)
    i = M.index_of((0, 0))
    row = M.matrix[i].copy()
    row[i] = 0
    nz = np.flatnonzero(row)
    assert {tuple(M.basis[j]) for j in nz} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert np.allclose(row[nz], 0.25)


def test_two_by_two_closed_form():
    # a single mode q=(1,0), truncated to the two coupled plane waves
    m = make_model(recipe=[{"kind": "cosine", "amplitude": 0.3, "modes": [[1, 0]]}])
    y = np.array([-0.99, 0.2])
    basis = np.array([[0, 0], [1, 0]])
    M = assemble(m, 1, y, TR, basis=basis)
    d = np.real(np.diag(M.matrix))
    w, _ = oracle_eigs(M)
    mean, half = 0.5 * (d[0] + d[1]), 0.5 * (d[0] - d[1])
    ref = [mean - math.sqrt(half ** 2 + 0.09), mean + math.sqrt(half ** 2 + 0.09)]
    assert w == pytest.approx(ref, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(-1, 1))
def test_hermitian_property(t1, t2, alpha):
    m = make_model(recipe=[{"kind": "random", "blocks": [1], "modes": 4}], seed=7)
    M = assemble(m, 1, (t1, t2), TR, alpha=alpha)
    A = M.matrix
    assert np.max(np.abs(A - A.conj().T)) <= 1e-13 * max(1.0, np.max(np.abs(A)))


def test_level2_alpha0_embeds_level1():
    m = make_model(b=(2.0, 2.0), levels=2,
                   recipe=[{"kind": "cosine", "amplitude": 0.25},
                           {"kind": "explicit", "coefficients": [[2, 1, 0, 1.0]]}])
    N = m.N(1)
    y = np.array([0.11, 0.07])
    M2 = assemble(m, 2, y, TR, alpha=0.0)
    on = np.flatnonzero((M2.basis[:, 0] % N == 0) & (M2.basis[:, 1] % N == 0))
    sub = M2.matrix[np.ix_(on, on)]
    M1 = assemble(m, 1, y, TR, basis=M2.basis[on] // N)
    assert np.allclose(sub, M1.matrix, rtol=1e-14, atol=1e-14)


def test_resolvent_free_gap(free_model):
    M = assemble(free_model, 1, (0.3, 0.2), TR)
    d = np.sort(np.real(np.diag(M.matrix)))
    z = d[10] + 0.25 * (d[11] - d[10])
    g = min(z - d[10], d[11] - z)
    assert resolvent_gap(M, z) == pytest.approx(1 / g, rel=1e-10)
    with pytest.raises(PoleError):
        resolvent_gap(M, d[3])


def test_matched_eigenpair(cosine_model):
    y = 10.0 * nu(0.4)
    M = assemble(cosine_model, 1, y, TR)
    lam, v, ov = matched_eigenpair(M)
    assert ov > 0.99 and lam == pytest.approx(1e4, rel=1e-6)


def test_coset_eigh_block_structure():
    m = make_model(b=(2.0, 2.0), levels=2,
                   recipe=[{"kind": "cosine", "amplitude": 0.25},
                           {"kind": "explicit", "coefficients": [[2, 1, 0, 1.0]]}])
    y = np.array([0.3, 0.1])
    basis = m.basis(2, y, 6.0)
    w, V, A = coset_eigh(m, 2, y, basis)
    full = np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    assert np.sort(w) == pytest.approx(full, rel=1e-12)
    assert np.allclose(A @ V, V * w, atol=1e-10)
