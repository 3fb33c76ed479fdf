"""Pure-numpy implementations of the hot kernels (fallback for the compiled core)."""

import numpy as np


def gap_scan(phi, Q, k, chunk=256):
    """For each angle, min over lattice vectors Q of | |Q|^2 + 2k <Q, nu(phi)> |.

    This is |p_i|^2 - |p_j|^2 for p_j = k nu(phi) and p_i = p_j + Q. Returns
    (minimum, argmin index into Q).
    """
    phi = np.asarray(phi, dtype=float)
    Q = np.asarray(Q, dtype=float)
    q2 = np.einsum("ij,ij->i", Q, Q)
    best = np.full(phi.shape, np.inf)
    arg = np.zeros(phi.shape, dtype=np.int64)
    if len(Q) == 0:
        return best, arg
    c, s = np.cos(phi), np.sin(phi)
    for i0 in range(0, len(phi), chunk):
        sl = slice(i0, i0 + chunk)
        vals = np.abs(q2[None, :] + 2 * k * (np.outer(c[sl], Q[:, 0]) + np.outer(s[sl], Q[:, 1])))
        a = np.argmin(vals, axis=1)
        best[sl] = vals[np.arange(len(a)), a]
        arg[sl] = a
    return best, arg


def fill_matrix(basis, diag, grid, offset):
    """Dense matrix M[a, b] = diag[a] delta_ab + grid[basis[a] - basis[b] + offset].

    ``grid`` is a dense complex array of Fourier coefficients indexed by
    ``q + offset``; differences falling outside the grid contribute 0.
    """
    basis = np.asarray(basis, dtype=np.int64)
    n = len(basis)
    d = basis[:, None, :] - basis[None, :, :] + np.asarray(offset, dtype=np.int64)
    shape = grid.shape
    inside = (d[..., 0] >= 0) & (d[..., 0] < shape[0]) & (d[..., 1] >= 0) & (d[..., 1] < shape[1])
    M = np.zeros((n, n), dtype=complex)
    M[inside] = grid[d[..., 0][inside], d[..., 1][inside]]
    M[np.arange(n), np.arange(n)] += diag
    return M


def winding_phase(values):
    """Total unwrapped phase change along a closed polygon of nonzero values."""
    v = np.asarray(values, dtype=complex)
    steps = np.angle(np.roll(v, -1) / v)
    return float(np.sum(steps)), float(np.max(np.abs(steps)))


def open_phase(values):
    """Unwrapped phase change along an open path of nonzero values."""
    v = np.asarray(values, dtype=complex)
    steps = np.angle(v[1:] / v[:-1])
    return float(np.sum(steps)), float(np.max(np.abs(steps), initial=0.0))
