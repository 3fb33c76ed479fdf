"""Truncated plane-wave (Bloch) matrices, the dense eigensolver oracle and resolvent diagnostics.

The level-n operator at quasimomentum ``y`` acts on coefficient vectors
indexed by level-n dual-lattice points ``m``; in the plane-wave basis
``exp(i <p_m(y), x>)`` with ``p_m(y) = y + 2 pi m / (N_hat a)`` it reads

    H^(n)_alpha(y)_{m m'} = |p_m(y)|^{2l} delta_{m m'} + w_{m - m'},

where ``w`` are the coefficients of ``W_1 + ... + W_{n-1} + alpha W_n``
embedded on the level-n lattice. ``y`` need not be reduced to the cell: the
index ``m = 0`` then corresponds to the plane wave ``exp(i <y, x>)`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .lattice import Quasimomentum
from .potential import choose_M, level_cell, window_sum


class DimensionError(ValueError):
    pass


class PoleError(ValueError):
    pass


@dataclass(frozen=True)
class TruncationParams:
    """Basis cutoff (``rho`` absolute, or ``c_rho * k``), series order, contour nodes."""

    c_rho: float = 3.0
    R: int = 4
    Q: int = 64
    rho: float | None = None
    max_dim: int = 4000
    Q_max: int = 4096

    def __post_init__(self):
        if (self.rho is not None and self.rho <= 0) or self.c_rho <= 0:
            raise ValueError("cutoff must be positive")
        if self.R < 1:
            raise ValueError("series order R must be >= 1")
        if self.Q < 16 or self.Q % 2:
            raise ValueError("contour node count Q must be even and >= 16")

    def radius(self, k):
        return float(self.rho) if self.rho is not None else self.c_rho * k


@dataclass(frozen=True)
class ContourSpec:
    center: float
    radius: float
    Q: int = 64

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("contour radius must be positive")

    def nodes(self, Q=None):
        """Trapezoid nodes z (midpoint angles) and weights rho e^{i theta} / Q."""
        zeta, wt = self.offsets(Q)
        return self.center + zeta, wt

    def offsets(self, Q=None):
        """Nodes relative to the centre, z - center, free of cancellation against a large center."""
        Q = Q or self.Q
        theta = 2 * math.pi * (np.arange(Q) + 0.5) / Q
        e = np.exp(1j * theta)
        return self.radius * e, self.radius * e / Q


@dataclass(frozen=True, eq=False)
class BlochMatrix:
    level: int
    t: np.ndarray
    basis: np.ndarray  # (n, 2) integer lattice indices, ordered by |p_m|, then m
    matrix: np.ndarray
    alpha: float
    diag0: np.ndarray = field(repr=False)  # free part |p_m|^{2l}

    @property
    def dim(self):
        return len(self.basis)

    def index_of(self, m=(0, 0)):
        hit = np.flatnonzero((self.basis[:, 0] == m[0]) & (self.basis[:, 1] == m[1]))
        return int(hit[0]) if len(hit) else None


class Model:
    """The recurrent operator family H^(1), H^(2), ... for a fixed potential.

    ``k`` fixes the period bookkeeping (M_n, cells); spectral parameters are
    passed separately so one model serves a whole lambda grid.
    """

    def __init__(self, params, potential, k, levels=1):
        self.params = params
        self.potential = potential
        self.k = float(k)
        self.levels = int(levels)
        self.cells = [level_cell(n, params, k) for n in range(1, levels + 1)]
        self.M = [choose_M(n, k, params) for n in range(1, levels + 1)]
        self.windows = [window_sum(potential, n, k) for n in range(1, levels + 1)]
        self._grids = {}

    @property
    def l(self):
        return self.params.l

    def cell(self, n):
        return self.cells[n - 1]

    def window(self, n):
        return self.windows[n - 1]

    def N(self, n):
        """Refinement factor from level n to n + 1."""
        return self.cells[n].N_hat // self.cells[n - 1].N_hat

    def coefficients(self, n, alpha=1.0, only_top=False):
        """Coefficient map of W_1 + ... + W_{n-1} + alpha W_n on the level-n lattice."""
        out = {}
        Nn = self.cell(n).N_hat
        levels = [n] if only_top else range(1, n + 1)
        for m in levels:
            f = Nn // self.cell(m).N_hat
            scale = alpha if m == n else 1.0
            if scale == 0:
                continue
            for q, v in self.window(m).coeffs.items():
                key = (q[0] * f, q[1] * f)
                out[key] = out.get(key, 0) + scale * v
        return {q: v for q, v in sorted(out.items()) if v != 0}

    def grid(self, n, alpha=1.0, only_top=False):
        key = (n, float(alpha), only_top)
        if key not in self._grids:
            coeffs = self.coefficients(n, alpha, only_top)
            if coeffs:
                Q = np.array(list(coeffs.keys()))
                lo, hi = Q.min(axis=0), Q.max(axis=0)
            else:
                lo = hi = np.zeros(2, dtype=int)
            g = np.zeros((hi[0] - lo[0] + 1, hi[1] - lo[1] + 1), dtype=complex)
            for q, v in coeffs.items():
                g[q[0] - lo[0], q[1] - lo[1]] = v
            self._grids[key] = (g, (-int(lo[0]), -int(lo[1])))
        return self._grids[key]

    def basis(self, n, y, rho, max_dim=None):
        """Lattice indices m with |p_m(Re y)| <= rho, ordered by |p_m| then m."""
        cell = self.cell(n)
        yr = np.real(np.asarray(y))
        h = cell.spacing
        lo = np.floor((-yr - rho) / h).astype(int)
        hi = np.ceil((-yr + rho) / h).astype(int)
        if max_dim is not None:
            est = math.pi * rho * rho / (h[0] * h[1])
            if est > 1.3 * max_dim + 50:
                raise DimensionError(
                    f"cutoff rho={rho:.4g} gives ~{int(est)} basis vectors at level {n} "
                    f"(limit {max_dim})")
        j1, j2 = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1),
                             indexing="ij")
        J = np.stack([j1.ravel(), j2.ravel()], axis=1)
        P = J * h + yr
        r2 = np.einsum("ij,ij->i", P, P)
        keep = r2 <= rho * rho
        J, r2 = J[keep], r2[keep]
        order = np.lexsort((J[:, 1], J[:, 0], r2))
        J = J[order]
        if max_dim is not None and len(J) > max_dim:
            raise DimensionError(
                f"cutoff rho={rho:.4g} gives {len(J)} basis vectors at level {n} (limit {max_dim})")
        return J

    def momenta(self, n, y, basis):
        """p_m(y) for the basis rows (complex if y is complex)."""
        return np.asarray(y)[None, :] + basis * self.cell(n).spacing[None, :]

    def free_diagonal(self, n, y, basis):
        """|p_m(y)|^{2l}, continued analytically via p1^2 + p2^2 for complex y."""
        P = self.momenta(n, y, basis)
        s = P[:, 0] ** 2 + P[:, 1] ** 2
        return s ** self.l

    def matrix(self, n, y, basis, alpha=1.0, only_top=False, free=True):
        g, off = self.grid(n, alpha, only_top)
        diag = self.free_diagonal(n, y, basis) if free else np.zeros(len(basis))
        return kernels.fill_matrix(basis, np.asarray(diag, dtype=complex), g, off), diag


def _as_vec(t):
    if isinstance(t, Quasimomentum):
        return t.vec, t.level
    return np.asarray(t), None


def assemble(model, level, t, trunc, alpha=1.0, basis=None, k=None):
    """BlochMatrix of H_0 + W_1 + ... + W_{level-1} + alpha W_level at ``t``.

    ``t`` may be a Quasimomentum, a real pair, or a complex pair (the basis is
    then chosen from its real part unless given explicitly).
    """
    if not -1.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [-1, 1]")
    y, lev = _as_vec(t)
    if lev is not None and lev != level:
        raise ValueError(f"quasimomentum level {lev} does not match requested level {level}")
    if basis is None:
        basis = model.basis(level, y, trunc.radius(k or model.k), trunc.max_dim)
    if len(basis) == 0:
        raise DimensionError("empty basis: cutoff excludes every lattice point")
    M, diag = model.matrix(level, y, basis, alpha)
    return BlochMatrix(level, np.array(y), basis, M, float(alpha), np.asarray(diag))


def _hermitian_check(A, tol=1e-13):
    scale = max(1.0, float(np.max(np.abs(np.diag(A)))) if A.size else 1.0)
    err = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if err > tol * scale:
        raise ValueError(f"matrix is not Hermitian (max |A - A*| = {err:.3g}, scale {scale:.3g})")


def oracle_eigs(M, window=None, vectors=True):
    """Eigenpairs of the truncated matrix with eigenvalue in ``window`` (sorted ascending)."""
    A = M.matrix if isinstance(M, BlochMatrix) else np.asarray(M)
    _hermitian_check(A)
    A = 0.5 * (A + A.conj().T)
    kw = {}
    if window is not None:
        lo, hi = window
        kw["subset_by_value"] = (lo, hi)
        kw["driver"] = "evr"
    if vectors:
        w, V = scipy.linalg.eigh(A, **kw)
        return w, V
    w = scipy.linalg.eigh(A, eigvals_only=True, **kw)
    return w, None


def matched_eigenpair(M, pos=None, window=None):
    """Eigenpair with the largest overlap with the plane wave at basis position ``pos``.

    ``pos`` defaults to the position of lattice index (0, 0).
    """
    if pos is None:
        pos = M.index_of((0, 0))
        if pos is None:
            raise ValueError("lattice index (0, 0) not in basis")
    w, V = oracle_eigs(M, window)
    if len(w) == 0:
        raise ValueError("no eigenvalue in window")
    i = int(np.argmax(np.abs(V[pos, :])))
    return float(w[i]), V[:, i], float(abs(V[pos, i]))


def resolvent_gap(M, z):
    """Exact resolvent norm 1 / min_i |lambda_i - z| of the truncated Hermitian matrix."""
    w, _ = oracle_eigs(M, vectors=False)
    d = np.abs(w - z)
    scale = max(1.0, float(np.max(np.abs(w))))
    if d.min() <= 1e-12 * scale:
        raise PoleError(f"z = {z} is an eigenvalue (distance {d.min():.3g})")
    return float(1.0 / d.min())


def coset_eigh(model, level, y, basis, alpha=0.0):
    """Eigen-decomposition of the level operator with the top window scaled by ``alpha``.

    For ``alpha = 0`` the matrix is the extended lower-level operator, which is
    block diagonal over the cosets m mod N_{level-1}; each block is
    diagonalized separately. Returns (eigenvalues, eigenvectors, matrix).
    """
    A, diag = model.matrix(level, y, basis, alpha)
    if level == 1 and alpha == 0:
        w = np.real(diag).astype(float)
        return w, None, A
    if alpha != 0 or level == 1:
        A = 0.5 * (A + A.conj().T)
        w, V = scipy.linalg.eigh(A)
        return w, V, A
    N = model.N(level - 1)
    w = np.empty(len(basis))
    V = np.zeros((len(basis), len(basis)), dtype=complex)
    key = (basis[:, 0] % N) * N + (basis[:, 1] % N)
    for c in np.unique(key):
        idx = np.flatnonzero(key == c)
        sub = A[np.ix_(idx, idx)]
        ws, Vs = scipy.linalg.eigh(0.5 * (sub + sub.conj().T))
        w[idx] = ws
        V[np.ix_(idx, idx)] = Vs
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], A

