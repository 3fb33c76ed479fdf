"""Dual lattices, quasimomentum cells and refinement offsets.

A level-n cell has periods ``N_hat * (a1, a2)`` in position space, so its
dual lattice has spacing ``2*pi / (N_hat * a_i)`` and the quasimomentum cell
is the box ``[0, 2*pi/(N_hat*a1)) x [0, 2*pi/(N_hat*a2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Global problem data for H = (-Delta)^l + V.

    ``b`` are the base periods of the first potential block, ``eta`` the
    super-exponential decay exponent of the blocks, ``delta`` and ``s1`` the
    geometric exponents steering the non-resonance construction.
    """

    l: int
    b1: float
    b2: float
    eta: float = 2.5
    delta: float = 0.1
    s1: float = 0.25

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ValueError(f"l must be a positive integer, got {self.l}")
        if self.b1 <= 0 or self.b2 <= 0:
            raise ValueError("base periods b1, b2 must be positive")
        if self.eta <= 2:
            raise ValueError(f"eta must exceed 2, got {self.eta}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.s1 <= 0:
            raise ValueError("s1 must be positive")
        if not 2 * self.delta < 2 * self.l - 2 - 4 * self.s1:
            raise ValueError(
                f"need 2*delta < 2l-2-4*s1 (got 2*delta={2 * self.delta}, "
                f"2l-2-4*s1={2 * self.l - 2 - 4 * self.s1})")
        if self.gamma0 <= 0:
            raise ValueError(f"gamma0 = {self.gamma0} must be positive")

    @property
    def b(self):
        return np.array([self.b1, self.b2])

    def s(self, n):
        """Exponent s_n = 2^(n-1) s1."""
        return 2.0 ** (n - 1) * self.s1

    @property
    def gamma0(self):
        return 2 * self.l - 2 - 4 * self.s1 - 2 * self.delta

    @property
    def gamma1(self):
        return 2 * self.l - 4 - 7 * self.s1 - 2 * self.delta

    @property
    def gamma2(self):
        return 2 * self.l - 2 - 4 * self.s1 - 3 * self.delta

    @property
    def gamma3(self):
        return self.delta / 2

    @property
    def gamma4(self):
        return (4 * self.l - 3 - 4 * self.s1 - 3 * self.delta) / (2 * self.l)

    @property
    def gamma5(self):
        return (4 * self.l - 5 - 8 * self.s1 - 4 * self.delta) / (2 * self.l)


@dataclass(frozen=True)
class CellSpec:
    """Quasimomentum cell of a refinement level."""

    level: int
    N_hat: int
    a1: float
    a2: float

    def __post_init__(self):
        if self.level < 1 or self.N_hat < 1:
            raise ValueError("level and N_hat must be >= 1")
        if self.a1 <= 0 or self.a2 <= 0:
            raise ValueError("periods must be positive")

    @property
    def a(self):
        return np.array([self.a1, self.a2])

    @property
    def periods(self):
        return self.N_hat * self.a

    @property
    def spacing(self):
        """Dual-lattice spacing (= side lengths of the cell box)."""
        return TWO_PI / self.periods

    @property
    def area(self):
        s = self.spacing
        return float(s[0] * s[1])

    def refined(self, N):
        """Cell of the next level after refining the periods by N."""
        return CellSpec(self.level + 1, self.N_hat * N, self.a1, self.a2)


@dataclass(frozen=True)
class Quasimomentum:
    t: tuple
    level: int = 1

    @property
    def vec(self):
        return np.array(self.t, dtype=float)


@dataclass(frozen=True)
class RefinementOffsets:
    level: int
    N: int
    indices: tuple  # tuple of integer pairs p
    vectors: np.ndarray  # (N*N, 2) offsets 2*pi*p/(N_hat_next * a)

    def __len__(self):
        return len(self.indices)


def _as_qm(t, cell):
    if isinstance(t, Quasimomentum):
        if t.level != cell.level:
            raise ValueError(
                f"quasimomentum level {t.level} does not match cell level {cell.level}")
        return t.vec
    return np.asarray(t, dtype=float)


def dual_point(j, t, cell):
    """Return p_j(t) = 2*pi*j/(N_hat*a) + t."""
    tv = _as_qm(t, cell)
    return TWO_PI * np.asarray(j, dtype=float) / cell.periods + tv


def reduce_to_cell(kappa_vec, cell, snap=None):
    """Parallel shift of ``kappa_vec`` into the cell.

    Returns ``(Quasimomentum, j)`` with ``kappa_vec = dual_point(j, t)``.
    Points within ``snap`` (relative, default a few ulps) of a cell boundary
    are snapped onto the lower boundary so that round trips stay exact.
    """
    kv = np.asarray(kappa_vec, dtype=float)
    h = cell.spacing
    x = kv / h
    j = np.floor(x)
    frac = x - j
    tol = 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(x)) if snap is None else snap
    up = (1.0 - frac) <= tol
    j = np.where(up, j + 1, j)
    t = kv - TWO_PI * j / cell.periods
    # guard against t landing a hair outside [0, h) by rounding
    t = np.where(t < 0, np.where(-t <= tol * h, 0.0, t), t)
    t = np.where(t >= h, t - h, t)
    ji = tuple(int(v) for v in j)
    return Quasimomentum(tuple(float(v) for v in t), cell.level), ji


def refinement_offsets(level, params, k):
    """Offsets P^(level-1) for the step from ``level - 1`` to ``level``."""
    if level < 2:
        raise ValueError("refinement offsets exist only for level >= 2")
    from .potential import level_cell, refinement_factor
    coarse = level_cell(level - 1, params, k)
    return offsets_from_cell(coarse, refinement_factor(level - 1, params, k))


def offsets_from_cell(cell, N):
    """Offsets 2*pi*p/(N_hat*N*a) for p in {0..N-1}^2, refining ``cell`` by N.

    ``cell`` is the coarser level; the returned offsets tile its box with
    copies of the refined cell box.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    fine = cell.refined(N)
    idx = tuple((p1, p2) for p1 in range(N) for p2 in range(N))
    vecs = TWO_PI * np.array(idx, dtype=float) / fine.periods
    return RefinementOffsets(level=cell.level, N=N, indices=idx, vectors=vecs)


def nu(phi):
    """Unit direction (cos phi, sin phi); works for complex phi."""
    return np.array([np.cos(phi), np.sin(phi)])


def lattice_box(center, radius, cell):
    """All integer j with |dual_point(j, 0) + center| <= radius (real center)."""
    h = cell.spacing
    c = np.asarray(center, dtype=float)
    lo = np.floor((-c - radius) / h).astype(int)
    hi = np.ceil((-c + radius) / h).astype(int)
    j1, j2 = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1),
                         indexing="ij")
    J = np.stack([j1.ravel(), j2.ravel()], axis=1)
    P = J * h + c
    keep = np.einsum("ij,ij->i", P, P) <= radius * radius
    return J[keep], P[keep]
