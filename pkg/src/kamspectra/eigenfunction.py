"""Near-plane-wave eigenfunctions Psi_n(kappa, x) and their level-by-level corrections.

Psi_n(x) = sum_m c_m exp(i <p_m(kappa), x>), p_m = kappa + 2 pi m / (N_hat_n a), with
sum |c_m|^2 = 1, i.e. ||Psi_n||_{L2(Q_n)} = |Q_n|^{1/2} over the level cell Q_n.
The correction u~_n = exp(-i <kappa, x>) (Psi_n - Psi_{n-1}) (Psi_0 the plane
wave) is periodic on the level-n cell, so its Fourier map lives on the
level-n lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bloch import TruncationParams, assemble, oracle_eigs
from .perturb import base_data, default_contour, eigenvalue_series, projection_series


class ResonantPoint(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LevelSlice:
    level: int
    basis: np.ndarray  # level-n lattice indices
    coeffs: np.ndarray  # c_m of Psi_n (unit l2 norm, phase fixed)
    lam: float  # lambda^(n)(kappa)
    drift: float  # lambda^(n) - lambda^(n-1) at kappa (lambda^(0) = |kappa|^{2l})
    tail: float  # tail bound of the eigenvalue series (0 for the oracle)
    u_tilde: dict  # lattice index -> coefficient of u~_n
    sup_u: float  # sup-norm estimate of u~_n
    sup_err: float  # Richardson-style error bar of sup_u
    method: str
    overlap: float  # |<base vector, Psi_n>|

    def coefficient_map(self):
        return {tuple(int(v) for v in m): complex(c) for m, c in zip(self.basis, self.coeffs)}


@dataclass(frozen=True, eq=False)
class EigenfunctionRecord:
    kappa_vec: np.ndarray
    slices: tuple = ()
    conventions: dict = field(default_factory=lambda: {
        "normalization": "sum |c_m|^2 = 1 (||Psi_n||_{L2(Q_n)} = |Q_n|^{1/2})",
        "phase": "level 1: c_0 > 0; level n: Im(Psi_n, Psi~_{n-1}) = 0 with positive real part",
        "operator": "(-Delta)^l + V"})

    def add(self, sl):
        return EigenfunctionRecord(self.kappa_vec, self.slices + (sl,), self.conventions)

    def level(self, n):
        return self.slices[n - 1]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def embed(basis, factor):
    """Re-index level-(n-1) lattice indices on the level-n lattice (m -> m * N)."""
    return np.asarray(basis) * int(factor)


def _lookup(basis):
    return {tuple(int(v) for v in m): i for i, m in enumerate(basis)}


def coset_consistent(coeff_map, N):
    """Embedded coefficients vanish off the sublattice N Z^2 (exact index check)."""
    return all(q[0] % N == 0 and q[1] % N == 0 for q, v in coeff_map.items() if v != 0)


def _previous_on_basis(prev, basis, N):
    """Coefficients of Psi_{n-1} placed on the level-n basis."""
    out = np.zeros(len(basis), dtype=complex)
    look = _lookup(basis)
    for m, c in zip(embed(prev.basis, N), prev.coeffs):
        i = look.get(tuple(int(v) for v in m))
        if i is None:
            if abs(c) > 0:
                raise ValueError("level-(n-1) basis is not contained in the level-n basis")
            continue
        out[i] = c
    return out


def sup_norm(coeff_map, grid=256):
    """sup |sum_m d_m exp(2 pi i <m, x/L>)| on a grid over one period, with an error bar.

    The grid is enlarged (powers of two) until it resolves all indices; the
    error bar is the change against the grid of half the resolution.
    """
    if not coeff_map:
        return 0.0, 0.0
    idx = np.array(list(coeff_map.keys()))
    vals = np.array(list(coeff_map.values()), dtype=complex)
    need = 4 * int(np.max(np.abs(idx))) + 2
    n = grid
    while n < need:
        n *= 2

    def sample(nn):
        a = np.zeros((nn, nn), dtype=complex)
        np.add.at(a, (idx[:, 0] % nn, idx[:, 1] % nn), vals)
        return np.abs(np.fft.ifft2(a) * (nn * nn))

    fine = sample(n)
    s_fine = float(fine.max())
    s_coarse = float(fine[::2, ::2].max())
    return s_fine, abs(s_fine - s_coarse)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble_psi(model, level, kappa_vec, alpha=1.0, trunc=None, previous=None, method="series",
                 lam=None, mode="desk", band=None, grid=256):
    """Level-n slice: Psi_n from the projection series (or the matched oracle eigenvector)."""
    trunc = trunc or TruncationParams()
    kappa_vec = np.asarray(kappa_vec, dtype=float)
    l = model.params.l
    if level >= 2 and (previous is None or previous.level != level - 1):
        raise ValueError("level >= 2 needs the level-(n-1) slice")
    base = base_data(model, level, kappa_vec, trunc)
    basis = base.basis
    N = model.N(level - 1) if level >= 2 else 1
    if method == "series":
        contour = default_contour(model, level, base, trunc, lam, mode, band)
        se = eigenvalue_series(model, level, kappa_vec, alpha, trunc, lam=lam, mode=mode,
                               band=band, base=base, contour=contour)
        pr = projection_series(model, level, kappa_vec, alpha, trunc, lam=lam, mode=mode,
                               band=band, vector_only=True, base=base, contour=contour)
        v = pr.vector
        lam_n = se.value
        drift = float(np.sum((alpha ** np.arange(1, len(se.g) + 1) * se.g)[::-1]))
        tail = se.tail
    elif method == "oracle":
        M = assemble(model, level, kappa_vec, trunc, alpha, basis=basis)
        w, V = oracle_eigs(M)
        i = int(np.argmax(np.abs(V.conj().T @ base.psi)))
        v = V[:, i]
        lam_n = float(w[i])
        prev_lam = previous.lam if previous is not None else float(np.real(base.mu[base.j]))
        drift = lam_n - prev_lam
        tail = 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    v = v / np.linalg.norm(v)
    overlap = float(abs(np.vdot(base.psi, v)))
    if overlap < 0.5:
        raise ResonantPoint(f"overlap {overlap:.3g} with the base vector is below 1/2: "
                            f"kappa is not in the non-resonant set")
    if level == 1:
        pos = int(np.flatnonzero((basis[:, 0] == 0) & (basis[:, 1] == 0))[0])
        ref = v[pos]
        prev_c = np.zeros(len(basis), dtype=complex)
        prev_c[pos] = 1.0
    else:
        prev_c = _previous_on_basis(previous, basis, N)
        ref = np.vdot(prev_c, v)
    v = v * (abs(ref) / ref)
    diff = v - prev_c
    u = {tuple(int(x) for x in m): complex(c) for m, c in zip(basis, diff) if c != 0}
    s, err = sup_norm(u, grid)
    return LevelSlice(level, basis, v, float(lam_n), float(drift), float(tail), u, s, err,
                      method, overlap)


def assemble_record(model, levels, kappa_vec, alpha=1.0, trunc=None, method="series", lam=None,
                    mode="desk", band=None, grid=256):
    """Slices 1..levels at kappa (alpha applies to the top level only)."""
    rec = EigenfunctionRecord(np.asarray(kappa_vec, dtype=float))
    prev = None
    for n in range(1, levels + 1):
        a = alpha if n == levels else 1.0
        prev = assemble_psi(model, n, kappa_vec, a, trunc, prev, method, lam, mode, band, grid)
        rec = rec.add(prev)
    return rec


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def residual(model, record, level, trunc=None, alpha=1.0):
    """||(H^(n) - lambda^(n)) Psi_n|| / (|lambda^(n)| ||Psi_n||) on the truncated basis."""
    trunc = trunc or TruncationParams()
    sl = record.level(level)
    M = assemble(model, level, record.kappa_vec, trunc, alpha, basis=sl.basis)
    r = M.matrix @ sl.coeffs - sl.lam * sl.coeffs
    return float(np.linalg.norm(r) / (abs(sl.lam) * np.linalg.norm(sl.coeffs)))


def l2_norm(model, record, level):
    """||Psi_n||_{L2(Q_n)} = |Q_n|^{1/2} (sum |c|^2)^{1/2}, with |Q_n| the level cell area."""
    sl = record.level(level)
    area = float(np.prod(model.cell(level).periods))
    return math.sqrt(area) * float(np.linalg.norm(sl.coeffs)), math.sqrt(area)


def phase_defect(model, record, level):
    """Im of the normalized inner product (Psi_n, Psi~_{n-1}) (level 1: Im c_0 / |c_0|)."""
    sl = record.level(level)
    if level == 1:
        pos = int(np.flatnonzero((sl.basis[:, 0] == 0) & (sl.basis[:, 1] == 0))[0])
        c = sl.coeffs[pos]
    else:
        prev = _previous_on_basis(record.level(level - 1), sl.basis, model.N(level - 1))
        c = np.vdot(prev, sl.coeffs)
    return float(c.imag / abs(c))


def convergence_report(records):
    """Per-level sup|u~_n|, eigenvalue drifts |lambda^(n) - lambda^(n-1)| and their decay ratios."""
    if isinstance(records, EigenfunctionRecord):
        records = [records]
    rows = []
    ref = None
    for rec in records:
        if ref is not None and not np.array_equal(rec.kappa_vec, ref):
            raise ValueError("records have incompatible kappa vectors")
        ref = rec.kappa_vec
        prev = None
        for sl in rec.slices:
            row = {"level": sl.level, "lambda": sl.lam, "drift": abs(sl.drift),
                   "sup_u": sl.sup_u, "sup_err": sl.sup_err, "tail": sl.tail}
            if prev is not None:
                row["drift_ratio"] = abs(prev.drift) / abs(sl.drift) if sl.drift else math.inf
                row["sup_ratio"] = prev.sup_u / sl.sup_u if sl.sup_u else math.inf
                row["monotone"] = abs(sl.drift) <= abs(prev.drift) and sl.sup_u <= prev.sup_u
            rows.append(row)
            prev = sl
    return rows
