"""Perturbation series for a non-resonant eigenvalue and its spectral projection.

With ``B`` the unperturbed (base) operator, ``W`` the top-level window and a
circle ``C`` enclosing exactly one eigenvalue ``mu_j`` of ``B``:

    g_r = (-1)^r / (2 pi i r) Tr oint ((B - z)^{-1} W)^r dz,
    G_r = (-1)^(r+1) / (2 pi i) oint ((B - z)^{-1} W)^r (B - z)^{-1} dz,

and ``lambda(alpha) = mu_j + sum_r alpha^r g_r``, ``E(alpha) = E_j + sum_r alpha^r G_r``.

Quadrature is the trapezoid rule on ``C``. Writing the resolvent as
``d(z) P_j + R'(z)`` with ``P_j`` the rank-one projector of ``mu_j`` and
``R'`` analytic inside ``C``, every product free of ``P_j`` integrates to
zero. The integrands are therefore evaluated on the ``P_j``-containing words
only, which reduces each node to a handful of matrix-vector products; this is
the same contour integral, just without the parts whose exact value is 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bloch import ContourSpec, coset_eigh
from .potential import epsilon


class ResonantContour(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SeriesEigenvalue:
    level: int
    base: float
    g: np.ndarray  # g_1 .. g_R
    alpha: float
    tail: float
    value: float
    contour: ContourSpec
    Q_used: int
    bounds: np.ndarray = field(default=None, repr=False)  # level bound on |g_r|, for reference


@dataclass(frozen=True, eq=False)
class SeriesProjection:
    level: int
    basis: np.ndarray
    base_vector: np.ndarray  # psi_j (unit), the range of the base projector
    G: list  # G_1 .. G_R (matrices, or vectors G_r psi_j when ``vector_only``)
    alpha: float
    vector_only: bool

    @property
    def E(self):
        """E(alpha) on the truncated basis (matrix mode only)."""
        if self.vector_only:
            raise ValueError("projection was computed in vector mode")
        E = np.outer(self.base_vector, self.base_vector.conj())
        for r, Gr in enumerate(self.G, start=1):
            E = E + self.alpha ** r * Gr
        return E

    @property
    def vector(self):
        """E(alpha) psi_j."""
        if self.vector_only:
            v = self.base_vector.astype(complex).copy()
            for r, Gr in enumerate(self.G, start=1):
                v = v + self.alpha ** r * Gr
            return v
        return self.E @ self.base_vector


# ---------------------------------------------------------------------------
# base decomposition
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class BaseData:
    level: int
    y: np.ndarray
    basis: np.ndarray
    mu: np.ndarray  # eigenvalues of the base operator (basis order at level 1)
    U: np.ndarray | None  # eigenvectors (None = identity, level 1)
    j: int  # position of the selected eigenvalue in mu
    W: np.ndarray  # top window matrix on the basis
    W_norm: float

    @property
    def psi(self):
        if self.U is None:
            e = np.zeros(len(self.mu), dtype=complex)
            e[self.j] = 1.0
            return e
        return self.U[:, self.j]

    def apply_reduced(self, V, zeta, center):
        """R'(z) V for the columns of V, one node z = center + zeta per column."""
        dz = (self.mu - center)[:, None] - zeta[None, :]
        inv = 1.0 / dz
        inv[self.j, :] = 0.0
        if self.U is None:
            return inv * V
        return self.U @ (inv * (self.U.conj().T @ V))


def base_data(model, level, y, trunc, basis=None):
    """Unperturbed operator at ``y`` and the eigenvalue continuing the plane wave at m = 0."""
    y = np.asarray(y, dtype=float)
    if basis is None:
        basis = model.basis(level, y, trunc.radius(model.k), trunc.max_dim)
    pos = np.flatnonzero((basis[:, 0] == 0) & (basis[:, 1] == 0))
    if len(pos) == 0:
        raise ValueError("plane wave m = 0 lies outside the cutoff")
    pos = int(pos[0])
    mu, U, _ = coset_eigh(model, level, y, basis, alpha=0.0)
    if U is None:
        j = pos
    else:
        j = int(np.argmax(np.abs(U[pos, :])))
    W, _ = model.matrix(level, y, basis, alpha=1.0, only_top=True, free=False)
    return BaseData(level, y, basis, np.asarray(mu, dtype=float), U, j, W,
                    model.window(level).norm)


def default_contour(model, level, base, trunc, lam=None, mode="desk", band=None):
    """Level 1: radius k^{2l-2-4 s1-delta}; level n: eps_{n-1}/2; centred on the base eigenvalue."""
    p = model.params
    mu_j = float(base.mu[base.j])
    if level == 1:
        k_loc = mu_j ** (1.0 / (2 * p.l))
        radius = k_loc ** (2 * p.l - 2 - 4 * p.s1 - p.delta)
    else:
        lam_ = lam if lam is not None else mu_j
        k_loc = lam_ ** (1.0 / (2 * p.l))
        radius = 0.5 * epsilon(level - 1, k_loc, p, lam=lam_, mode=mode, band=band)
    return ContourSpec(mu_j, radius, trunc.Q)


def check_contour(base, contour):
    """Exactly one base eigenvalue inside, none within radius/10 of the circle."""
    d = np.abs(base.mu - contour.center)
    inside = np.flatnonzero(d < contour.radius)
    if len(inside) != 1 or inside[0] != base.j:
        others = [float(base.mu[i]) for i in inside if i != base.j]
        raise ResonantContour(
            f"contour |z - {contour.center:.17g}| = {contour.radius:.6g} encloses "
            f"{len(inside)} eigenvalues (others: {others[:4]})")
    near = np.abs(d - contour.radius)
    near[base.j] = np.inf
    i = int(np.argmin(near))
    if near[i] < contour.radius / 10:
        raise ResonantContour(
            f"eigenvalue {base.mu[i]:.17g} lies within radius/10 of the contour")


# ---------------------------------------------------------------------------
# word bookkeeping
# ---------------------------------------------------------------------------

def _cyclic_words(r):
    """(number of P's, gaps) for every cyclic word of length r with at least one P."""
    out = []
    for bits in itertools.product((0, 1), repeat=r):
        pos = [i for i, b in enumerate(bits) if b]
        if not pos:
            continue
        gaps = [pos[t + 1] - pos[t] - 1 for t in range(len(pos) - 1)]
        gaps.append(r - pos[-1] + pos[0] - 1)
        out.append((len(pos), tuple(gaps)))
    return out


def _open_words(r):
    """(first P position a, tail length b, number of P's, inner gaps) for words of r+1 slots."""
    out = []
    for bits in itertools.product((0, 1), repeat=r + 1):
        pos = [i for i, b in enumerate(bits) if b]
        if not pos:
            continue
        gaps = tuple(pos[t + 1] - pos[t] - 1 for t in range(len(pos) - 1))
        out.append((pos[0], r - pos[-1], len(pos), gaps))
    return out


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _node_scalars(base, zeta, center, R):
    """d(z) and s_m(z) = psi^* W (R'(z) W)^m psi for m < R at z = center + zeta."""
    psi = base.psi
    Qn = len(zeta)
    d = 1.0 / ((base.mu[base.j] - center) - zeta)
    v = np.repeat((base.W @ psi)[:, None], Qn, axis=1)
    s = [np.full(Qn, psi.conj() @ v[:, 0])]
    for _ in range(1, R):
        v = base.W @ base.apply_reduced(v, zeta, center)
        s.append(psi.conj() @ v)
    return d, np.array(s)


def _eigen_integrals(base, contour, R, Q):
    z, wt = contour.offsets(Q)
    d, s = _node_scalars(base, z, contour.center, R)
    g = np.zeros(R, dtype=complex)
    scale = np.zeros(R)
    for r in range(1, R + 1):
        F = np.zeros(len(z), dtype=complex)
        for b, gaps in _cyclic_words(r):
            term = d ** b
            for gp in gaps:
                term = term * s[gp]
            F += term
        vals = F * wt
        g[r - 1] = (-1) ** r / r * np.sum(vals)
        scale[r - 1] = np.sum(np.abs(vals)) / r
    return g, scale


def series_coefficients(base, contour, R, Q_max=4096, tol=1e-10, projection=False,
                        vector_only=True):
    """Eigenvalue coefficients g_1..g_R (and projection terms G_1..G_R if requested).

    Doubles the node count until two successive estimates agree to ``tol``
    (relative, with a round-off floor) and returns ``(g, G, Q_used)``.
    """
    check_contour(base, contour)
    Q = contour.Q
    g_prev, _ = _eigen_integrals(base, contour, R, Q)
    while True:
        Q2 = 2 * Q
        g, scale = _eigen_integrals(base, contour, R, Q2)
        floor = 64 * np.finfo(float).eps * scale
        if np.all(np.abs(g - g_prev) <= tol * np.abs(g) + floor):
            break
        if Q2 >= Q_max:
            raise QuadratureError(
                f"contour quadrature not converged at Q={Q2}: "
                f"max change {np.max(np.abs(g - g_prev)):.3g}")
        Q, g_prev = Q2, g
    G = None
    if projection:
        G = _projection_integrals(base, contour, R, Q2, vector_only)
    return np.real(g), G, Q2


def _projection_integrals(base, contour, R, Q, vector_only):
    z, wt = contour.offsets(Q)
    c0 = contour.center
    psi = base.psi
    d, s = _node_scalars(base, z, c0, R)
    # u_a = (R'(z) W)^a psi ; w_b = (R'(conj z) W)^b psi
    u = [np.repeat(psi[:, None], len(z), axis=1)]
    w = [u[0]]
    for _ in range(R):
        u.append(base.apply_reduced(base.W @ u[-1], z, c0))
        w.append(base.apply_reduced(base.W @ w[-1], z.conj(), c0))
    wpsi = [wb.conj().T @ psi for wb in w]  # w_b^* psi per node
    out = []
    for r in range(1, R + 1):
        acc = np.zeros(len(psi), dtype=complex) if vector_only else \
            np.zeros((len(psi), len(psi)), dtype=complex)
        coef = {}
        for a, bt, nP, gaps in _open_words(r):
            c = d ** nP
            for gp in gaps:
                c = c * s[gp]
            coef[(a, bt)] = coef.get((a, bt), 0) + c
        for (a, bt), c in coef.items():
            cw = c * wt
            if vector_only:
                acc += u[a] @ (cw * wpsi[bt])
            else:
                acc += (u[a] * cw[None, :]) @ w[bt].conj().T
        out.append((-1) ** (r + 1) * acc)
    return out


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def tail_bound(base, contour, alpha, R):
    """Bound on |sum_{r>R} alpha^r g_r| from |g_r| <= radius (2|alpha| ||W|| / dmin)^r / r."""
    if base.W_norm == 0 or alpha == 0:
        return 0.0
    d = np.abs(base.mu - contour.center) - contour.radius
    d[base.j] = np.inf
    dmin = min(contour.radius, float(np.min(d))) if len(d) > 1 else contour.radius
    q = 2 * abs(alpha) * base.W_norm / dmin
    if q >= 1:
        return math.inf
    return contour.radius * q ** (R + 1) / ((R + 1) * (1 - q))


def level_bounds(model, level, base, contour, R, lam=None):
    """The level's reference bound on |g_r| (level 1: k^{2l-2-4s1-gamma0 r-delta})."""
    p = model.params
    r = np.arange(1, R + 1)
    if level == 1:
        k_loc = float(base.mu[base.j]) ** (1.0 / (2 * p.l))
        return k_loc ** (2 * p.l - 2 - 4 * p.s1 - p.gamma0 * r - p.delta)
    eps = 2 * contour.radius
    return 1.5 * eps * (4 * eps ** 3) ** r


def eigenvalue_series(model, level, kappa_vec, alpha, trunc, lam=None, mode="desk", band=None,
                      base=None, contour=None):
    """lambda^(n)(alpha, kappa) = base + sum_r alpha^r g_r with a tail bound."""
    if base is None:
        base = base_data(model, level, kappa_vec, trunc)
    if contour is None:
        contour = default_contour(model, level, base, trunc, lam, mode, band)
    mu_j = float(base.mu[base.j])
    if alpha == 0 or base.W_norm == 0:
        g = np.zeros(trunc.R)
        return SeriesEigenvalue(level, mu_j, g, float(alpha), 0.0, mu_j, contour, 0,
                                level_bounds(model, level, base, contour, trunc.R))
    g, _, Q = series_coefficients(base, contour, trunc.R, trunc.Q_max)
    powers = float(alpha) ** np.arange(1, trunc.R + 1)
    # pairwise-style ordered sum: smallest terms first for reproducibility
    terms = powers * g
    total = mu_j + float(np.sum(terms[::-1]))
    return SeriesEigenvalue(level, mu_j, g, float(alpha), tail_bound(base, contour, alpha, trunc.R),
                            total, contour, Q, level_bounds(model, level, base, contour, trunc.R))


def projection_series(model, level, kappa_vec, alpha, trunc, lam=None, mode="desk", band=None,
                      vector_only=False, base=None, contour=None):
    """E^(n)(alpha, kappa) = E_j + sum_r alpha^r G_r on the truncated basis."""
    if base is None:
        base = base_data(model, level, kappa_vec, trunc)
    if contour is None:
        contour = default_contour(model, level, base, trunc, lam, mode, band)
    if alpha == 0 or base.W_norm == 0:
        zero = np.zeros(len(base.mu), dtype=complex) if vector_only else \
            np.zeros((len(base.mu),) * 2, dtype=complex)
        return SeriesProjection(level, base.basis, base.psi, [zero] * trunc.R, float(alpha),
                                vector_only)
    _, G, _ = series_coefficients(base, contour, trunc.R, trunc.Q_max, projection=True,
                                  vector_only=vector_only)
    return SeriesProjection(level, base.basis, base.psi, G, float(alpha), vector_only)


def g2_closed_form(model, kappa_vec, trunc, basis=None, rel_tol=1e-12):
    """Residue formula g_2 = sum_q |w_q|^2 / (p_j^{2l} - p_{j+q}^{2l}) over the truncated basis."""
    y = np.asarray(kappa_vec, dtype=float)
    if basis is None:
        basis = model.basis(1, y, trunc.radius(model.k), trunc.max_dim)
    diag = np.real(model.free_diagonal(1, y, basis))
    lookup = {tuple(m): i for i, m in enumerate(basis)}
    j = lookup[(0, 0)]
    total = 0.0
    for q, v in model.window(1).coeffs.items():
        i = lookup.get(q)
        if i is None:
            continue
        den = diag[j] - diag[i]
        if abs(den) <= rel_tol * diag[j]:
            raise ResonantContour(f"resonant pair j=(0,0), q={q}")
        total += abs(v) ** 2 / den
    return float(total)


def trace_quadrature_direct(base, contour, R, Q):
    """Reference: the full trace integrand Tr((R(z) W)^r) without the word reduction."""
    z, wt = contour.offsets(Q)
    g = np.zeros(R, dtype=complex)
    if base.U is None:
        Wt = base.W
    else:
        Wt = base.U.conj().T @ base.W @ base.U
    for zk, wk in zip(z, wt):
        X = Wt / ((base.mu - contour.center) - zk)[:, None]
        P = np.eye(len(base.mu), dtype=complex)
        for r in range(1, R + 1):
            P = P @ X
            g[r - 1] += (-1) ** r / r * np.trace(P) * wk
    return np.real(g)


def derivative_checks(model, level, kappa_vec, alpha, trunc, h=None, **kw):
    """Finite-difference gradient/Hessian of the series eigenvalue vs the free-operator leading terms."""
    y = np.asarray(kappa_vec, dtype=float)
    l = model.params.l
    kk = float(np.linalg.norm(y))
    if h is None:
        h = 1e-4 * kk
    if h <= 1e-12 * kk:
        raise ValueError("finite-difference step underflows")

    def lam(v):
        return eigenvalue_series(model, level, v, alpha, trunc, **kw).value

    e = np.eye(2)
    f0 = lam(y)
    grad = np.array([(lam(y + h * e[i]) - lam(y - h * e[i])) / (2 * h) for i in range(2)])
    grad2 = np.array([(lam(y + 0.5 * h * e[i]) - lam(y - 0.5 * h * e[i])) / h for i in range(2)])
    hess = np.zeros((2, 2))
    for i in range(2):
        hess[i, i] = (lam(y + h * e[i]) - 2 * f0 + lam(y - h * e[i])) / h ** 2
    hess[0, 1] = hess[1, 0] = (lam(y + h * (e[0] + e[1])) - lam(y + h * (e[0] - e[1]))
                               - lam(y - h * (e[0] - e[1])) + lam(y - h * (e[0] + e[1]))) / (4 * h * h)
    lead = 2 * l * kk ** (2 * l - 2) * y
    exact_free = 2 * l * float(y @ y) ** (l - 1) * y
    return {
        "gradient": grad,
        "leading": lead,
        "free_gradient": exact_free,
        "relative_deviation": float(np.linalg.norm(grad - lead) / np.linalg.norm(lead)),
        "fd_discrepancy_h": float(np.linalg.norm(grad - exact_free)),
        "fd_discrepancy_h2": float(np.linalg.norm(grad2 - exact_free)),
        "hessian": hess,
        "hessian_bound": 4 * l * l * kk ** (2 * l - 2),
        "hessian_ok": bool(np.max(np.abs(hess)) < 4 * l * l * kk ** (2 * l - 2)),
    }
