"""Resonance machinery in complex angle strips.

For an offset vector b the determinant

    d(phi) = det[(H(y(phi)) - lambda - eps) (H_0(y(phi)) + lambda)^{-1}],  y(phi) = kappa(phi) nu(phi) + b,

is analytic in a thin complex strip around the non-resonant angles. Its zeros
(quasi-intersections) are surrounded by small disks; zero counts on the
disk components are compared before and after switching the potential on,
and zeros are polished by Newton's method. Resonance arcs are the real
angle intervals where a shifted operator has an eigenvalue within an
eps-band of lambda.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from . import kernels
from .bloch import TruncationParams, assemble, oracle_eigs
from .isoenergetic import AngleDomain, Tracer, _wrap_intervals, complement
from .lattice import TWO_PI, lattice_box, nu, offsets_from_cell
from .potential import epsilon


class ZeroCountError(RuntimeError):
    pass


class RegimeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# ledgers
# ---------------------------------------------------------------------------

def disk_radius(m, k, params):
    """r^(1) = k^{-4-6 s1-3 delta}, r^(m+1) = r^(m) k^{-2-4 s_{m+1}-delta}."""
    r = k ** (-4 - 6 * params.s1 - 3 * params.delta)
    for i in range(2, m + 1):
        r *= k ** (-2 - 4 * params.s(i) - params.delta)
    return r


def strip_half_width(level, k, params):
    """Level 0: k^{-2-4 s1}; level >= 1: k^{-2-4 s1-2 delta} around Theta_level."""
    if level == 0:
        return k ** (-2 - 4 * params.s1)
    return k ** (-2 - 4 * params.s1 - 2 * params.delta)


def disk_cap(k, params, cell):
    """c0 k^{2+2 s1} with c0 = 8 pi / |K_1| (leading-order count of unperturbed zeros / k^2)."""
    c0 = 8 * math.pi / cell.area
    return c0 * k ** (2 + 2 * params.s1), c0


def b_zero(b_vec, cell):
    """Distance from b to the nearest vertex of the level cell, and that vertex."""
    b = np.asarray(b_vec, dtype=float)
    h = cell.spacing
    e = np.round(b / h) * h
    return float(np.hypot(*(b - e))), e


# ---------------------------------------------------------------------------
# strips and disk sets
# ---------------------------------------------------------------------------

def _real_distance(x, domain):
    """Distance on the circle from real x to a union of intervals."""
    if domain is None:
        return 0.0
    iv = domain.intervals
    if len(iv) == 0:
        return math.inf
    x = x % TWO_PI
    best = math.inf
    for a, b in iv:
        for shift in (-TWO_PI, 0.0, TWO_PI):
            xa = x + shift
            d = 0.0 if a <= xa <= b else min(abs(xa - a), abs(xa - b))
            best = min(best, d)
    return best


@dataclass(frozen=True, eq=False)
class ComplexStrip:
    """{phi : dist(phi, domain) < half_width} minus the excluded disk sets."""

    level: int
    half_width: float
    domain: AngleDomain | None = None  # None: the whole real circle (level 0)
    excluded: tuple = ()

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("strip half-width must be positive")

    def distance(self, z):
        return math.hypot(_real_distance(z.real, self.domain), z.imag)

    def contains(self, z):
        if self.distance(z) >= self.half_width:
            return False
        return not any(ds.contains(z) for ds in self.excluded)

    def refined(self, level, domain, excluded):
        return ComplexStrip(level, self.half_width, domain, self.excluded + tuple(excluded))


@dataclass(frozen=True, eq=False)
class DiskSet:
    level: int
    b_vec: np.ndarray
    b0: float
    radius: float
    centers: np.ndarray  # complex
    kinds: tuple  # "unperturbed" | "polished" | "small-b pole"
    labels: tuple = ()  # (m1, m2, +-1) per disk where known

    def __len__(self):
        return len(self.centers)

    def contains(self, z):
        return bool(len(self.centers)) and bool(np.any(np.abs(self.centers - z) < self.radius))

    def components(self):
        """Connected components of the union of open disks (index lists, sorted)."""
        n = len(self.centers)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        order = np.argsort(self.centers.real, kind="stable")
        c = self.centers
        for a_pos, a in enumerate(order):
            for b in order[a_pos + 1:]:
                if c[b].real - c[a].real >= 2 * self.radius:
                    break
                if abs(c[a] - c[b]) < 2 * self.radius:
                    parent[find(a)] = find(b)
        groups = {}
        for i in range(n):
            groups.setdefault(find(i), []).append(i)
        comps = [sorted(g) for g in groups.values()]
        comps.sort(key=lambda g: (c[g[0]].real, c[g[0]].imag))
        return comps

    def real_trace(self):
        """Real intervals covered by the disks (merged)."""
        iv = []
        for z in self.centers:
            if abs(z.imag) < self.radius:
                w = math.sqrt(self.radius ** 2 - z.imag ** 2)
                iv.append((z.real - w, z.real + w))
        return _wrap_intervals(iv) if iv else np.zeros((0, 2))

    def to_json(self):
        return {"level": self.level, "b_vec": [float(v) for v in self.b_vec], "b0": self.b0,
                "radius": self.radius,
                "centers": [[float(z.real), float(z.imag)] for z in self.centers],
                "kinds": list(self.kinds)}


def _sorted_diskset(level, b_vec, b0, radius, centers, kinds, labels=()):
    centers = np.asarray(centers, dtype=complex)
    order = np.lexsort((centers.imag, centers.real)) if len(centers) else np.zeros(0, dtype=int)
    labels = tuple(labels[i] for i in order) if labels else ()
    return DiskSet(level, np.asarray(b_vec, dtype=float), float(b0), float(radius),
                   centers[order], tuple(kinds[i] for i in order), labels)


# ---------------------------------------------------------------------------
# unperturbed zeros
# ---------------------------------------------------------------------------

def _wrap_phi(z):
    return complex(z.real % TWO_PI, z.imag)


def _circle_roots(c, k):
    """Complex phi with |k nu(phi) + c|_*^2 = k^2, i.e. k(c1 - i c2) u^2 + |c|^2 u + k(c1 + i c2) = 0."""
    c1, c2 = float(c[0]), float(c[1])
    cc = c1 * c1 + c2 * c2
    A = k * complex(c1, -c2)
    B = cc
    C = k * complex(c1, c2)
    disc = np.sqrt(complex(B * B - 4 * A * C))
    # stable pair of roots
    q = -0.5 * (B + disc) if B >= 0 else -0.5 * (B - disc)
    roots = [q / A, C / q] if q != 0 else [(-B + disc) / (2 * A), (-B - disc) / (2 * A)]
    out = []
    for u in roots:
        phi = -1j * np.log(u)
        # polish g(phi) = 2k <c, nu> + |c|^2 with Newton (derivative 2k <c, mu>)
        for _ in range(4):
            g = 2 * k * (c1 * np.cos(phi) + c2 * np.sin(phi)) + cc
            dg = 2 * k * (-c1 * np.sin(phi) + c2 * np.cos(phi))
            if dg == 0:
                break
            phi = phi - g / dg
        out.append(_wrap_phi(complex(phi)))
    return out


def unperturbed_zeros(b_vec, m_index, lam, l, cell, strip=None):
    """Roots phi_m^{+-} of |k nu(phi) + b + p_m(0)|_*^2 = k^2 lying in the strip."""
    b = np.asarray(b_vec, dtype=float)
    b0, _ = b_zero(b, cell)
    if b0 == 0:
        raise ValueError("b must not be a vertex of the cell (b0 = 0)")
    k = lam ** (1.0 / (2 * l))
    c = b + TWO_PI * np.asarray(m_index, dtype=float) / cell.periods
    if math.hypot(*c) >= 2 * k * (math.cosh(strip.half_width) if strip else 1.0) + 1e-12 * k:
        return []
    roots = _circle_roots(c, k)
    if strip is not None:
        roots = [z for z in roots if abs(z.imag) < strip.half_width]
    return sorted(roots, key=lambda z: (z.real, z.imag))


def all_unperturbed_zeros(b_vec, lam, l, cell, strip):
    """Every unperturbed zero in the strip, with its (m, sign) label."""
    k = lam ** (1.0 / (2 * l))
    rmax = 2 * k * math.cosh(strip.half_width) + 1e-9 * k
    J, _ = lattice_box(np.asarray(b_vec, dtype=float), rmax, cell)
    zeros, labels = [], []
    for m in map(tuple, J):
        for i, z in enumerate(unperturbed_zeros(b_vec, m, lam, l, cell, strip)):
            zeros.append(z)
            labels.append((int(m[0]), int(m[1]), 1 if i == 0 else -1))
    return zeros, labels


def build_O(b_vec, level, lam, params, cell, strip, prior=None, cap_factor=4.0):
    """Disk set O^(level)(b).

    Level 1: disks of radius r^(1) around the unperturbed zeros in Phi_0,
    keeping components whose closure meets the closed strip ``strip``.
    Level >= 2: the union of the contracted sets ``prior`` (one per
    refinement offset), whose radii must already equal r^(level).
    """
    k = lam ** (1.0 / (2 * params.l))
    b0, _ = b_zero(b_vec, cell)
    if level == 1:
        phi0 = ComplexStrip(0, strip_half_width(0, k, params))
        zeros, labels = all_unperturbed_zeros(b_vec, lam, params.l, cell, phi0)
        r = disk_radius(1, k, params)
        ds = _sorted_diskset(1, b_vec, b0, r, zeros, ["unperturbed"] * len(zeros), labels)
        keep = []
        for comp in ds.components():
            if min(strip.distance(ds.centers[i]) - r for i in comp) <= strip.half_width:
                keep.extend(comp)
        keep.sort()
        ds = DiskSet(1, ds.b_vec, b0, r, ds.centers[keep], tuple(ds.kinds[i] for i in keep),
                     tuple(ds.labels[i] for i in keep))
        cap, c0 = disk_cap(k, params, cell)
        if len(ds) > cap_factor * cap:
            raise RegimeError(f"{len(ds)} disks exceed {cap_factor} x cap {cap:.4g} (c0={c0:.4g})")
        return ds
    if not prior:
        raise ValueError("levels >= 2 need the contracted lower-level sets")
    r = disk_radius(level, k, params)
    centers, kinds = [], []
    for ds in prior:
        if not math.isclose(ds.radius, r, rel_tol=1e-12):
            raise ValueError(f"prior radius {ds.radius:.6g} differs from ledger r^({level}) = {r:.6g}")
        centers.extend(ds.centers)
        kinds.extend(ds.kinds)
    return _sorted_diskset(level, b_vec, b0, r, centers, kinds)


def contract(diskset, zeros, k, params):
    """O_s: disks of the next radius r k^{-2-4 s_{m+1}-delta} around polished zeros."""
    m = diskset.level
    r = disk_radius(m + 1, k, params)
    return _sorted_diskset(m + 1, diskset.b_vec, diskset.b0, r, zeros, ["polished"] * len(zeros))


# ---------------------------------------------------------------------------
# determinant evaluator
# ---------------------------------------------------------------------------

class KappaExtension:
    """Analytic stand-in for kappa(phi) near phi0: quadratic through traced real samples."""

    def __init__(self, values=None, phi0=0.0, h=0.0, constant=None):
        self.phi0 = float(phi0)
        if constant is not None:
            self.coef = (float(constant), 0.0, 0.0)
        else:
            km, k0, kp = values
            self.coef = (k0, (kp - km) / (2 * h), (kp - 2 * k0 + km) / (2 * h * h))

    @classmethod
    def traced(cls, tracer, phi0, h):
        vals = [tracer.solve(phi0 + s * h)[0] for s in (-1, 0, 1)]
        return cls(vals, phi0, h)

    def __call__(self, phi):
        d = phi - self.phi0
        c0, c1, c2 = self.coef
        return c0 + c1 * d + c2 * d * d, c1 + 2 * c2 * d


class Determinant:
    """log det[(H_alpha(y) - lambda - eps)(H_0(y) + lambda)^{-1}] on a fixed truncated basis."""

    def __init__(self, model, level, b_vec, lam, kappa, alpha=1.0, eps=0.0, trunc=None,
                 phi_ref=0.0, basis=None):
        self.model = model
        self.level = level
        self.b = np.asarray(b_vec, dtype=float)
        self.lam = float(lam)
        self.kappa = kappa
        self.alpha = float(alpha)
        self.eps = float(eps)
        trunc = trunc or TruncationParams()
        if basis is None:
            y0 = np.real(self.y(phi_ref)[0])
            basis = model.basis(level, y0, trunc.radius(model.k), trunc.max_dim)
        self.basis = basis
        self.evaluations = 0

    def y(self, phi):
        kap, dkap = self.kappa(phi)
        n = nu(phi)
        mu = np.array([-np.sin(phi), np.cos(phi)])
        return kap * n + self.b, dkap * n + kap * mu

    def _parts(self, phi):
        y, dy = self.y(phi)
        H, D = self.model.matrix(self.level, y, self.basis, self.alpha)
        H = H - (self.lam + self.eps) * np.eye(len(self.basis))
        return H, D, y, dy

    def log(self, phi):
        """Complex log of the determinant (imaginary part defined modulo 2 pi)."""
        self.evaluations += 1
        H, D, _, _ = self._parts(phi)
        sign, logabs = np.linalg.slogdet(H)
        if sign == 0:
            return complex(-np.inf, 0.0)
        return complex(np.log(sign) + logabs - np.sum(np.log(D + self.lam)))

    def log_derivative(self, phi):
        """d/dphi log det via Tr[(H - lambda - eps)^{-1} dH/dphi] - sum dD/(D + lambda)."""
        H, D, y, dy = self._parts(phi)
        P = self.model.momenta(self.level, y, self.basis)
        s = P[:, 0] ** 2 + P[:, 1] ** 2
        l = self.model.params.l
        dD = l * s ** (l - 1) * 2 * (P @ dy)
        inv_diag = np.diag(scipy.linalg.inv(H))
        return complex(np.sum(inv_diag * dD) - np.sum(dD / (D + self.lam)))

    def __call__(self, phi):
        return np.exp(self.log(phi))

    def cauchy_riemann_residual(self, phi, h=1e-8):
        """Relative mismatch of the real- and imaginary-direction difference quotients."""
        dr = (self.log(phi + h) - self.log(phi - h)) / (2 * h)
        di = (self.log(phi + 1j * h) - self.log(phi - 1j * h)) / (2j * h)
        return abs(dr - di) / max(abs(dr), 1e-300)


# ---------------------------------------------------------------------------
# zero counting and polishing
# ---------------------------------------------------------------------------

def _phases(func, z, log):
    vals = np.array([func(x) for x in z], dtype=complex)
    if log:
        re = vals.real
        if np.any(re - re.max() < math.log(1e-12)):
            raise ZeroCountError("a zero lies (numerically) on the contour")
        return np.exp(1j * vals.imag)
    mag = np.abs(vals)
    if mag.min() <= 1e-12 * mag.max():
        raise ZeroCountError("a zero lies (numerically) on the contour")
    return vals / mag


def count_zeros(func, center, radius, Q=64, log=False, Q_max=2 ** 16, tol=0.01):
    """Winding number of ``func`` around the circle |phi - center| = radius.

    ``log=True`` means ``func`` returns a complex logarithm (only its imaginary
    part is used), which avoids overflow of large determinants.
    """
    while True:
        theta = TWO_PI * np.arange(Q) / Q
        z = center + radius * np.exp(1j * theta)
        total, step = kernels.winding_phase(_phases(func, z, log))
        w = total / TWO_PI
        if step < math.pi / 2 and abs(w - round(w)) <= tol:
            return int(round(w))
        if Q >= Q_max:
            raise ZeroCountError(f"contour too coarse: winding {w:.4f} with Q={Q}")
        Q *= 2


def _exposed_arcs(centers, radius, i):
    """Angular intervals of circle i not covered by the other open disks."""
    blocked = []
    for j, c in enumerate(centers):
        if j == i:
            continue
        d = abs(c - centers[i])
        if d < 2 * radius:
            if d == 0:
                return np.zeros((0, 2))
            half = math.acos(d / (2 * radius))
            a = math.atan2((c - centers[i]).imag, (c - centers[i]).real)
            blocked.append((a - half, a + half))
    if not blocked:
        return np.array([[0.0, TWO_PI]])
    return complement(_wrap_intervals(blocked))


def count_zeros_union(func, centers, radius, Q=64, log=False, Q_max=2 ** 14, tol=0.01):
    """Zeros of ``func`` inside a union of equal open disks (argument principle on its boundary)."""
    centers = np.asarray(centers, dtype=complex)
    if len(centers) == 1:
        return count_zeros(func, centers[0], radius, Q, log, Q_max, tol)
    while True:
        total, worst = 0.0, 0.0
        for i in range(len(centers)):
            for a, b in _exposed_arcs(centers, radius, i):
                n = max(4, int(math.ceil((b - a) / TWO_PI * Q)) + 1)
                th = np.linspace(a, b, n)
                z = centers[i] + radius * np.exp(1j * th)
                dphase, step = kernels.open_phase(_phases(func, z, log))
                total += dphase
                worst = max(worst, step)
        w = total / TWO_PI
        if worst < math.pi / 2 and abs(w - round(w)) <= tol:
            return int(round(w))
        if Q >= Q_max:
            raise ZeroCountError(f"contour too coarse: winding {w:.4f} with Q={Q}")
        Q *= 2


@dataclass
class PolishResult:
    seed: complex
    zero: complex
    converged: bool
    escaped: bool
    iterations: int
    distance: float


def polish_zero(det, seed, radius, maxit=50, tol=1e-10):
    """Newton's method on log det from a seed; reports escape from the parent disk."""
    phi = complex(seed)
    L0 = det.log(phi).real
    if L0 == -math.inf:
        return PolishResult(complex(seed), phi, True, False, 0, 0.0)
    converged = False
    it = 0
    for it in range(1, maxit + 1):
        if det.log(phi).real == -math.inf:
            converged = True  # exact zero (singular determinant)
            break
        d = det.log_derivative(phi)
        if not np.isfinite(d) or d == 0:
            break
        step = 1.0 / d
        phi = phi - step
        if abs(phi - seed) > 2 * radius:
            break
        if abs(step) <= 1e-14 * max(1.0, abs(phi)) or det.log(phi).real - L0 < math.log(tol):
            converged = True
            break
    dist = abs(phi - seed)
    return PolishResult(complex(seed), complex(phi), converged, dist > radius, it, float(dist))


def polished_zeros(dets, diskset, threads=1):
    """One polished zero per seed disk; ``dets`` maps a disk index to its Determinant."""
    def job(i):
        return polish_zero(dets(i), diskset.centers[i], diskset.radius)

    idx = range(len(diskset))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(job, idx))
    return [job(i) for i in idx]


# ---------------------------------------------------------------------------
# level-1 component study (zero-count conservation along the potential homotopy)
# ---------------------------------------------------------------------------

@dataclass
class ComponentReport:
    indices: list
    centers: list
    counts: dict  # alpha -> zero count
    polished: list  # PolishResult per disk (alpha = 1)
    max_shift: float
    radius: float

    @property
    def conserved(self):
        vals = list(self.counts.values())
        return all(v == vals[0] for v in vals)


def component_study(model, b_vec, lam, diskset, trunc=None, alphas=(0.0, 1.0), h=None,
                    components=None, Q=64, polish=True, threads=1):
    """Zero counts of det(I + A_alpha) on each component of O(b), plus polished zeros."""
    trunc = trunc or TruncationParams()
    p = model.params
    k = lam ** (1.0 / (2 * p.l))
    comps = diskset.components() if components is None else components
    r = diskset.radius
    h = h if h is not None else 10 * r

    def job(comp):
        cen = diskset.centers[comp]
        phi_ref = float(np.mean(cen.real))
        counts = {}
        dets = {}
        for a in alphas:
            if a == 0:
                kap = KappaExtension(constant=k)
            else:
                tracer = Tracer(model, 1, lam, a, trunc, method="oracle")
                kap = KappaExtension.traced(tracer, phi_ref, h)
            det = Determinant(model, 1, b_vec, lam, kap, alpha=a, trunc=trunc, phi_ref=phi_ref)
            dets[a] = det
            counts[a] = count_zeros_union(det.log, cen, r, Q=Q, log=True)
        pol = []
        if polish:
            det = dets[alphas[-1]]
            pol = [polish_zero(det, z, r) for z in cen]
        shift = max((pr.distance for pr in pol), default=0.0)
        return ComponentReport(list(comp), [complex(z) for z in cen], counts, pol, shift, r)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(job, comps))
    return [job(c) for c in comps]


# ---------------------------------------------------------------------------
# small-b poles
# ---------------------------------------------------------------------------

def small_b_threshold(k, params):
    """Desk crossover min(k^{-2l+9+12 s1+7 delta}, k^{-1-4 s1-2 delta}) below which b0 counts as small."""
    l, s1, d = params.l, params.s1, params.delta
    return min(k ** (-2 * l + 9 + 12 * s1 + 7 * d), k ** (-1 - 4 * s1 - 2 * d))


@dataclass
class Pole:
    phi: float
    sign: int
    slope: float
    expected_slope: float
    seed: float


class ShiftedEigenvalue:
    """phi -> lambda^(1)(kappa_1(phi) nu + b - e) - lambda, by series or oracle."""

    def __init__(self, model, lam, b_shift, trunc, method="series"):
        self.tracer = Tracer(model, 1, lam, 1.0, trunc, method=method)
        self.b = np.asarray(b_shift, dtype=float)
        self.lam = float(lam)

    def __call__(self, phi):
        kap, _ = self.tracer.solve(phi)
        return self.tracer.eigenvalue(kap * nu(phi) + self.b) - self.lam


def small_b_poles(model, b_vec, lam, trunc=None, window=None, n_scan=9, method="series"):
    """The (at most two) real solutions of lambda^(1)(kappa_1 nu + b) = lambda near phi_b +- pi/2.

    Seeds come from the reduced scalar equation cos(phi - phi_b) = -b0/(2k)
    (the free case); roots are then located by a sign scan of the perturbed
    function over |phi - (phi_b +- pi/2)| < window and refined with Brent's
    method. The +-1 label is the sign of the phi-derivative.
    """
    trunc = trunc or TruncationParams()
    p = model.params
    k = lam ** (1.0 / (2 * p.l))
    b0, e = b_zero(b_vec, model.cell(1))
    if not 0 < b0 < small_b_threshold(k, p):
        raise ValueError(f"b0 = {b0:.3g} is not in the small-b regime (0, {small_b_threshold(k, p):.3g})")
    bb = np.asarray(b_vec, dtype=float) - e
    phi_b = math.atan2(bb[1], bb[0])
    window = window if window is not None else k ** (-2 - 4 * p.s1 - 2 * p.delta)
    F = ShiftedEigenvalue(model, lam, bb, trunc, method)
    expected = 2 * p.l * b0 * k ** (2 * p.l - 1)
    poles = []
    for sgn in (1, -1):
        seed = phi_b + sgn * math.acos(-b0 / (2 * k))
        center = phi_b + sgn * math.pi / 2
        xs = np.linspace(center - window, center + window, n_scan)
        fs = np.array([F(x) for x in xs])
        for i in range(n_scan - 1):
            if fs[i] == 0 or fs[i] * fs[i + 1] < 0:
                root = scipy.optimize.brentq(F, xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15)
                hstep = 1e-6
                slope = (F(root + hstep) - F(root - hstep)) / (2 * hstep)
                poles.append(Pole(float(root % TWO_PI), 1 if slope > 0 else -1, float(slope),
                                  float(expected), float(seed % TWO_PI)))
    if len(poles) > 2:
        raise RegimeError(f"{len(poles)} pole candidates survive (expected <= 2): "
                          f"{[(pl.phi, pl.slope) for pl in poles]}")
    return poles


def crossing_oracle(model, b_vec, lam, lo, hi, trunc=None, tol=1e-13):
    """Bisection for the matched oracle eigenvalue of H^(1)(kappa_1 nu + b - e) crossing lambda."""
    trunc = trunc or TruncationParams()
    _, e = b_zero(b_vec, model.cell(1))
    F = ShiftedEigenvalue(model, lam, np.asarray(b_vec, dtype=float) - e, trunc, method="oracle")
    fa = F(lo)
    if fa * F(hi) > 0:
        raise ValueError("no eigenvalue crossing in the interval")
    a, b = lo, hi
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = F(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# resonance arcs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResonanceArcs:
    level: int
    intervals: np.ndarray  # (m, 2) real phi-intervals
    witnesses: tuple  # (offset index p, lattice index m, signed eps at the two ends)
    eps_band: float
    seeds_checked: int = 0

    @property
    def length(self):
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0])) if len(self.intervals) else 0.0


class _BranchEvaluator:
    """Matched eigenvalue of H^(n-1)(kappa nu + b_p) continuing the plane wave m, near a seed."""

    def __init__(self, model, level, lam, b_vec, m, kappa_lin, trunc):
        self.model = model
        self.lvl = level - 1
        self.lam = lam
        self.b = np.asarray(b_vec, dtype=float)
        self.m = tuple(int(v) for v in m)
        self.kappa_lin = kappa_lin
        self.trunc = trunc

    def __call__(self, phi):
        kap, dkap = self.kappa_lin(phi)
        n = nu(phi)
        mu = np.array([-math.sin(phi), math.cos(phi)])
        y = kap * n + self.b
        M = assemble(self.model, self.lvl, y, self.trunc)
        pos = M.index_of(self.m)
        if pos is None:
            raise ValueError(f"plane wave {self.m} outside the cutoff")
        p = self.model.params
        width = max(self.lam ** (1 - 1.0 / p.l), 1e-6 * self.lam)
        w, V = oracle_eigs(M, (self.lam - width, self.lam + width))
        if len(w) == 0:
            w, V = oracle_eigs(M)
        i = int(np.argmax(np.abs(V[pos, :])))
        v = V[:, i]
        P = self.model.momenta(self.lvl, y, M.basis)
        s = np.einsum("ij,ij->i", P, P)
        dy = dkap * n + kap * mu
        grad = np.abs(v) ** 2 * (2 * p.l * s ** (p.l - 1))
        slope = float(np.real(grad @ (P @ dy)))
        return float(w[i]) - self.lam, slope


def _arc_from_seed(ev, phi_s, eps, max_newton=30):
    """Interval around phi_s where |G(phi)| <= eps for G = matched eigenvalue - lambda."""
    g, s = ev(phi_s)
    if s == 0:
        return None
    # locate the crossing (or the point of closest approach) with Newton steps
    x = phi_s
    for _ in range(max_newton):
        step = -g / s
        if abs(step) > 1e-3:
            step = math.copysign(1e-3, step)
        x += step
        g, s = ev(x)
        if abs(step) < 1e-15 * max(1.0, abs(x)) or abs(g) < 1e-3 * eps:
            break
    if abs(g) > eps:
        return None  # no approach within the band
    ends = []
    for target in (-eps, eps):
        xe, ge, se = x, g, s
        for _ in range(max_newton):
            step = -(ge - target) / se
            xe += step
            ge, se = ev(xe)
            if abs(step) < 1e-15 * max(1.0, abs(xe)):
                break
        ends.append(xe)
    lo, hi = min(ends), max(ends)
    return (lo, hi) if hi > lo else None


def level_offsets(model, level):
    """Nonzero refinement offsets b_p for the step to ``level`` (vectors on the level lattice)."""
    coarse = model.cell(level - 1)
    offs = offsets_from_cell(coarse, model.N(level - 1))
    return [(p, v) for p, v in zip(offs.indices, offs.vectors) if p != (0, 0)]


def resonance_arcs(model, level, lam, kappa_prev, domain_prev, eps_band=None, trunc=None,
                   mode="desk", phi_window=None, threads=1, strip=None):
    """omega_level: arcs of Theta_{level-1} where a shifted operator has an eigenvalue in the eps-band.

    ``kappa_prev(phi) -> (kappa, dkappa/dphi)`` evaluates the level-(level-1)
    curve. Seeds are the real parts of the unperturbed crossings
    |k nu + b_p + p_m|_*^2 = k^2 lying near the domain.
    """
    trunc = trunc or TruncationParams()
    p = model.params
    k = lam ** (1.0 / (2 * p.l))
    eps = epsilon(level - 1, k, p, lam=lam, mode=mode, band=eps_band)
    if eps <= 0:
        return ResonanceArcs(level, np.zeros((0, 2)), (), 0.0)
    cell = model.cell(level - 1)
    strip = strip or ComplexStrip(level - 1, strip_half_width(level - 1, k, p), domain_prev)
    tasks = []
    for pi_, (pidx, bvec) in enumerate(level_offsets(model, level)):
        zeros, labels = all_unperturbed_zeros(bvec, lam, p.l, cell, strip)
        for z, lab in zip(zeros, labels):
            x = z.real
            if phi_window is not None and not phi_window[0] <= x <= phi_window[1]:
                continue
            if not domain_prev.contains(x):
                continue
            tasks.append((pidx, bvec, (lab[0], lab[1]), x))

    def job(task):
        pidx, bvec, m, x = task
        kap0, dk0 = kappa_prev(x)

        def kappa_lin(phi, kap0=kap0, dk0=dk0, x=x):
            return kap0 + dk0 * (phi - x), dk0

        ev = _BranchEvaluator(model, level, lam, bvec, m, kappa_lin, trunc)
        try:
            return task, _arc_from_seed(ev, x, eps)
        except ValueError:
            return task, None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, tasks))
    else:
        results = [job(t) for t in tasks]
    arcs, wit = [], []
    for (pidx, _, m, _), arc in results:
        if arc is not None:
            arcs.append(arc)
            wit.append((pidx, m, (-eps, eps)))
    order = np.argsort([a[0] for a in arcs]) if arcs else []
    arcs = np.array([arcs[i] for i in order]).reshape(-1, 2)
    wit = tuple(wit[i] for i in order)
    return ResonanceArcs(level, arcs, wit, eps, len(tasks))


def arcs_inside_disks(arcs, disksets, tol=0.0):
    """Check each arc lies in the real trace of the union of the given disk sets."""
    traces = [ds.real_trace() for ds in disksets]
    iv = _wrap_intervals([tuple(t) for tr in traces for t in tr]) if traces else np.zeros((0, 2))
    bad = []
    for a, b in arcs.intervals:
        a0 = a % TWO_PI
        b0 = a0 + (b - a)
        if not any(c - tol <= a0 and b0 <= d + tol for c, d in iv):
            bad.append((float(a), float(b)))
    return bad


def next_domain(domain_prev, arcs):
    """Theta_n = Theta_{n-1} minus the resonance arcs (open holes)."""
    return domain_prev.subtract(arcs.intervals, level=arcs.level)


def min_det_outside(det, strip_points, diskset):
    """min |det| over sample points outside the disks vs over the disk boundaries (log scale)."""
    out = [det.log(z).real for z in strip_points if not diskset.contains(z)]
    bnd = []
    for c in diskset.centers:
        for th in np.linspace(0, TWO_PI, 8, endpoint=False):
            bnd.append(det.log(c + diskset.radius * np.exp(1j * th)).real)
    return (min(out) if out else math.inf), (min(bnd) if bnd else math.inf)
