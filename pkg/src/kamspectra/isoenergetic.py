"""Isoenergetic geometry: non-resonant angles, distorted circles kappa_n(phi), and their measures.

Angles parametrize directions nu(phi) = (cos phi, sin phi). At level 1 the
free isoenergetic curve is the circle |kappa| = k = lambda^{1/2l}; a direction
is non-resonant when the plane wave k nu is separated from every other
lattice translate by min_{q != 0} | |k nu + Q|^2 - k^2 | > 2 k^{-4 s1 - delta}.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bloch import TruncationParams, assemble, oracle_eigs
from .lattice import TWO_PI, nu, reduce_to_cell
from .perturb import base_data, eigenvalue_series


class BracketFailure(ValueError):
    pass


# ---------------------------------------------------------------------------
# angle domains
# ---------------------------------------------------------------------------

def _merge(intervals):
    if len(intervals) == 0:
        return np.zeros((0, 2))
    iv = np.array(sorted(map(tuple, intervals)))
    out = [list(iv[0])]
    for a, b in iv[1:]:
        if a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return np.array(out)


def _wrap_intervals(intervals):
    """Map intervals on the real line to sorted disjoint intervals in [0, 2pi]."""
    pieces = []
    for a, b in intervals:
        if b - a >= TWO_PI:
            return np.array([[0.0, TWO_PI]])
        s = a % TWO_PI
        e = s + (b - a)
        if e <= TWO_PI:
            pieces.append((s, e))
        else:
            pieces.append((s, TWO_PI))
            pieces.append((0.0, e - TWO_PI))
    return _merge(pieces)


@dataclass(frozen=True, eq=False)
class AngleDomain:
    """A union of closed, disjoint, sorted intervals in [0, 2 pi)."""

    level: int
    intervals: np.ndarray
    flags: tuple = ()

    @property
    def length(self):
        iv = self.intervals
        return float(np.sum(iv[:, 1] - iv[:, 0])) if len(iv) else 0.0

    @property
    def holes(self):
        """Open complementary intervals (on the circle)."""
        return complement(self.intervals)

    def contains(self, phi):
        phi = np.mod(np.asarray(phi, dtype=float), TWO_PI)
        iv = self.intervals
        if len(iv) == 0:
            return np.zeros(phi.shape, dtype=bool)
        i = np.searchsorted(iv[:, 0], phi, side="right") - 1
        ok = i >= 0
        ic = np.clip(i, 0, len(iv) - 1)
        return ok & (phi <= iv[ic, 1])

    def subtract(self, arcs, level=None):
        """Remove open arcs (array (m, 2) on the real line) from the domain."""
        cut = _wrap_intervals(arcs) if len(arcs) else np.zeros((0, 2))
        out = []
        for a, b in self.intervals:
            segs = [(a, b)]
            for c, d in cut:
                nxt = []
                for s, e in segs:
                    if d <= s or c >= e:
                        nxt.append((s, e))
                        continue
                    if c > s:
                        nxt.append((s, c))
                    if d < e:
                        nxt.append((d, e))
                segs = nxt
            out.extend(segs)
        return AngleDomain(self.level + 1 if level is None else level,
                           np.array(out).reshape(-1, 2), self.flags)

    def window(self, lo, hi):
        """Intersection with the real interval [lo, hi] (0 <= lo < hi <= 2 pi)."""
        if lo <= 0 and hi >= TWO_PI:
            return self
        return self.subtract(np.array([[hi, lo + TWO_PI]]), level=self.level)

    def is_subset_of(self, other, tol=1e-12):
        for a, b in self.intervals:
            hit = [(c, d) for c, d in other.intervals if c - tol <= a and b <= d + tol]
            if not hit:
                return False
        return True

    @staticmethod
    def full(level=1):
        return AngleDomain(level, np.array([[0.0, TWO_PI]]))


def complement(intervals):
    iv = np.asarray(intervals).reshape(-1, 2)
    if len(iv) == 0:
        return np.array([[0.0, TWO_PI]])
    gaps = []
    prev = 0.0
    for a, b in iv:
        if a > prev:
            gaps.append((prev, a))
        prev = b
    if prev < TWO_PI:
        gaps.append((prev, TWO_PI))
    # join the wrap-around gap
    if len(gaps) >= 2 and gaps[0][0] == 0.0 and gaps[-1][1] == TWO_PI:
        first = gaps.pop(0)
        last = gaps.pop()
        gaps.append((last[0], TWO_PI + first[1]))
    return np.array(gaps).reshape(-1, 2)


# ---------------------------------------------------------------------------
# level-1 geometry
# ---------------------------------------------------------------------------

def lattice_vectors(cell, radius):
    """Nonzero dual-lattice vectors Q = 2 pi q/(N_hat a) with |Q| <= radius, and their q."""
    h = cell.spacing
    n1, n2 = int(radius // h[0]) + 1, int(radius // h[1]) + 1
    q1, q2 = np.meshgrid(np.arange(-n1, n1 + 1), np.arange(-n2, n2 + 1), indexing="ij")
    q = np.stack([q1.ravel(), q2.ravel()], axis=1)
    Q = q * h
    r = np.hypot(Q[:, 0], Q[:, 1])
    keep = (r <= radius) & (r > 0)
    order = np.lexsort((q[keep][:, 1], q[keep][:, 0]))
    return Q[keep][order], q[keep][order]


def gap_threshold(lam, params):
    k = lam ** (1.0 / (2 * params.l))
    return 2.0 * k ** (-4 * params.s1 - params.delta)


def self_intersections(lam, cell, l):
    """Quasimomenta where two lattice circles of radius k = lambda^{1/2l} cross.

    Returns a list of (t, j, j_partner): p_j(t) and p_{j_partner}(t) both have
    length k. Each unordered pair of circles is reported once per crossing.
    """
    k = lam ** (1.0 / (2 * l))
    Q, q = lattice_vectors(cell, 2 * k)
    out = []
    for Qv, qv in zip(Q, q):
        if tuple(qv) < (0, 0):
            continue  # -q gives the same crossings
        r = float(np.hypot(*Qv))
        if r >= 2 * k:
            continue
        half = math.sqrt(k * k - r * r / 4)
        perp = np.array([-Qv[1], Qv[0]]) / r
        for sgn in (1.0, -1.0):
            x = -Qv / 2 + sgn * half * perp
            t, j = reduce_to_cell(x, cell)
            out.append((t, j, (j[0] + int(qv[0]), j[1] + int(qv[1]))))
    return out


def resonant_arcs_level1(lam, params, cell):
    """Closed arcs (on the real line) where min_{Q} | |Q|^2 + 2k <Q, nu> | <= threshold."""
    k = lam ** (1.0 / (2 * params.l))
    thr = gap_threshold(lam, params)
    rmax = k + math.sqrt(k * k + thr)
    Q, _ = lattice_vectors(cell, rmax)
    arcs = []
    for Qv in Q:
        r = float(np.hypot(*Qv))
        th = math.atan2(Qv[1], Qv[0])
        lo = (-thr - r * r) / (2 * k * r)
        hi = (thr - r * r) / (2 * k * r)
        if lo > 1 or hi < -1:
            continue
        a_in = math.acos(min(1.0, hi))  # smaller angle
        a_out = math.acos(max(-1.0, lo))  # larger angle
        if a_out >= math.pi and a_in <= 0:
            return np.array([[0.0, TWO_PI]])
        if a_out >= math.pi:
            arcs.append((th + a_in, th + 2 * math.pi - a_in))
        elif a_in <= 0:
            arcs.append((th - a_out, th + a_out))
        else:
            arcs.append((th + a_in, th + a_out))
            arcs.append((th - a_out, th - a_in))
    return np.array(arcs).reshape(-1, 2)


def chi1(lam, params, cell):
    """Theta_1: angles whose plane wave k nu satisfies the level-1 gap condition.

    Arcs are found in closed form per lattice vector (the condition is a band
    of cos(phi - theta_Q)); the deleted set is closed, the holes are open.
    """
    arcs = resonant_arcs_level1(lam, params, cell)
    dom = AngleDomain.full(1).subtract(arcs, level=1)
    flags = ()
    if len(arcs) == 0:
        flags = ("below asymptotic regime: no deletions",)
    if dom.length == 0:
        flags = ("empty non-resonance set",)
    return AngleDomain(1, dom.intervals, flags)


def gap_function(phi, lam, params, cell):
    """min_{Q != 0} | |k nu + Q|^2 - k^2 | on an angle grid (compiled kernel)."""
    k = lam ** (1.0 / (2 * params.l))
    Q, _ = lattice_vectors(cell, 2 * k + 1.0)
    best, _ = kernels.gap_scan(np.asarray(phi, dtype=float), Q, k)
    return best


def chi1_sampled(lam, params, cell, n_grid=4096, tol=1e-12):
    """Sampling + bisection construction of Theta_1 (independent of the closed-form arcs)."""
    k = lam ** (1.0 / (2 * params.l))
    thr = gap_threshold(lam, params)
    Q, _ = lattice_vectors(cell, 2 * k + 1.0)
    phi = np.linspace(0, TWO_PI, n_grid, endpoint=False)

    def good(x):
        return kernels.gap_scan(np.atleast_1d(np.asarray(x, dtype=float)), Q, k)[0] > thr

    g = good(phi)
    if g.all():
        return AngleDomain.full(1)
    if not g.any():
        return AngleDomain(1, np.zeros((0, 2)), ("empty non-resonance set",))

    def edge(a, b, ga):
        while b - a > tol:
            m = 0.5 * (a + b)
            if good(m)[0] == ga:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    start = int(np.flatnonzero(~g)[0])
    intervals = []
    cur = None
    for s in range(1, n_grid + 1):
        i0 = (start + s - 1) % n_grid
        i1 = (start + s) % n_grid
        a = phi[i0] + (TWO_PI if start + s - 1 >= n_grid else 0)
        b = phi[i1] + (TWO_PI if start + s >= n_grid else 0)
        if not g[i0] and g[i1]:
            cur = edge(a, b, False)
        elif g[i0] and not g[i1]:
            intervals.append((cur, edge(a, b, True)))
    return AngleDomain(1, _wrap_intervals(intervals))


# ---------------------------------------------------------------------------
# curve tracing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IsoCurve:
    level: int
    lam: float
    phi: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray
    domain: AngleDomain
    segment: np.ndarray  # interval index of each sample
    provenance: dict = field(default_factory=dict)
    increments: np.ndarray | None = None  # (samples, level - 1): kappa_n - kappa_{n-1}, n >= 2

    @property
    def holes(self):
        return self.domain.holes

    def length(self):
        """int over Theta of sqrt(kappa^2 + kappa'^2) dphi (trapezoid per interval)."""
        total = 0.0
        f = np.sqrt(self.kappa ** 2 + self.dkappa ** 2)
        for s in np.unique(self.segment):
            m = self.segment == s
            x, y = self.phi[m], f[m]
            if len(x) >= 2:
                total += float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))
        return total


class Tracer:
    """Evaluates lambda^(n)(alpha, kappa nu) and solves for kappa_n(phi)."""

    def __init__(self, model, level, lam, alpha=1.0, trunc=None, method="series", mode="desk",
                 band=None):
        self.model = model
        self.level = level
        self.lam = float(lam)
        self.alpha = float(alpha)
        self.trunc = trunc or TruncationParams()
        self.method = method
        self.mode = mode
        self.band = band
        p = model.params
        self.k = self.lam ** (1.0 / (2 * p.l))

    def eigenvalue(self, y):
        if self.method == "series":
            return eigenvalue_series(self.model, self.level, y, self.alpha, self.trunc,
                                     lam=self.lam, mode=self.mode, band=self.band).value
        M = assemble(self.model, self.level, y, self.trunc, self.alpha)
        return self._matched(M)[0]

    def _matched(self, M):
        lam = self.lam
        p = self.model.params
        width = max(self.k ** (2 * p.l - 2 - 4 * p.s1 - p.delta), 1e-6 * lam)
        w, V = oracle_eigs(M, (lam - 4 * width, lam + 4 * width))
        if len(w) == 0:
            w, V = oracle_eigs(M)
        pos = M.index_of((0, 0))
        i = int(np.argmax(np.abs(V[pos, :])))
        return float(w[i]), V[:, i]

    def gradient(self, y):
        """Hellmann-Feynman gradient of the matched oracle eigenvalue at y."""
        M = assemble(self.model, self.level, y, self.trunc, self.alpha)
        _, v = self._matched(M)
        P = self.model.momenta(self.level, y, M.basis)
        l = self.model.params.l
        w = np.abs(v) ** 2 * 2 * l * np.einsum("ij,ij->i", P, P) ** (l - 1)
        return np.real(w @ P)

    def bracket(self, kappa_prev=None):
        p = self.model.params
        if self.level == 1 or kappa_prev is None:
            half = self.k ** (-1 - 4 * p.s1 - 2 * p.delta)
            center = self.k
        else:
            from .potential import epsilon
            eps = epsilon(self.level - 1, self.k, p, lam=self.lam, mode=self.mode, band=self.band)
            half = eps * self.k ** (-2 * p.l + 1 - p.delta)
            center = kappa_prev
        return center - half, center + half

    def solve(self, phi, kappa_prev=None, guess=None, tol=1e-13, maxit=60):
        """kappa with lambda^(n)(kappa nu(phi)) = lambda, via safeguarded Newton in the bracket."""
        l = self.model.params.l
        direction = nu(phi)
        lo, hi = self.bracket(kappa_prev)

        def F(x):
            return self.eigenvalue(x * direction) - self.lam

        x = guess if guess is not None and lo < guess < hi else (
            kappa_prev if kappa_prev is not None else self.k)
        fx = F(x)
        flo = fhi = None
        newton_ok = True
        for _ in range(maxit):
            slope = 2 * l * x ** (2 * l - 1)
            step = -fx / slope
            xn = x + step
            if not lo <= xn <= hi:
                newton_ok = False
                break
            fn = F(xn)
            # secant refinement of the slope once two points exist
            if fn != fx and xn != x:
                slope = (fn - fx) / (xn - x)
            x, fx = xn, fn
            if abs(fx) <= tol * self.lam or abs(step) <= 4 * np.finfo(float).eps * x:
                break
        else:
            newton_ok = False
        if not newton_ok or abs(fx) > 1e-10 * self.lam:
            flo, fhi = F(lo), F(hi)
            if flo * fhi > 0:
                raise BracketFailure(
                    f"no sign change of lambda^({self.level}) - lambda on [{lo:.17g}, {hi:.17g}] "
                    f"at phi={phi:.17g}")
            a, b, fa = lo, hi, flo
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = F(m)
                if fm == 0 or b - a <= 4 * np.finfo(float).eps * m:
                    break
                if (fm < 0) == (fa < 0):
                    a, fa = m, fm
                else:
                    b = m
            x, fx = m, fm
        return float(x), float(fx)

    def increment(self, phi, kappa_prev):
        """Level >= 2: kappa_n - kappa_{n-1} at phi, given kappa_{n-1}(phi).

        lambda^(n) = lambda^(n-1) + sum_r alpha^r g_r with lambda^(n-1)(kappa_{n-1} nu) = lambda,
        so the increment is -sum_r alpha^r g_r / d_kappa lambda^(n-1) to first order; it is
        formed from the series terms themselves, never as a difference of O(lambda) numbers.
        Returns (increment, series result).
        """
        if self.level < 2:
            raise ValueError("increments exist for levels >= 2")
        direction = nu(phi)
        y = kappa_prev * direction
        base = base_data(self.model, self.level, y, self.trunc)
        se = eigenvalue_series(self.model, self.level, y, self.alpha, self.trunc, lam=self.lam,
                               mode=self.mode, band=self.band, base=base)
        corr = float(np.sum((self.alpha ** np.arange(1, len(se.g) + 1) * se.g)[::-1]))
        psi = base.psi
        P = self.model.momenta(self.level, y, base.basis)
        l = self.model.params.l
        grad = np.real((np.abs(psi) ** 2 * 2 * l * np.einsum("ij,ij->i", P, P) ** (l - 1)) @ P)
        slope = float(grad @ direction)
        delta = -corr / slope
        lo, hi = self.bracket(kappa_prev)
        if not lo <= kappa_prev + delta <= hi:
            raise BracketFailure(
                f"level-{self.level} increment {delta:.3g} leaves the bracket at phi={phi:.17g}")
        return delta, se

    def dkappa_dphi(self, phi, kappa):
        """Implicit-function derivative -(dF/dphi)/(dF/dkappa) with F = lambda(kappa nu) - lambda."""
        direction = nu(phi)
        perp = np.array([-direction[1], direction[0]])
        g = self.gradient(kappa * direction)
        return float(-(kappa * g @ perp) / (g @ direction))


def trace_kappa(model, level, lam, phi, alpha=1.0, trunc=None, method="series", kappa_prev=None,
                mode="desk", band=None):
    """(kappa_n(phi), dkappa/dphi) on the level-n isoenergetic curve."""
    tr = Tracer(model, level, lam, alpha, trunc, method, mode, band)
    kap, _ = tr.solve(phi, kappa_prev=kappa_prev)
    return kap, tr.dkappa_dphi(phi, kap)


@dataclass
class Chain:
    """kappa_1(phi), ..., kappa_n(phi) with the exact increments and series tails."""

    phi: float
    kappas: list
    increments: list
    tails: list
    dkappa: float


def trace_chain(model, level, lam, phi, alpha=1.0, trunc=None, mode="desk", band=None,
                derivative=True):
    """Trace kappa_1 by root finding, then add the level increments up to ``level``."""
    t1 = Tracer(model, 1, lam, alpha if level == 1 else 1.0, trunc, "series", mode, band)
    k1, _ = t1.solve(phi)
    dk = t1.dkappa_dphi(phi, k1) if derivative else 0.0
    kappas, incs, tails = [k1], [], []
    for n in range(2, level + 1):
        tn = Tracer(model, n, lam, alpha if n == level else 1.0, trunc, "series", mode, band)
        d, se = tn.increment(phi, kappas[-1])
        incs.append(d)
        tails.append(se.tail)
        kappas.append(kappas[-1] + d)
    return Chain(float(phi), kappas, incs, tails, dk)


def _segment_grid(domain, grid):
    phis, segs = [], []
    for s, (a, b) in enumerate(domain.intervals):
        n = max(2, int(math.ceil((b - a) / TWO_PI * grid)) + 1)
        x = np.linspace(a, b, n)
        phis.append(x)
        segs.append(np.full(n, s))
    if not phis:
        return np.zeros(0), np.zeros(0, dtype=int)
    return np.concatenate(phis), np.concatenate(segs)


def curve(model, level, lam, alpha=1.0, domain=None, grid=2048, trunc=None, method="series",
          previous=None, mode="desk", band=None, threads=1, refine_depth=6, derivative=True):
    """Sample kappa_n over the angle domain; bracket failures become new holes.

    ``previous`` is the level-(n-1) IsoCurve (needed for n >= 2: it supplies
    kappa_{n-1}, the centre of the bracketing interval).
    """
    tr = Tracer(model, level, lam, alpha, trunc, method, mode, band)
    if domain is None:
        if level != 1:
            raise ValueError("levels >= 2 need an explicit angle domain")
        domain = chi1(lam, model.params, model.cell(1))
    phi, seg = _segment_grid(domain, grid)

    def prev_kappa(x):
        if previous is None:
            return None
        return float(np.interp(x, previous.phi, previous.kappa))

    chained = level >= 2 and method == "series"
    incs = {}

    def job(x):
        try:
            if chained:
                ch = trace_chain(model, level, lam, x, alpha, tr.trunc, mode, band, derivative)
                incs[float(x)] = ch.increments
                return ch.kappas[-1], ch.dkappa, None
            kp = prev_kappa(x)
            kap, _ = tr.solve(x, kappa_prev=kp)
            dk = tr.dkappa_dphi(x, kap) if derivative else 0.0
            return kap, dk, None
        except Exception as exc:  # bracket failure or resonant contour
            return math.nan, math.nan, f"{type(exc).__name__}: {exc}"

    def run(xs):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                return list(ex.map(job, xs))
        return [job(x) for x in xs]

    res = run(phi)
    kap = np.array([r[0] for r in res])
    dk = np.array([r[1] for r in res])
    failures = [(float(x), r[2]) for x, r in zip(phi, res) if r[2] is not None]

    # adaptive refinement where kappa jumps between neighbours of a segment
    k = tr.k
    for _ in range(refine_depth):
        new = []
        for s in np.unique(seg):
            idx = np.flatnonzero(seg == s)
            for a, b in zip(idx[:-1], idx[1:]):
                if np.isfinite(kap[a]) and np.isfinite(kap[b]) and abs(kap[b] - kap[a]) > 1e-3 * k:
                    new.append((0.5 * (phi[a] + phi[b]), s))
        if not new:
            break
        extra = run([x for x, _ in new])
        phi = np.concatenate([phi, [x for x, _ in new]])
        seg = np.concatenate([seg, [s for _, s in new]])
        kap = np.concatenate([kap, [r[0] for r in extra]])
        dk = np.concatenate([dk, [r[1] for r in extra]])
        failures += [(x, r[2]) for (x, _), r in zip(new, extra) if r[2] is not None]
        order = np.lexsort((phi, seg))
        phi, seg, kap, dk = phi[order], seg[order], kap[order], dk[order]

    ok = np.isfinite(kap)
    if not ok.all():
        # shrink the domain around failed samples (half a grid step on each side)
        step = TWO_PI / grid
        bad = phi[~ok]
        domain = domain.subtract(np.stack([bad - 0.5 * step, bad + 0.5 * step], axis=1),
                                 level=domain.level)
        phi, seg, kap, dk = phi[ok], seg[ok], kap[ok], dk[ok]
        # re-map segments to the shrunk domain
        seg = np.array([_segment_of(domain, x) for x in phi], dtype=int)
        keep = seg >= 0
        phi, seg, kap, dk = phi[keep], seg[keep], kap[keep], dk[keep]
    prov = {"grid": grid, "refine_depth": refine_depth, "method": method,
            "failures": failures[:50], "n_failures": len(failures)}
    inc = np.array([incs[float(x)] for x in phi]) if chained else None
    return IsoCurve(level, float(lam), phi, kap, dk, domain, seg, prov, inc)


def _segment_of(domain, x):
    for s, (a, b) in enumerate(domain.intervals):
        if a <= x <= b:
            return s
    return -1


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def fit_power_law(x, y):
    """Least-squares slope and prefactor of log y vs log x (positive y only)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = y > 0
    if m.sum() < 2:
        return math.nan, math.nan
    slope, icpt = np.polyfit(np.log(x[m]), np.log(y[m]), 1)
    return float(slope), float(math.exp(icpt))


def measure_report(domains, k=None, params=None):
    """Per-level lengths and decrements of nested angle domains.

    With ``k`` and ``params`` the asymptotic reference decrement
    4 pi k^{-S_n}, S_n = 2 sum_{i<n} (1 + s_i), is reported alongside.
    """
    rows = []
    prev = None
    for d in domains:
        if prev is not None and not d.is_subset_of(prev):
            raise ValueError(f"domain of level {d.level} is not nested in level {prev.level}")
        row = {"level": d.level, "length": d.length, "fraction": d.length / TWO_PI,
               "decrement": (prev.length - d.length) if prev is not None else 0.0}
        if k is not None and params is not None and d.level >= 2:
            S = 2 * sum(1 + params.s(i) for i in range(1, d.level))
            row["reference_decrement"] = 4 * math.pi * k ** (-S)
        rows.append(row)
        prev = d
    return rows
