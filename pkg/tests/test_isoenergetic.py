import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_model
from kamspectra.bloch import TruncationParams, assemble, oracle_eigs
from kamspectra.isoenergetic import (AngleDomain, Tracer, chi1, chi1_sampled, complement, curve,
                                     fit_power_law, gap_threshold, measure_report,
                                     resonant_arcs_level1, self_intersections, trace_kappa)
from kamspectra.lattice import TWO_PI, CellSpec, ModelParams, dual_point, nu

TR = TruncationParams(c_rho=1.3, R=4, Q=64)


def test_angle_domain_subtract_and_complement():
    d = AngleDomain.full(1).subtract(np.array([[1.0, 2.0], [6.0, 7.0]]))
    assert d.length == pytest.approx(TWO_PI - 2.0)
    assert not d.contains(1.5) and d.contains(3.0) and not d.contains(0.5)
    assert d.is_subset_of(AngleDomain.full(1))
    holes = complement(d.intervals)
    assert sum(b - a for a, b in holes) == pytest.approx(2.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 7), st.floats(0, 0.5)), max_size=6))
def test_subtract_is_nested(arcs):
    arr = np.array([[a, a + w] for a, w in arcs]).reshape(-1, 2)
    d = AngleDomain.full(1).subtract(arr)
    assert d.is_subset_of(AngleDomain.full(1))
    assert 0 <= d.length <= TWO_PI + 1e-12
    d2 = d.subtract(arr[:1])
    assert d2.is_subset_of(d)


def test_self_intersections_example():
    cell = CellSpec(1, 1, TWO_PI, TWO_PI)
    pts = self_intersections(1.0, cell, 1)
    xs = {tuple(np.round(dual_point(j, t, cell), 12)) for t, j, _ in pts}
    assert (0.5, round(math.sqrt(3) / 2, 12)) in xs or (-0.5, round(math.sqrt(3) / 2, 12)) in xs
    for t, j, jp in pts:
        x = dual_point(j, t, cell)
        xp = dual_point(jp, t, cell)
        assert math.hypot(*x) == pytest.approx(1.0, abs=1e-10)
        assert math.hypot(*xp) == pytest.approx(1.0, abs=1e-10)


def test_self_intersections_empty_for_small_k():
    cell = CellSpec(1, 1, TWO_PI, TWO_PI)
    assert self_intersections(0.4 ** 2, cell, 1) == []


def test_self_intersections_grow_with_k():
    cell = CellSpec(1, 1, 2.0, 2.0)
    n = [len(self_intersections(k ** 4, cell, 2)) for k in (3.0, 6.0, 12.0)]
    assert n[0] < n[1] < n[2]


def test_chi1_full_below_regime():
    p = ModelParams(l=2, b1=1.0, b2=1.0)
    th = chi1(0.3 ** 4, p, CellSpec(1, 1, 1.0, 1.0))
    assert th.length == pytest.approx(TWO_PI) and th.flags


def test_chi1_matches_sampling(cosine_model):
    lam = 1e4
    th = chi1(lam, cosine_model.params, cosine_model.cell(1))
    ts = chi1_sampled(lam, cosine_model.params, cosine_model.cell(1), n_grid=1 << 15)
    # the sampled construction can miss very narrow pieces: compare one-sidedly
    assert ts.is_subset_of(th, tol=1e-9)
    assert th.length - ts.length <= 1e-3 * TWO_PI


def test_deleted_arcs_contain_self_intersections(cosine_model):
    lam = 1e4
    cell = cosine_model.cell(1)
    p = cosine_model.params
    k = 10.0
    ang = []
    for t, j, jp in self_intersections(lam, cell, p.l):
        x = dual_point(j, t, cell)
        q = np.asarray(jp) - np.asarray(j)
        if np.hypot(*(q * cell.spacing)) < 2 * k * (1 - 1e-3):
            ang.append(math.atan2(x[1], x[0]) % TWO_PI)
    th = chi1(lam, p, cell)
    for a in ang:
        assert not th.contains(a)


def test_free_trace_is_circle(free_model):
    kap, dk = trace_kappa(free_model, 1, 1e4, 0.37, trunc=TR, method="oracle")
    assert kap == pytest.approx(10.0, rel=1e-14) and abs(dk) < 1e-9
    c = curve(free_model, 1, 1e4, domain=AngleDomain.full(1), grid=256, trunc=TR, method="oracle")
    assert c.length() == pytest.approx(TWO_PI * 10, rel=1e-10)


def test_kappa_below_k_and_bisection_oracle(cosine_model):
    th = chi1(1e4, cosine_model.params, cosine_model.cell(1))
    phi = float(np.mean(th.intervals[5]))
    tr = Tracer(cosine_model, 1, 1e4, 1.0, TR, "oracle")
    kap, _ = tr.solve(phi)
    assert kap < 10.0
    a, b = tr.bracket()
    for _ in range(80):
        m = 0.5 * (a + b)
        if tr.eigenvalue(m * nu(phi)) < 1e4:
            a = m
        else:
            b = m
    assert kap == pytest.approx(0.5 * (a + b), abs=1e-12)
    ts = Tracer(cosine_model, 1, 1e4, 1.0, TR, "series")
    assert ts.solve(phi)[0] == pytest.approx(kap, abs=1e-12)


def test_measure_report_single_domain():
    rows = measure_report([AngleDomain.full(1)])
    assert rows[0]["length"] == pytest.approx(TWO_PI) and rows[0]["decrement"] == 0


def test_measure_report_rejects_non_nested():
    d1 = AngleDomain(1, np.array([[0.0, 1.0]]))
    d2 = AngleDomain(2, np.array([[0.5, 1.5]]))
    with pytest.raises(ValueError, match="nested"):
        measure_report([d1, d2])


def test_fit_power_law():
    x = np.array([2.0, 4.0, 8.0])
    s, c = fit_power_law(x, 3 * x ** -0.7)
    assert s == pytest.approx(-0.7) and c == pytest.approx(3.0)


def test_resonant_arcs_threshold_band(cosine_model):
    p = cosine_model.params
    arcs = resonant_arcs_level1(1e4, p, cosine_model.cell(1))
    thr = gap_threshold(1e4, p)
    from kamspectra.isoenergetic import gap_function
    mids = 0.5 * (arcs[:, 0] + arcs[:, 1])
    assert np.all(gap_function(mids, 1e4, p, cosine_model.cell(1)) <= thr * (1 + 1e-9))
