import math

import numpy as np
import pytest

from conftest import make_model
from kamspectra import swisscheese as sc
from kamspectra.bloch import TruncationParams
from kamspectra.isoenergetic import AngleDomain, chi1
from kamspectra.lattice import TWO_PI, CellSpec, ModelParams

TR = TruncationParams(c_rho=1.3, R=4, Q=64)
P = ModelParams(l=2, b1=math.pi, b2=math.pi)


def test_count_zeros_trivial():
    assert sc.count_zeros(lambda z: 1.0 + 0 * z, 0.3, 0.1) == 0
    assert sc.count_zeros(lambda z: z - 0.31, 0.3, 0.1) == 1
    assert sc.count_zeros(lambda z: (z - 0.31) * (z - 0.29) * (z - 0.5), 0.3, 0.1) == 2


def test_count_zeros_union_overlapping():
    centers = np.array([0.0, 0.15])
    f = lambda z: (z - 0.01) * (z - 0.16) * (z - 0.08)
    assert sc.count_zeros_union(f, centers, 0.1) == 3


def test_unperturbed_zero_symmetry_and_residual():
    cell = CellSpec(1, 1, 2.0, 2.0)
    k = 10.0
    b = np.array([0.2, 0.0])
    z = sc.unperturbed_zeros(b, (0, 0), k ** 4, 2, cell)
    assert len(z) == 2
    for r in z:
        assert math.cos(r.real) == pytest.approx(-0.2 / (2 * k), abs=1e-14)
    assert (z[0].real + z[1].real) % TWO_PI == pytest.approx(0.0, abs=1e-12) or \
        (z[0].real + z[1].real) == pytest.approx(TWO_PI, abs=1e-12)
    # a far lattice point gives no solutions
    assert sc.unperturbed_zeros(b, (20, 0), k ** 4, 2, cell) == []


def test_unperturbed_zero_complex_residual():
    cell = CellSpec(1, 1, 2.0, 2.0)
    k = 10.0
    b = np.array([0.37, 0.21])
    strip = sc.ComplexStrip(0, 0.05)
    for m in [(3, 4), (-7, 2), (0, 6)]:
        for z in sc.unperturbed_zeros(b, m, k ** 4, 2, cell, strip):
            c = b + TWO_PI * np.array(m) / cell.periods
            y = k * np.array([np.cos(z), np.sin(z)]) + c
            assert abs(y[0] ** 2 + y[1] ** 2 - k * k) <= 1e-10 * k * k


def test_vertex_b_rejected():
    cell = CellSpec(1, 1, 2.0, 2.0)
    with pytest.raises(ValueError):
        sc.unperturbed_zeros(np.array([0.0, 0.0]), (0, 0), 1e4, 2, cell)


def test_build_O_radius_and_cap(cosine_model):
    k = 10.0
    th1 = chi1(1e4, cosine_model.params, cosine_model.cell(1))
    strip = sc.ComplexStrip(1, sc.strip_half_width(1, k, cosine_model.params), th1)
    b = sc.level_offsets(make_model(levels=2), 2)[0][1]
    O = sc.build_O(b, 1, 1e4, cosine_model.params, cosine_model.cell(1), strip)
    assert len(O) > 0 and O.radius == sc.disk_radius(1, k, cosine_model.params)
    assert len(O) <= sc.disk_cap(k, cosine_model.params, cosine_model.cell(1))[0]
    # contracted radii follow the ledger exactly
    C = sc.contract(O, list(O.centers[:3]), k, cosine_model.params)
    assert C.radius == O.radius * k ** (-2 - 4 * cosine_model.params.s(2) - cosine_model.params.delta)


def test_no_zeros_for_tiny_k():
    cell = CellSpec(1, 1, 2.0, 2.0)
    strip = sc.ComplexStrip(0, 1e-3)
    zeros, _ = sc.all_unperturbed_zeros(np.array([1.0, 1.0]), 0.2 ** 4, 2, cell, strip)
    assert zeros == []


def test_free_polished_zeros_equal_seeds(free_model):
    m = make_model(recipe=[], levels=2)
    k = 10.0
    th1 = chi1(1e4, m.params, m.cell(1))
    strip = sc.ComplexStrip(1, sc.strip_half_width(1, k, m.params), th1)
    b = sc.level_offsets(m, 2)[0][1]
    O = sc.build_O(b, 1, 1e4, m.params, m.cell(1), strip)
    comps = O.components()[:3]
    reps = sc.component_study(m, b, 1e4, O, TR, components=comps)
    for r in reps:
        assert r.conserved
        assert r.max_shift <= 1e-9 * r.radius


def test_component_counts_conserved(cosine_model):
    m = make_model(levels=2)
    k = 10.0
    th1 = chi1(1e4, m.params, m.cell(1))
    strip = sc.ComplexStrip(1, sc.strip_half_width(1, k, m.params), th1)
    b = sc.level_offsets(m, 2)[0][1]
    O = sc.build_O(b, 1, 1e4, m.params, m.cell(1), strip)
    reps = sc.component_study(m, b, 1e4, O, TR, components=O.components()[:4])
    for r in reps:
        assert r.conserved and r.max_shift <= 0.5 * r.radius
        assert sum(1 for pr in r.polished if pr.converged) == r.counts[1.0]


def test_determinant_cauchy_riemann(cosine_model):
    m = make_model(levels=2)
    b = sc.level_offsets(m, 2)[0][1]
    det = sc.Determinant(m, 1, b, 1e4, sc.KappaExtension(constant=10.0), alpha=1.0, trunc=TR,
                         phi_ref=0.4)
    assert det.cauchy_riemann_residual(0.4 + 1e-7j) < 1e-5


def test_small_b_poles_free():
    m = make_model(recipe=[])
    b = np.array([2e-3, 0.0])
    poles = sc.small_b_poles(m, b, 1e4, TR)
    assert len(poles) == 2
    for pl in poles:
        assert abs(abs(pl.phi - math.pi) - math.pi / 2) < 1e-3
        assert pl.slope / pl.expected_slope == pytest.approx(pl.sign, rel=0.2)


def test_small_b_regime_check():
    m = make_model(recipe=[])
    with pytest.raises(ValueError, match="small-b"):
        sc.small_b_poles(m, np.array([0.5, 0.1]), 1e4, TR)


def test_resonance_arcs_empty_band(cosine_model):
    m = make_model(levels=2)
    th1 = chi1(1e4, m.params, m.cell(1))
    arcs = sc.resonance_arcs(m, 2, 1e4, lambda phi: (10.0, 0.0), th1, eps_band=0.0, trunc=TR)
    assert len(arcs.intervals) == 0
