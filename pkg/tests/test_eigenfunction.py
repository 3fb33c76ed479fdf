import numpy as np
import pytest

from conftest import make_model
from kamspectra import eigenfunction as ef
from kamspectra.bloch import TruncationParams
from kamspectra.isoenergetic import Tracer, chi1, trace_chain
from kamspectra.lattice import nu

TR = TruncationParams(c_rho=1.3, R=4, Q=64)


def _phi(model):
    th = chi1(model.k ** 4, model.params, model.cell(1))
    a, b = th.intervals[int(np.argmax(th.intervals[:, 1] - th.intervals[:, 0]))]
    return 0.5 * (a + b)


def test_free_plane_wave(free_model):
    rec = ef.assemble_record(free_model, 1, 10 * nu(0.4), trunc=TR)
    sl = rec.level(1)
    assert sl.u_tilde == {} and sl.sup_u == 0
    assert ef.residual(free_model, rec, 1, TR) <= 1e-15


def test_level1_residual_norm_phase(cosine_model):
    phi = _phi(cosine_model)
    kap, _ = Tracer(cosine_model, 1, 1e4, 1.0, TR).solve(phi)
    rec = ef.assemble_record(cosine_model, 1, kap * nu(phi), trunc=TR, lam=1e4)
    assert ef.residual(cosine_model, rec, 1, TR) <= max(rec.level(1).tail / 1e4, 1e-8)
    norm, target = ef.l2_norm(cosine_model, rec, 1)
    assert norm == pytest.approx(target, rel=1e-10)
    assert abs(ef.phase_defect(cosine_model, rec, 1)) <= 1e-10


def test_oracle_residual(cosine_model):
    phi = _phi(cosine_model)
    rec = ef.assemble_record(cosine_model, 1, 10 * nu(phi), trunc=TR, method="oracle")
    assert ef.residual(cosine_model, rec, 1, TR) <= 1e-12


def test_three_level_convergence():
    m = make_model(b=(2.0, 2.0), levels=3, recipe=[
        {"kind": "cosine", "amplitude": 0.25},
        {"kind": "explicit", "coefficients": [[2, 2, 0, 1.0], [2, 0, 2, 1.0], [2, 1, 0, 1.0],
                                              [2, 0, 1, 1.0], [3, 4, 0, 1.0], [3, 0, 4, 1.0],
                                              [3, 1, 1, 1.0]]}])
    phi = 0.35
    ch = trace_chain(m, 3, 1e4, phi, trunc=TR, derivative=False)
    rec = ef.assemble_record(m, 3, ch.kappas[-1] * nu(phi), trunc=TR, lam=1e4)
    rows = ef.convergence_report(rec)
    for n in (2, 3):
        assert rows[n - 1]["monotone"]
        assert abs(rec.level(n).drift) <= m.window(n).norm
        assert abs(ef.phase_defect(m, rec, n)) <= 1e-10
        assert ef.coset_consistent(rec.level(n - 1).coefficient_map(), 1)
    for n in (1, 2, 3):
        assert ef.residual(m, rec, n, TR) <= max(rec.level(n).tail / 1e4, 1e-8)


def test_sup_norm_single_mode():
    s, err = ef.sup_norm({(1, 0): 0.5, (-1, 0): 0.5})
    assert s == pytest.approx(1.0, rel=1e-12) and err <= 1e-12


def test_convergence_report_rejects_mixed():
    a = ef.EigenfunctionRecord(np.array([1.0, 0.0]))
    b = ef.EigenfunctionRecord(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        ef.convergence_report([a, b])
