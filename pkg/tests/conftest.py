import math

import numpy as np
import pytest

from kamspectra.bloch import Model, TruncationParams
from kamspectra.lattice import ModelParams
from kamspectra.potential import build_potential

COSINE = [{"kind": "cosine", "amplitude": 0.25}]
RELAXED = [1.0, 1e-6, 1e-9]


def make_model(l=2, b=(math.pi, math.pi), k=10.0, recipe=COSINE, levels=1, s1=0.25, delta=0.1,
               R_max=3, relaxed=RELAXED, seed=0):
    p = ModelParams(l=l, b1=b[0], b2=b[1], s1=s1, delta=delta)
    pot = build_potential(p, recipe, R_max, relaxed_decay=relaxed, seed=seed)
    return Model(p, pot, k, levels=levels)


@pytest.fixture(scope="session")
def cosine_model():
    return make_model()


@pytest.fixture(scope="session")
def free_model():
    return make_model(recipe=[])


@pytest.fixture(scope="session")
def trunc():
    return TruncationParams(c_rho=1.3, R=4, Q=64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# acceptance verdict lines
# ---------------------------------------------------------------------------

_VERDICTS = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if crit:
        n, name, mode = crit
        prev = _VERDICTS.get(n)
        ok = report.passed
        _VERDICTS[n] = (name if prev is None else prev[0], mode,
                        ok if prev is None else (prev[2] and ok),
                        (prev[3] if prev else []) + ([] if ok else [report.nodeid.split("::")[-1]]))


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m:
        item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        name, mode, ok, failed = _VERDICTS[n]
        extra = f"  (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n:2d} [{mode}] {name}: {'PASS' if ok else 'FAIL'}{extra}")
