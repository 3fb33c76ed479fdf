"""Limit-periodic potential V = sum_r V_r with doubling periods.

Block ``r`` is periodic with periods ``2^(r-1) * (b1, b2)``; its Fourier
coefficients are stored as a map ``q -> v_{r,q}`` over the dual lattice of
those periods, i.e. ``V_r(x) = sum_q v_{r,q} exp(i 2 pi <q, x / (2^(r-1) b)>)``.
The windowed potential ``W_n`` collects the blocks ``M_{n-1} < r <= M_n`` and
lives on the level-n dual lattice (periods ``2^(M_n - 1) b``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import TWO_PI, CellSpec, ModelParams


# ---------------------------------------------------------------------------
# period bookkeeping
# ---------------------------------------------------------------------------

def _round_half_up(x):
    return int(math.floor(x + 0.5))


def choose_M(n, k, params):
    """M_n = max(M_{n-1} + 1, round(s_n log2 k)), with M_0 = 0 and ties rounded up."""
    if k <= 1:
        raise ValueError("k must exceed 1")
    M = 0
    for m in range(1, n + 1):
        M = max(M + 1, _round_half_up(params.s(m) * math.log2(k)))
    return M


def refinement_factor(n, params, k):
    """N_n = 2^(M_{n+1} - M_n), the period refinement from level n to n+1."""
    return 2 ** (choose_M(n + 1, k, params) - choose_M(n, k, params))


def level_cell(n, params, k):
    """Cell of level n: a = 2^(M_1 - 1) b, N_hat = 2^(M_n - M_1)."""
    M1 = choose_M(1, k, params)
    scale = 2.0 ** (M1 - 1)
    N_hat = 2 ** (choose_M(n, k, params) - M1)
    return CellSpec(n, N_hat, scale * params.b1, scale * params.b2)


# ---------------------------------------------------------------------------
# potential construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    params: ModelParams
    blocks: tuple  # tuple of dicts {(q1, q2): complex}, index r-1
    budgets: tuple  # per-block sup-norm budgets
    scalings: tuple  # factor applied to each block to respect its budget
    relaxed: bool = False

    @property
    def R_max(self):
        return len(self.blocks)

    def block_norm(self, r):
        return float(sum(abs(v) for v in self.blocks[r - 1].values()))

    def block_periods(self, r):
        return 2.0 ** (r - 1) * self.params.b

    def evaluate_block(self, r, x):
        """Pointwise values of V_r at points ``x`` (shape (..., 2))."""
        return _evaluate(self.blocks[r - 1], self.block_periods(r), x)


def strict_budget(params, r):
    """exp(-2^(eta r)) (may underflow to 0.0; use strict_log_budget for ordering)."""
    return math.exp(-(2.0 ** (params.eta * r))) if 2.0 ** (params.eta * r) < 745 else 0.0


def strict_log_budget(params, r):
    return -(2.0 ** (params.eta * r))


def relaxed_budgets(relaxed_decay, R_max):
    """Per-block budgets from a list, extended geometrically with the last ratio."""
    vals = [float(v) for v in relaxed_decay]
    if not vals:
        raise ValueError("relaxed decay needs at least one budget")
    ratio = vals[-1] / vals[-2] if len(vals) >= 2 else 1e-3
    while len(vals) < R_max:
        vals.append(vals[-1] * ratio)
    return vals[:R_max]


def _modes_from_recipe(item, rng):
    """Yield (r, q, value) triples for one recipe entry (before symmetrization)."""
    kind = item.get("kind", "explicit")
    if kind == "cosine":
        r = int(item.get("block", 1))
        amp = float(item["amplitude"])
        for q in item.get("modes", [[1, 0], [0, 1]]):
            yield r, (int(q[0]), int(q[1])), complex(amp)
    elif kind == "explicit":
        for row in item["coefficients"]:
            r, q1, q2, re = row[:4]
            im = row[4] if len(row) > 4 else 0.0
            yield int(r), (int(q1), int(q2)), complex(re, im)
    elif kind == "random":
        amp = float(item.get("amplitude", 1.0))
        nmodes = int(item.get("modes", 3))
        qmax = int(item.get("max_index", 2))
        odd = bool(item.get("odd_only", False))
        for r in item.get("blocks", [1]):
            cand = [(q1, q2) for q1 in range(-qmax, qmax + 1) for q2 in range(-qmax, qmax + 1)
                    if (q1, q2) > (0, 0)]
            if odd:
                cand = [q for q in cand if q[0] % 2 or q[1] % 2]
            cand.sort()
            pick = rng.choice(len(cand), size=min(nmodes, len(cand)), replace=False)
            for i in sorted(pick):
                z = rng.normal() + 1j * rng.normal()
                yield int(r), cand[i], amp * z / abs(z) * rng.uniform(0.5, 1.0)
    else:
        raise ValueError(f"unknown potential recipe kind {kind!r}")


def build_potential(params, recipe, R_max, relaxed_decay=None, seed=0):
    """Build a PotentialSpec from a recipe.

    ``recipe`` is a list of entries (dicts) of kind ``cosine``, ``explicit``
    or ``random``. Entries list only one member of each conjugate pair;
    ``v_{-q} = conj(v_q)`` is filled in. Explicitly given pairs must already
    be Hermitian. Blocks exceeding their budget are scaled down.
    """
    if isinstance(recipe, dict):
        recipe = [recipe]
    rng = np.random.default_rng(seed)
    blocks = [dict() for _ in range(R_max)]
    for item in recipe or []:
        for r, q, v in _modes_from_recipe(item, rng):
            if not 1 <= r <= R_max:
                raise ValueError(f"recipe block r={r} outside 1..{R_max}")
            if q == (0, 0):
                if v != 0:
                    raise ValueError("potential blocks must have zero mean (q=0 coefficient)")
                continue
            neg = (-q[0], -q[1])
            b = blocks[r - 1]
            if q in b and b[q] != v:
                raise ValueError(f"conflicting coefficients for block {r}, q={q}")
            if neg in b and abs(b[neg] - np.conj(v)) > 1e-14 * max(1.0, abs(v)):
                raise ValueError(f"non-Hermitian coefficients for block {r}, q={q}")
            b[q] = v
            b[neg] = np.conj(v)
    if relaxed_decay is not None:
        budgets = relaxed_budgets(relaxed_decay, R_max)
    else:
        budgets = [strict_budget(params, r) for r in range(1, R_max + 1)]
    scalings = []
    for r in range(1, R_max + 1):
        norm = sum(abs(v) for v in blocks[r - 1].values())
        s = 1.0
        if norm > budgets[r - 1]:
            s = budgets[r - 1] / norm
            blocks[r - 1] = {q: v * s for q, v in blocks[r - 1].items()}
        scalings.append(s)
    frozen = tuple(dict(sorted(b.items())) for b in blocks)
    return PotentialSpec(params, frozen, tuple(budgets), tuple(scalings),
                         relaxed=relaxed_decay is not None)


def _evaluate(coeffs, periods, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1], dtype=complex)
    for q, v in coeffs.items():
        phase = TWO_PI * (q[0] * x[..., 0] / periods[0] + q[1] * x[..., 1] / periods[1])
        out += v * np.exp(1j * phase)
    return out


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowedPotential:
    level: int
    coeffs: dict  # level-n lattice index -> complex
    periods: np.ndarray = field(compare=False)
    blocks: tuple = ()  # block numbers r included

    @property
    def norm(self):
        """Sum of |coefficients| (upper bound for the sup-norm)."""
        return float(sum(abs(v) for v in self.coeffs.values()))

    def evaluate(self, x):
        return _evaluate(self.coeffs, self.periods, x)

    def embedded(self, factor):
        """Coefficients re-indexed on a lattice refined by ``factor``."""
        return {(q[0] * factor, q[1] * factor): v for q, v in self.coeffs.items()}


def window_sum(spec, n, k):
    """W_n = sum_{r=M_{n-1}+1}^{M_n} V_r on the level-n dual lattice."""
    params = spec.params
    M_prev = choose_M(n - 1, k, params) if n > 1 else 0
    M_n = choose_M(n, k, params)
    if M_n > spec.R_max:
        raise ValueError(
            f"level {n} needs blocks {M_prev + 1}..{M_n} but only 1..{spec.R_max} exist")
    coeffs = {}
    for r in range(M_prev + 1, M_n + 1):
        f = 2 ** (M_n - r)
        for q, v in spec.blocks[r - 1].items():
            key = (q[0] * f, q[1] * f)
            coeffs[key] = coeffs.get(key, 0) + v
    coeffs = {q: v for q, v in sorted(coeffs.items()) if v != 0}
    periods = 2.0 ** (M_n - 1) * params.b
    return WindowedPotential(n, coeffs, periods, tuple(range(M_prev + 1, M_n + 1)))


def window_log_bound(spec, n, k):
    """log of the budget bound for ||W_n||: sum of the block budgets in the window."""
    params = spec.params
    M_prev = choose_M(n - 1, k, params) if n > 1 else 0
    M_n = choose_M(n, k, params)
    if spec.relaxed:
        return math.log(sum(spec.budgets[r - 1] for r in range(M_prev + 1, M_n + 1)))
    logs = [strict_log_budget(params, r) for r in range(M_prev + 1, M_n + 1)]
    m = max(logs)
    return m + math.log(sum(math.exp(v - m) for v in logs))


def window_ok(spec, n, k):
    """Check ||W_n|| <= exp(-k^(eta s_{n-1})) in log space (n >= 2, strict decay)."""
    if n < 2:
        return True
    w = window_sum(spec, n, k)
    if w.norm == 0:
        return True
    return math.log(w.norm) <= -(k ** (spec.params.eta * spec.params.s(n - 1)))


# ---------------------------------------------------------------------------
# epsilon ledger
# ---------------------------------------------------------------------------

EPS_FLOOR = 1e-300


def log_epsilon(n, k, params):
    """log eps_n with eps_n = exp(-k^(eta s_n) / 4)."""
    return -(k ** (params.eta * params.s(n))) / 4.0


def epsilon(n, k, params, lam=None, mode="desk", band=None, floor=EPS_FLOOR):
    """Concrete value of the resonance scale eps_n.

    An explicit ``band`` wins. Strict mode uses exp(-k^(eta s_n)/4) floored
    at ``floor``; desk mode uses 1e-8 * lambda, since the literal value
    underflows for every practical k.
    """
    if band is not None:
        return float(band)
    if mode == "strict":
        return max(math.exp(max(log_epsilon(n, k, params), -745.0)), floor)
    if lam is None:
        lam = k ** (2 * params.l)
    return 1e-8 * lam
