"""Best responses, Nash equilibrium and quasi-concavity certification in one dimension."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, root

from . import quadrature
from .errors import DegenerateHessian, Multimodal, NoConvergence, NonUnique
from .model1d import Scenario1D, StrategyPair, foc, second_partials

log = logging.getLogger(__name__)

BR_GRID = 2001
TIE_TOL = 1e-9
SWITCH_TOL = 1e-4
POLISH_TOL = 1e-11
UNIQUE_TOL = 1e-6

INTERIOR, LOWER, UPPER = "interior", "lower-bound", "upper-bound"


@dataclass(frozen=True)
class BestResponse:
    x: float
    bound: str
    n_maxima: int


@dataclass(frozen=True)
class QuasiConcavityReport:
    grid_points: int
    opponent_points: int
    maxima_left: tuple[int, ...]
    maxima_right: tuple[int, ...]
    interior_maxima_left: tuple[int, ...]
    interior_maxima_right: tuple[int, ...]

    @property
    def multimodal(self) -> bool:
        return max(self.maxima_left + self.maxima_right) > 1

    @property
    def certified(self) -> bool:
        return not self.multimodal


@dataclass
class EquilibriumResult:
    pair: StrategyPair
    foc_residual: np.ndarray
    hessian: np.ndarray
    boundary_flags: tuple[str, str]
    iterations: int
    utilities: tuple[float, float]
    grid_verified: bool
    diagnostics: QuasiConcavityReport | None = None
    candidates: tuple = field(default_factory=tuple)

    @property
    def interior(self) -> bool:
        return self.boundary_flags == (INTERIOR, INTERIOR)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.hessian))

    @property
    def x_left(self) -> float:
        return self.pair.x_left

    @property
    def x_right(self) -> float:
        return self.pair.x_right


# A term is (weight, scenario, opponent position); plain best responses use one
# term, the Bayesian solver uses one per (type, opponent signal).
Term = tuple[float, Scenario1D, float]


def _slope_fn(terms: Sequence[Term], side: str):
    dev = terms[0][1].left if side == "left" else terms[0][1].right
    sign = 0.5 if side == "left" else -0.5

    def dfun(x):
        x = np.asarray(x, dtype=float)
        acc = sum(w * sign * s.turnout(0.5 * (x + xo)) for w, s, xo in terms)
        return acc - dev.gradient(x)

    return dfun


def expected_utility(terms: Sequence[Term], side: str, xs) -> np.ndarray:
    """Own utility summed over weighted terms, for every candidate position in ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    dev = terms[0][1].left if side == "left" else terms[0][1].right
    acc = np.zeros_like(xs)
    for w, s, xo in terms:
        below = quadrature.cumulative(s.turnout, 0.5 * (xs + xo), s.breakpoints)
        acc += w * (below if side == "left" else s.total_turnout - below)
    return acc - dev.value(xs)


def best_response_terms(terms: Sequence[Term], side: str, lo: float, hi: float,
                        grid: int = BR_GRID) -> BestResponse:
    """Maximise the weighted own utility over ``[lo, hi]``.

    Local maxima are bracketed on a grid of the analytic derivative and refined
    with Brent's method; competing maxima are compared by utility.
    """
    if hi - lo <= 1e-15:
        return BestResponse(lo, UPPER if side == "left" else LOWER, 1)
    dfun = _slope_fn(terms, side)
    xs = np.linspace(lo, hi, grid)
    f = dfun(xs)
    cands = []
    if f[0] <= 0.0:
        cands.append(lo)
    if f[-1] >= 0.0:
        cands.append(hi)
    for i in np.flatnonzero((f[:-1] > 0.0) & (f[1:] <= 0.0)):
        a, b = xs[i], xs[i + 1]
        cands.append(b if f[i + 1] == 0.0 else brentq(dfun, a, b, xtol=1e-15))
    if not cands:
        u = expected_utility(terms, side, xs)
        cands.append(float(xs[int(np.argmax(u))]))
    if len(cands) == 1:
        best = cands[0]
    else:
        u = expected_utility(terms, side, cands)
        order = np.argsort(-u, kind="stable")
        best = cands[order[0]]
        runner = cands[order[1]]
        if u[order[0]] - u[order[1]] <= TIE_TOL and abs(best - runner) > 1e-6:
            raise Multimodal(f"{side} best response ambiguous: utilities tie at "
                             f"x={best:.6g} and x={runner:.6g}", candidates=cands)
    bound = LOWER if best == lo else UPPER if best == hi else INTERIOR
    return BestResponse(float(best), bound, len(cands))


def best_response(s: Scenario1D, side: str, x_opp: float) -> BestResponse:
    """Own best response, never crossing the opponent: left searches ``[-1, x_right]``."""
    if side == "left":
        return best_response_terms([(1.0, s, x_opp)], "left", -1.0, x_opp)
    return best_response_terms([(1.0, s, x_opp)], "right", x_opp, 1.0)


def best_response_left(s: Scenario1D, x_right: float) -> float:
    return best_response(s, "left", x_right).x


def best_response_right(s: Scenario1D, x_left: float) -> float:
    return best_response(s, "right", x_left).x


def br_slope(s: Scenario1D, p, side: str = "left") -> float:
    """Slope of a best-response curve by implicit differentiation of the first-order condition.

    ``side="left"`` gives ``dx_left/dx_right``; ``side="right"`` gives ``dx_right/dx_left``.
    """
    h = second_partials(s, p)
    own, cross = (h[0, 0], h[0, 1]) if side == "left" else (h[1, 1], h[1, 0])
    if abs(own) < 1e-12:
        raise DegenerateHessian(f"own second partial {own:.3g} is numerically zero")
    return float(-cross / own)


def _flags(s: Scenario1D, xl: float, xr: float) -> tuple[str, str]:
    bl = best_response(s, "left", xr)
    br = best_response(s, "right", xl)
    return bl.bound, br.bound


def _polish(s: Scenario1D, xl: float, xr: float) -> tuple[float, float]:
    sol = root(lambda z: foc(s, np.clip(z, -1, 1)), [xl, xr],
               jac=lambda z: second_partials(s, np.clip(z, -1, 1)), method="hybr",
               options={"xtol": 1e-15})
    zl, zr = (float(v) for v in sol.x)
    if (-1.0 <= zl <= zr <= 1.0 and np.max(np.abs(foc(s, (zl, zr)))) <= POLISH_TOL
            and abs(zl - xl) < 1e-2 and abs(zr - xr) < 1e-2):
        return zl, zr
    # Boundary or stubborn case: finish with exact alternating best responses.
    for _ in range(400):
        nl = best_response(s, "left", xr).x
        nr = best_response(s, "right", nl).x
        step = max(abs(nl - xl), abs(nr - xr))
        xl, xr = nl, nr
        if step < 1e-14:
            break
    return xl, xr


def _iterate(s: Scenario1D, start, max_iter: int, damping: float) -> tuple[float, float, int]:
    xl, xr = (float(v) for v in start)
    for it in range(1, max_iter + 1):
        nl = xl + damping * (best_response(s, "left", xr).x - xl)
        nr = xr + damping * (best_response(s, "right", nl).x - xr)
        step = np.hypot(nl - xl, nr - xr)
        xl, xr = nl, nr
        if step < SWITCH_TOL:
            xl, xr = _polish(s, xl, xr)
            return xl, xr, it
    raise NoConvergence(f"best-response iteration did not settle in {max_iter} rounds")


def grid_check(s: Scenario1D, pair: StrategyPair, points: int = BR_GRID, slack: float = 1e-10) -> bool:
    """True when no grid deviation beats the candidate equilibrium by more than ``slack``."""
    xl, xr = pair
    ok = True
    for side, lo, hi, own, opp in (("left", -1.0, xr, xl, xr), ("right", xl, 1.0, xr, xl)):
        xs = np.append(np.linspace(lo, hi, points), own)
        u = expected_utility([(1.0, s, opp)], side, xs)
        ok &= bool(u[:-1].max() <= u[-1] + slack)
    return ok


def solve_nash(s: Scenario1D, start=None, *, max_iter: int = 500, damping: float = 0.5,
               check_unique: bool = True, certify_result: bool = True) -> EquilibriumResult:
    """Damped alternating best responses from the ideal points, then a Newton polish on the
    first-order conditions.  A second start from the quarter points checks uniqueness."""
    ideals = (s.left.ideal, s.right.ideal)
    xl, xr, its = _iterate(s, ideals if start is None else start, max_iter, damping)
    candidates = [StrategyPair(xl, xr)]
    if check_unique:
        quarter = (0.75 * ideals[0] + 0.25 * ideals[1], 0.25 * ideals[0] + 0.75 * ideals[1])
        ql, qr, _ = _iterate(s, quarter, max_iter, damping)
        if max(abs(ql - xl), abs(qr - xr)) > UNIQUE_TOL:
            raise NonUnique(f"starts converged to ({xl:.8g}, {xr:.8g}) and ({ql:.8g}, {qr:.8g})",
                            candidates=[StrategyPair(xl, xr), StrategyPair(ql, qr)])
        candidates.append(StrategyPair(ql, qr))
    pair = StrategyPair(xl, xr)
    flags = _flags(s, xl, xr)
    bl = best_response(s, "left", xr).x
    brr = best_response(s, "right", xl).x
    if max(abs(bl - xl), abs(brr - xr)) > UNIQUE_TOL:
        raise NoConvergence(f"({xl:.8g}, {xr:.8g}) is not a mutual best response")
    from .model1d import utility_left, utility_right
    result = EquilibriumResult(
        pair=pair,
        foc_residual=foc(s, pair),
        hessian=second_partials(s, pair),
        boundary_flags=flags,
        iterations=its,
        utilities=(utility_left(s, pair), utility_right(s, pair)),
        grid_verified=grid_check(s, pair),
        candidates=tuple(candidates),
    )
    if certify_result:
        result.diagnostics = certify(s, result)
    log.debug("equilibrium %s after %d rounds, flags %s", pair, its, flags)
    return result


def count_peaks(values: np.ndarray, tol: float = 1e-12) -> tuple[int, int]:
    """Return ``(all local maxima, interior local maxima)`` of a sampled curve."""
    d = np.diff(np.asarray(values, dtype=float))
    sgn = np.sign(np.where(np.abs(d) <= tol, 0.0, d))
    sgn = sgn[sgn != 0]
    if sgn.size == 0:
        return 1, 0
    interior = int(np.count_nonzero((sgn[:-1] > 0) & (sgn[1:] < 0)))
    edges = int(sgn[0] < 0) + int(sgn[-1] > 0)
    return interior + edges, interior


def certify(s: Scenario1D, r: EquilibriumResult | None = None, opponent_points: int = 41,
            grid: int = BR_GRID) -> QuasiConcavityReport:
    """Scan own-utility slices against a grid of opponent strategies and count their maxima."""
    opp = np.linspace(-1.0, 1.0, opponent_points)
    counts = {}
    for side in ("left", "right"):
        total, interior = [], []
        for xo in opp:
            lo, hi = (-1.0, xo) if side == "left" else (xo, 1.0)
            if hi - lo < 1e-12:
                total.append(1)
                interior.append(0)
                continue
            u = expected_utility([(1.0, s, xo)], side, np.linspace(lo, hi, grid))
            a, b = count_peaks(u)
            total.append(a)
            interior.append(b)
        counts[side] = (tuple(total), tuple(interior))
    return QuasiConcavityReport(grid, opponent_points, counts["left"][0], counts["right"][0],
                                counts["left"][1], counts["right"][1])
