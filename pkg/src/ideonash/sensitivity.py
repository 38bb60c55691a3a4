"""First-order comparative statics of the one-dimensional equilibrium.

Perturbing a model ingredient shifts the first-order conditions by a small
vector; linearising around the equilibrium gives ``H dx = b`` with ``H`` the
matrix of second partials.  Every prediction can be compared with a re-solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Union

import numpy as np

from . import quadrature
from .errors import (BoundaryEquilibrium, DegenerateDet, DiagnosticsFailure, EndpointOrderViolation,
                     IdeoNashError, NotZeroMass, PathBreak, SignLawViolation)
from .functions import Pdf1D, combine_pdfs, mix_pdfs
from .model1d import Scenario1D, StrategyPair, cross_derivative, second_partials
from .solver1d import EquilibriumResult, solve_nash

log = logging.getLogger(__name__)

DET_FLOOR = 1e-12
ZERO_X = 1e-6


@dataclass(frozen=True)
class DetIdentity:
    """Determinant of the equilibrium Hessian three ways.

    ``expanded`` is the exact expansion ``L (a - b) + a b`` for quadratic costs with
    ``a, b`` the two deviation-cost curvatures; ``reduced`` keeps only ``L (a - b)``,
    which vanishes whenever the curvatures agree.
    """

    assembled: float
    expanded: float
    reduced: float

    @property
    def discrepancy(self) -> float:
        return self.expanded - self.reduced


@dataclass(frozen=True)
class SensitivityReport:
    kind: str
    size: float
    side: str | None
    base: StrategyPair
    hessian: np.ndarray
    rhs: np.ndarray
    predicted: np.ndarray
    elasticities: np.ndarray
    closed_form: np.ndarray
    oracle: np.ndarray | None = None
    turnout_shift: float | None = None

    @property
    def residual(self) -> float:
        return float(np.linalg.norm(self.hessian @ self.predicted - self.rhs))

    @property
    def first_order_error(self) -> float | None:
        if self.oracle is None:
            return None
        return float(np.linalg.norm(self.oracle - self.predicted))


def hessian_at(s: Scenario1D, r: EquilibriumResult) -> np.ndarray:
    if not r.interior:
        raise BoundaryEquilibrium(f"equilibrium is not interior: {r.boundary_flags}")
    return second_partials(s, r.pair)


def det_identity(s: Scenario1D, r: EquilibriumResult) -> DetIdentity:
    h = hessian_at(s, r)
    cross = cross_derivative(s, r.pair)
    a, b = s.left.curvature(), s.right.curvature()
    return DetIdentity(float(np.linalg.det(h)), cross * (a - b) + a * b, cross * (a - b))


def _checked_solve(h: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    det = float(np.linalg.det(h))
    if abs(det) < DET_FLOOR:
        raise DegenerateDet(f"det(H) = {det:.3g} is numerically zero")
    return np.linalg.solve(h, rhs) + 0.0  # no negative zeros in reports


def _elasticities(shift: np.ndarray, size: float, pair: StrategyPair) -> np.ndarray:
    if size == 0.0:
        return np.zeros(2)
    x = np.asarray(pair)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(x) > ZERO_X, shift / size / x, np.nan)


def _resolve(s: Scenario1D, r: EquilibriumResult) -> np.ndarray:
    new = solve_nash(s, start=r.pair, check_unique=False, certify_result=False)
    return np.asarray(new.pair) - np.asarray(r.pair)


def _reduced_shift(h: np.ndarray, cross: float, a: float, b: float, side: str, c: float) -> np.ndarray:
    """Shifts with ``det(H)`` replaced by ``L (a - b)`` and the common ``L`` cancelled."""
    gap = a - b
    with np.errstate(divide="ignore", invalid="ignore"):
        if side == "right":
            own = c * (cross - a) / (cross * gap) if abs(cross * gap) > DET_FLOOR else np.nan
            other = -c / gap if abs(gap) > DET_FLOOR else np.nan
            return np.array([other, own])
        own = -c * (cross + b) / (cross * gap) if abs(cross * gap) > DET_FLOOR else np.nan
        other = c / gap if abs(gap) > DET_FLOOR else np.nan
        return np.array([own, other])


def perturb_deviation(s: Scenario1D, r: EquilibriumResult, eps: float, side: str = "right",
                      oracle: bool = True) -> SensitivityReport:
    """Linear response to scaling one party's deviation cost to ``(1 + eps) D``."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    h = hessian_at(s, r)
    xl, xr = r.pair
    if side == "right":
        c = eps * float(s.right.gradient(xr))
        rhs = np.array([0.0, c])
        moved, ideal, idx = xr, s.right.ideal, 1
    else:
        c = eps * float(s.left.gradient(xl))
        rhs = np.array([c, 0.0])
        moved, ideal, idx = xl, s.left.ideal, 0
    shift = _checked_solve(h, rhs)
    if eps > 0 and shift[idx] * (ideal - moved) < -1e-15:
        raise SignLawViolation(f"{side} party moved away from its ideal: shift {shift[idx]:.3g}")
    cross = cross_derivative(s, r.pair)
    closed = _reduced_shift(h, cross, s.left.curvature(), s.right.curvature(), side, c)
    resolved = None
    if oracle:
        dev = s.right.scaled(1.0 + eps) if side == "right" else s.left.scaled(1.0 + eps)
        resolved = _resolve(replace(s, **{side: dev}), r)
    return SensitivityReport("deviation-cost", float(eps), side, r.pair, h, rhs, shift,
                             _elasticities(shift, eps, r.pair), closed, resolved)


def direction_mass(toward: Pdf1D, away: Pdf1D) -> float:
    return quadrature.integrate(lambda x: toward.value(x) - away.value(x), -1.0, 1.0,
                                tuple(toward.breakpoints()) + tuple(away.breakpoints()), tol=1e-13)


def perturb_distribution(s: Scenario1D, r: EquilibriumResult, gamma: float, toward: Pdf1D,
                         away: Pdf1D, oracle: bool = True) -> SensitivityReport:
    """Linear response to moving the voter density to ``g + gamma (toward - away)``."""
    mass = direction_mass(toward, away)
    if abs(mass) > 1e-8:
        raise NotZeroMass(f"perturbation direction integrates to {mass:.3g}, expected 0")
    h = hessian_at(s, r)
    mid = r.pair.midpoint
    turnout_prob = float(s.cost(s.motivation(mid)))
    kappa = 0.5 * (float(toward.value(mid)) - float(away.value(mid))) * turnout_prob
    rhs = gamma * np.array([-kappa, kappa])
    shift = _checked_solve(h, rhs)
    if shift[0] * shift[1] > 1e-12:
        raise SignLawViolation(f"distribution shift moved both parties the same way: {shift}")
    a, b = s.left.curvature(), s.right.curvature()
    det = float(np.linalg.det(h))
    closed = gamma * kappa * np.array([b, -a]) / det
    resolved = None
    if oracle:
        moved = combine_pdfs((s.pdf, toward, away), (1.0, gamma, -gamma))
        resolved = _resolve(s.with_pdf(moved), r)
    return SensitivityReport("distribution", float(gamma), None, r.pair, h, rhs, shift,
                             _elasticities(shift, gamma, r.pair), closed, resolved, kappa)


# ---------------------------------------------------------------- continuation

ALIASES = {"k_left": "left.k", "k_right": "right.k", "ideal_left": "left.ideal",
           "ideal_right": "right.ideal"}

Param = Union[str, Callable[[Scenario1D, float], Scenario1D]]


def set_param(obj, path: str, value):
    """Return a copy of a frozen dataclass tree with the attribute at ``path`` replaced."""
    path = ALIASES.get(path, path)
    head, _, rest = path.partition(".")
    if not hasattr(obj, head):
        raise ValueError(f"{type(obj).__name__} has no parameter {head!r}")
    if rest:
        return replace(obj, **{head: set_param(getattr(obj, head), rest, value)})
    old = getattr(obj, head)
    if isinstance(old, tuple):
        value = tuple(np.broadcast_to(value, (len(old),)).tolist())
    return replace(obj, **{head: value})


def _apply(s: Scenario1D, param: Param, value: float) -> Scenario1D:
    return param(s, value) if callable(param) else set_param(s, param, value)


@dataclass(frozen=True)
class EquilibriumPath:
    parameter: str
    grid: tuple[float, ...]
    results: tuple[EquilibriumResult, ...]

    @property
    def pairs(self) -> list[StrategyPair]:
        return [r.pair for r in self.results]

    @property
    def certified(self) -> tuple[bool, ...]:
        return tuple(r.diagnostics is None or r.diagnostics.certified for r in self.results)

    def column(self, side: str) -> np.ndarray:
        return np.array([getattr(p, f"x_{side}") for p in self.pairs])


def sweep(s: Scenario1D, param: Param, grid: Sequence[float], start=None,
          step_bound: float = 0.2, check_unique: bool = True) -> EquilibriumPath:
    """Warm-started continuation of the equilibrium along an ascending parameter grid."""
    grid = tuple(float(v) for v in grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be ascending")
    results = []
    prev = start
    for i, value in enumerate(grid):
        try:
            r = solve_nash(_apply(s, param, value), start=prev, check_unique=check_unique)
        except (IdeoNashError, ValueError) as exc:
            raise PathBreak(f"solve failed at grid index {i} ({value:g}): {exc}", index=i) from exc
        if results:
            jump = float(np.max(np.abs(np.subtract(r.pair, results[-1].pair))))
            if jump > step_bound:
                raise PathBreak(f"equilibrium jumped by {jump:.3g} at grid index {i}", index=i)
        if r.diagnostics is not None and not r.diagnostics.certified:
            raise PathBreak(f"uniqueness not certified at grid index {i}", index=i)
        results.append(r)
        prev = r.pair
    name = param if isinstance(param, str) else getattr(param, "__name__", "parameter")
    return EquilibriumPath(name, grid, tuple(results))


def bisect_sign(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4) -> float:
    """Locate a sign change of ``f`` on ``[lo, hi]`` by bisection."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def locate_sign_flip(s: Scenario1D, param: Param, grid: Sequence[float],
                     quantity: Callable[[Scenario1D, EquilibriumResult], float],
                     tol: float = 1e-4) -> tuple[float, EquilibriumPath]:
    """Sweep ``param``, bracket the first sign change of ``quantity`` and refine it by bisection."""
    path = sweep(s, param, grid)
    values = [quantity(_apply(s, param, v), r) for v, r in zip(path.grid, path.results)]
    for i in range(len(values) - 1):
        if np.sign(values[i]) != np.sign(values[i + 1]) or values[i] == 0.0:
            def f(v):
                sv = _apply(s, param, v)
                return quantity(sv, solve_nash(sv, check_unique=False, certify_result=False))
            return bisect_sign(f, path.grid[i], path.grid[i + 1], tol), path
    raise ValueError("quantity keeps one sign along the whole grid")


def deviation_shift_left(eps: float = 1e-3) -> Callable[[Scenario1D, EquilibriumResult], float]:
    """Quantity for :func:`locate_sign_flip`: predicted left shift under a right-cost perturbation."""
    def quantity(s: Scenario1D, r: EquilibriumResult) -> float:
        return float(perturb_deviation(s, r, eps, "right", oracle=False).predicted[0])
    return quantity


# ---------------------------------------------------------------- mixtures

@dataclass(frozen=True)
class ContainmentReport:
    lambdas: tuple[float, ...]
    pairs: tuple[StrategyPair, ...]
    endpoint_a: StrategyPair
    endpoint_b: StrategyPair
    contained: tuple[bool, ...]
    strict: tuple[bool, ...]
    monotone_left: bool
    monotone_right: bool
    degenerate: bool

    @property
    def holds(self) -> bool:
        return all(self.contained)

    @property
    def strictly_inside(self) -> bool:
        inner = [st for lam, st in zip(self.lambdas, self.strict) if 0.0 < lam < 1.0]
        return self.degenerate or all(inner)


def _monotone(values: np.ndarray, slack: float = 1e-12) -> bool:
    d = np.diff(values)
    return bool(np.all(d >= -slack) or np.all(d <= slack))


def mixture_containment(s: Scenario1D, a: Pdf1D, b: Pdf1D, lambdas: Sequence[float],
                        slack: float = 1e-9) -> ContainmentReport:
    """Check that equilibria under ``(1 - lam) a + lam b`` stay between the endpoint equilibria."""
    ra = solve_nash(s.with_pdf(a))
    rb = solve_nash(s.with_pdf(b))
    for r in (ra, rb):
        if r.diagnostics is not None and not r.diagnostics.certified:
            raise DiagnosticsFailure("endpoint equilibrium is not certified unique")
    dl = ra.x_left - rb.x_left
    dr = ra.x_right - rb.x_right
    degenerate = abs(dl) <= 1e-12 and abs(dr) <= 1e-12
    if not degenerate and dl * dr > 0:
        raise EndpointOrderViolation(
            f"endpoint equilibria are not nested: left moves {dl:.3g}, right moves {dr:.3g}")
    lo_l, hi_l = sorted((ra.x_left, rb.x_left))
    lo_r, hi_r = sorted((ra.x_right, rb.x_right))
    pairs, contained, strict = [], [], []
    prev = ra.pair
    for lam in lambdas:
        if lam == 0.0:
            pair = ra.pair
        elif lam == 1.0:
            pair = rb.pair
        else:
            pair = solve_nash(s.with_pdf(mix_pdfs(a, b, lam)), start=prev).pair
        prev = pair
        pairs.append(pair)
        contained.append(lo_l - slack <= pair.x_left <= hi_l + slack
                         and lo_r - slack <= pair.x_right <= hi_r + slack)
        strict.append(lo_l < pair.x_left < hi_l and lo_r < pair.x_right < hi_r)
    order = np.argsort(lambdas, kind="stable")
    xs = np.array(pairs)[order] if pairs else np.zeros((0, 2))
    return ContainmentReport(tuple(float(v) for v in lambdas), tuple(pairs), ra.pair, rb.pair,
                             tuple(contained), tuple(strict), _monotone(xs[:, 0]),
                             _monotone(xs[:, 1]), degenerate)
