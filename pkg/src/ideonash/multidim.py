"""Multi-dimensional policy space with a feasibility cost on incoherent bundles.

Two ways of splitting the electorate are supported.  ``bisector`` gives every
voter to the nearer party (the half-space bounded by the perpendicular
bisector of the two positions).  ``box`` gives the left party the box below
the per-axis midpoints and the right party the box above them; the two boxes
do not cover the cube, so some voters belong to neither.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize, root

from . import quadrature
from .errors import (BoundaryEquilibrium, DimensionMismatch, IdeoNashError, NoConvergence,
                     NonUnique, OutOfSupport, PathBreak, SingularBlock, ValidationError)
from .functions import CostCdf, DeviationCost, Feasibility, GridPdf, ProductPdf, QuadraticMotivation
from .solver1d import INTERIOR, LOWER, UPPER, count_peaks

log = logging.getLogger(__name__)

MAX_DIM = 3
FD_STEP = 1e-5
UNIQUE_TOL = 1e-5
RESIDUAL_TOL = 1e-6
REGIONS = ("bisector", "box")

JointPdf = Union[ProductPdf, GridPdf]


@dataclass(frozen=True)
class ScenarioND:
    pdf: JointPdf
    cost: CostCdf
    motivation: QuadraticMotivation
    left: DeviationCost
    right: DeviationCost
    feasibility: Feasibility | None = None
    region: str = "bisector"
    order: int = 24

    def __post_init__(self):
        n = self.pdf.dim
        if not 1 <= n <= MAX_DIM:
            raise ValidationError(f"policy dimension must be between 1 and {MAX_DIM}, got {n}")
        if self.region not in REGIONS:
            raise ValidationError(f"region must be one of {REGIONS}, got {self.region!r}")
        if self.motivation.dim != n:
            raise DimensionMismatch(f"motivation has {self.motivation.dim} coordinates, pdf has {n}")
        for name, dev in (("left", self.left), ("right", self.right)):
            if np.ndim(dev.ideal) == 0 or len(dev.ideal) != n:
                raise DimensionMismatch(f"{name} ideal must be a vector of length {n}")
            if np.any(np.abs(dev.ideal) > 1.0):
                raise ValidationError(f"{name} ideal lies outside the cube")
        if self.feasibility is not None and self.feasibility.dim != n:
            raise DimensionMismatch(f"feasibility gradient has {self.feasibility.dim} coordinates")
        if self.order < 2:
            raise ValidationError("quadrature order must be >= 2")
        pts, wts = self._cube_rule
        mass = float(np.dot(wts, self.pdf.value(pts)))
        if abs(mass - 1.0) > 1e-6:
            raise ValidationError(f"joint pdf integrates to {mass:.8g}, expected 1")

    @property
    def dim(self) -> int:
        return self.pdf.dim

    @cached_property
    def _cube_rule(self):
        return quadrature.box_rule([-1.0] * self.dim, [1.0] * self.dim, self.order,
                                   self.pdf.axis_breakpoints())

    @cached_property
    def total_turnout(self) -> float:
        pts, wts = self._cube_rule
        return float(np.dot(wts, self.turnout(pts)))

    def turnout(self, pts):
        pts = np.atleast_2d(pts)
        return self.pdf.value(pts) * self.cost(self.motivation(pts))

    def phi(self, x) -> float:
        return 0.0 if self.feasibility is None else float(self.feasibility.value(x))

    def phi_grad(self) -> np.ndarray:
        if self.feasibility is None:
            return np.zeros(self.dim)
        return self.feasibility.grad()

    def with_phi_scale(self, factor: float) -> "ScenarioND":
        if self.feasibility is None:
            return self
        return replace(self, feasibility=self.feasibility.rescaled(factor))


def _vec(s: ScenarioND, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != s.dim:
        raise DimensionMismatch(f"expected {s.dim} coordinates, got {x.size}")
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise OutOfSupport(f"strategy {x} outside the cube")
    return x


def _integrate(s: ScenarioND, rule) -> float:
    pts, wts = rule
    return float(np.dot(wts, s.turnout(pts))) if wts.size else 0.0


def region_masses(s: ScenarioND, xl, xr) -> tuple[float, float]:
    """Turnout mass won by each party."""
    xl, xr = _vec(s, xl), _vec(s, xr)
    if s.region == "box":
        mid = 0.5 * (xl + xr)
        left = _integrate(s, quadrature.box_rule([-1.0] * s.dim, mid, s.order))
        right = _integrate(s, quadrature.box_rule(mid, [1.0] * s.dim, s.order))
        return left, right
    d = xr - xl
    if np.linalg.norm(d) < 1e-14:
        half = 0.5 * s.total_turnout
        return half, half
    c = 0.5 * (xr @ xr - xl @ xl)
    left = _integrate(s, quadrature.slab_rule(d, hi=c, order=s.order))
    return left, s.total_turnout - left


def utility_nd(s: ScenarioND, side: str, xl, xr) -> float:
    own = _vec(s, xl if side == "left" else xr)
    dev = s.left if side == "left" else s.right
    left, right = region_masses(s, xl, xr)
    mass = left if side == "left" else right
    return mass - float(dev.value(own)) - s.phi(own)


def _face_integral(s: ScenarioND, lows, highs, j: int, at: float) -> float:
    keep = [i for i in range(s.dim) if i != j]
    if not keep:
        return float(s.turnout(np.array([[at]]))[0])
    pts, wts = quadrature.box_rule(np.asarray(lows)[keep], np.asarray(highs)[keep], s.order)
    if wts.size == 0:
        return 0.0
    full = np.insert(pts, j, at, axis=1)
    return float(np.dot(wts, s.turnout(full)))


def mass_gradients(s: ScenarioND, xl, xr) -> np.ndarray:
    """Derivatives of the left party's mass: ``(d/dx_left, d/dx_right)`` stacked as a (2, n) array.

    In bisector mode the right party's mass is the complement, so its
    derivatives are the negatives.  In box mode each party has its own faces;
    see :func:`utility_gradient`.
    """
    xl, xr = _vec(s, xl), _vec(s, xr)
    d = xr - xl
    norm = np.linalg.norm(d)
    if norm < 1e-14:
        return np.zeros((2, s.dim))
    pts, wts = quadrature.plane_rule(d, 0.5 * (xr @ xr - xl @ xl), s.order)
    if wts.size == 0:
        return np.zeros((2, s.dim))
    w = wts * s.turnout(pts) / norm
    p0 = w.sum()
    p1 = w @ pts
    return np.stack([p1 - xl * p0, xr * p0 - p1])


def _box_gradients(s: ScenarioND, side: str, xl, xr) -> np.ndarray:
    mid = 0.5 * (xl + xr)
    out = np.zeros(s.dim)
    for j in range(s.dim):
        if side == "left":
            out[j] = 0.5 * _face_integral(s, -np.ones(s.dim), mid, j, mid[j])
        else:
            out[j] = -0.5 * _face_integral(s, mid, np.ones(s.dim), j, mid[j])
    return np.stack([out, out])


def utility_gradient(s: ScenarioND, side: str, xl, xr) -> np.ndarray:
    """``(dU_side/dx_left, dU_side/dx_right)`` as a (2, n) array."""
    xl, xr = _vec(s, xl), _vec(s, xr)
    if s.region == "box":
        g = _box_gradients(s, side, xl, xr)
    else:
        g = mass_gradients(s, xl, xr)
        if side == "right":
            g = -g
    own = 0 if side == "left" else 1
    dev = s.left if side == "left" else s.right
    g[own] -= dev.gradient(xl if side == "left" else xr) + s.phi_grad()
    return g


def own_gradients(s: ScenarioND, xl, xr) -> np.ndarray:
    """Stacked own-strategy gradients ``[dU_left/dx_left, dU_right/dx_right]``; zero at interior equilibria."""
    return np.concatenate([utility_gradient(s, "left", xl, xr)[0],
                           utility_gradient(s, "right", xl, xr)[1]])


def jacobian_nd(s: ScenarioND, xl, xr, step: float = FD_STEP) -> np.ndarray:
    """Central differences of :func:`own_gradients`; stays inside the cube by shifting the stencil."""
    z = np.concatenate([_vec(s, xl), _vec(s, xr)])
    n = s.dim
    jac = np.zeros((2 * n, 2 * n))
    for k in range(2 * n):
        hi = z.copy()
        lo = z.copy()
        up = min(step, 1.0 - z[k])
        down = min(step, 1.0 + z[k])
        hi[k] += up
        lo[k] -= down
        jac[:, k] = (own_gradients(s, hi[:n], hi[n:]) - own_gradients(s, lo[:n], lo[n:])) / (up + down)
    return jac


@dataclass(frozen=True)
class SliceReport:
    grid_points: int
    maxima: tuple[tuple[int, ...], tuple[int, ...]]

    @property
    def certified(self) -> bool:
        return all(c == 1 for side in self.maxima for c in side)


@dataclass
class EquilibriumResultND:
    x_left: np.ndarray
    x_right: np.ndarray
    residual: np.ndarray
    jacobian: np.ndarray
    boundary_flags: tuple[tuple[str, ...], tuple[str, ...]]
    iterations: int
    utilities: tuple[float, float]
    slices: SliceReport | None = None

    @property
    def dim(self) -> int:
        return self.x_left.size

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))

    @property
    def interior(self) -> bool:
        return all(f == INTERIOR for side in self.boundary_flags for f in side)

    @property
    def blocks(self) -> dict[str, np.ndarray]:
        n = self.dim
        j = self.jacobian
        return {"left-left": j[:n, :n], "left-right": j[:n, n:],
                "right-left": j[n:, :n], "right-right": j[n:, n:]}

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x_left, self.x_right])


def best_response_nd(s: ScenarioND, side: str, x_opp, start=None) -> np.ndarray:
    """Maximise own utility over the cube with bound-constrained quasi-Newton steps."""
    x_opp = _vec(s, x_opp)
    dev = s.left if side == "left" else s.right
    x0 = np.asarray(dev.ideal if start is None else start, dtype=float)
    own = 0 if side == "left" else 1

    def neg(x):
        pair = (x, x_opp) if side == "left" else (x_opp, x)
        return -utility_nd(s, side, *pair), -utility_gradient(s, side, *pair)[own]

    res = minimize(neg, x0, jac=True, method="L-BFGS-B", bounds=[(-1.0, 1.0)] * s.dim,
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500})
    return np.clip(res.x, -1.0, 1.0)


def _flags(s: ScenarioND, xl, xr) -> tuple[tuple[str, ...], tuple[str, ...]]:
    g = own_gradients(s, xl, xr)
    n = s.dim
    out = []
    for x, grad in ((xl, g[:n]), (xr, g[n:])):
        out.append(tuple(LOWER if xi <= -1.0 + 1e-12 and gi <= 0 else
                         UPPER if xi >= 1.0 - 1e-12 and gi >= 0 else INTERIOR
                         for xi, gi in zip(x, grad)))
    return tuple(out)


def _iterate(s: ScenarioND, xl, xr, max_iter: int, damping: float):
    xl = np.asarray(xl, dtype=float)
    xr = np.asarray(xr, dtype=float)
    n = s.dim
    for it in range(1, max_iter + 1):
        nl = xl + damping * (best_response_nd(s, "left", xr, xl) - xl)
        nr = xr + damping * (best_response_nd(s, "right", nl, xr) - xr)
        step = np.linalg.norm(np.concatenate([nl - xl, nr - xr]))
        xl, xr = nl, nr
        if step < 1e-4:
            break
    else:
        raise NoConvergence(f"alternating best responses did not settle in {max_iter} rounds")
    sol = root(lambda z: own_gradients(s, np.clip(z[:n], -1, 1), np.clip(z[n:], -1, 1)),
               np.concatenate([xl, xr]), method="hybr",
               jac=lambda z: jacobian_nd(s, np.clip(z[:n], -1, 1), np.clip(z[n:], -1, 1)),
               options={"xtol": 1e-14})
    z = sol.x
    if (np.all(np.abs(z) <= 1.0) and np.linalg.norm(own_gradients(s, z[:n], z[n:])) < 1e-10
            and np.linalg.norm(z - np.concatenate([xl, xr])) < 1e-2):
        return z[:n], z[n:], it
    for extra in range(200):
        nl = best_response_nd(s, "left", xr, xl)
        nr = best_response_nd(s, "right", nl, xr)
        step = np.linalg.norm(np.concatenate([nl - xl, nr - xr]))
        xl, xr = nl, nr
        if step < 1e-12:
            break
    return xl, xr, it


def slice_scan(s: ScenarioND, xl, xr, points: int = 201) -> SliceReport:
    """Count own-utility maxima along every coordinate line through the candidate equilibrium."""
    xs = np.linspace(-1.0, 1.0, points)
    out = []
    for side in ("left", "right"):
        counts = []
        for j in range(s.dim):
            vals = []
            for v in xs:
                a, b = np.array(xl, dtype=float), np.array(xr, dtype=float)
                (a if side == "left" else b)[j] = v
                vals.append(utility_nd(s, side, a, b))
            counts.append(count_peaks(np.array(vals))[0])
        out.append(tuple(counts))
    return SliceReport(points, tuple(out))


def solve_nash_nd(s: ScenarioND, start=None, *, max_iter: int = 300, damping: float = 0.5,
                  check_unique: bool = True, certify_result: bool = True) -> EquilibriumResultND:
    il = np.asarray(s.left.ideal)
    ir = np.asarray(s.right.ideal)
    x0 = (il, ir) if start is None else start
    xl, xr, its = _iterate(s, x0[0], x0[1], max_iter, damping)
    if check_unique:
        ql, qr, _ = _iterate(s, 0.75 * il + 0.25 * ir, 0.25 * il + 0.75 * ir, max_iter, damping)
        gap = max(np.max(np.abs(ql - xl)), np.max(np.abs(qr - xr)))
        if gap > UNIQUE_TOL:
            raise NonUnique(f"starts disagree by {gap:.3g}", candidates=[(xl, xr), (ql, qr)])
    flags = _flags(s, xl, xr)
    res = own_gradients(s, xl, xr)
    result = EquilibriumResultND(
        x_left=xl, x_right=xr, residual=res, jacobian=jacobian_nd(s, xl, xr),
        boundary_flags=flags, iterations=its,
        utilities=(utility_nd(s, "left", xl, xr), utility_nd(s, "right", xl, xr)),
    )
    interior_res = np.where(np.array(flags[0] + flags[1]) == INTERIOR, res, 0.0)
    if np.linalg.norm(interior_res) > RESIDUAL_TOL:
        raise NoConvergence(f"gradient residual {np.linalg.norm(interior_res):.3g} above tolerance")
    if certify_result:
        result.slices = slice_scan(s, xl, xr)
    return result


@dataclass(frozen=True)
class SensitivityReportND:
    alpha: float
    base: np.ndarray
    rhs: np.ndarray
    full: np.ndarray
    block_only: np.ndarray
    diagonal: np.ndarray
    elasticities: np.ndarray
    cross_bound: float
    oracle: np.ndarray | None = None

    @property
    def cross_gap(self) -> float:
        return float(np.linalg.norm(self.full - self.block_only))


def _safe_solve(m: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    if np.linalg.cond(m) > 1e12:
        raise SingularBlock(f"{what} is numerically singular (cond {np.linalg.cond(m):.3g})")
    return np.linalg.solve(m, b)


def perturb_feasibility(s: ScenarioND, r: EquilibriumResultND, alpha: float,
                        oracle: bool = True) -> SensitivityReportND:
    """Linear response to scaling the feasibility cost to ``(1 + alpha) Phi``.

    Three predictions: the full coupled solve, one ignoring the cross blocks,
    and one keeping only the diagonal of each own block.
    """
    if not r.interior:
        raise BoundaryEquilibrium(f"equilibrium is not interior: {r.boundary_flags}")
    n = s.dim
    grad = s.phi_grad()
    rhs = alpha * np.concatenate([grad, grad])
    jac = r.jacobian
    full = _safe_solve(jac, rhs, "equilibrium Jacobian")
    blocks = r.blocks
    free = np.concatenate([_safe_solve(blocks["left-left"], rhs[:n], "left block"),
                           _safe_solve(blocks["right-right"], rhs[n:], "right block")])
    diag = rhs / np.diag(jac)
    cross = jac.copy()
    cross[:n, :n] = 0.0
    cross[n:, n:] = 0.0
    bound = float(np.linalg.norm(np.linalg.solve(jac, cross), 2) * np.linalg.norm(free))
    x = r.stacked
    if alpha == 0.0:
        elast = np.zeros(2 * n)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            elast = np.where(np.abs(x) > 1e-6, full / alpha / x, np.nan)
    resolved = None
    if oracle:
        new = solve_nash_nd(s.with_phi_scale(1.0 + alpha), start=(r.x_left, r.x_right),
                            check_unique=False, certify_result=False)
        resolved = new.stacked - x
    return SensitivityReportND(float(alpha), x, rhs, full, free, diag, elast, bound, resolved)


@dataclass(frozen=True)
class EquilibriumPathND:
    grid: tuple[float, ...]
    results: tuple[EquilibriumResultND, ...]

    def trajectory(self, side: str) -> np.ndarray:
        return np.array([getattr(r, f"x_{side}") for r in self.results])

    def conditions(self) -> np.ndarray:
        """Per grid point: condition numbers of the two own blocks and of the full Jacobian."""
        return np.array([[np.linalg.cond(r.blocks["left-left"]), np.linalg.cond(r.blocks["right-right"]),
                          np.linalg.cond(r.jacobian)] for r in self.results])


def sweep_phi_scale(s: ScenarioND, grid: Sequence[float], step_bound: float = 0.2,
                    check_unique: bool = False) -> EquilibriumPathND:
    """Continuation in the feasibility scale; grid values multiply the scenario's own scale."""
    grid = tuple(float(v) for v in grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("phi-scale grid must be ascending")
    results = []
    prev = None
    for i, a in enumerate(grid):
        try:
            r = solve_nash_nd(s.with_phi_scale(a), start=prev, check_unique=check_unique or i == 0)
        except (IdeoNashError, ValueError) as exc:
            raise PathBreak(f"solve failed at grid index {i} ({a:g}): {exc}", index=i) from exc
        if results:
            jump = float(np.max(np.abs(r.stacked - results[-1].stacked)))
            if jump > step_bound:
                raise PathBreak(f"equilibrium jumped by {jump:.3g} at grid index {i}", index=i)
        if r.slices is not None and not r.slices.certified:
            raise PathBreak(f"slice scan found several maxima at grid index {i}", index=i)
        results.append(r)
        prev = (r.x_left, r.x_right)
    return EquilibriumPathND(grid, tuple(results))
