"""One-dimensional party utilities: turnout-weighted vote shares minus deviation costs.

Voters at ``x`` back the nearer party, and turn out with probability
``F_c(m(x))``, so with ``x_left <= x_right`` the left party collects the
turnout mass below the midpoint and the right party the mass above it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import quadrature
from .errors import ValidationError
from .functions import CostCdf, DeviationCost, Motivation, Pdf1D, _check_support


@dataclass(frozen=True)
class Scenario1D:
    pdf: Pdf1D
    cost: CostCdf
    motivation: Motivation
    left: DeviationCost
    right: DeviationCost
    nodes: int = 64
    tolerance: float = 1e-10

    def __post_init__(self):
        self.pdf._norm()
        if np.ndim(self.left.ideal) or np.ndim(self.right.ideal):
            raise ValidationError("one-dimensional scenario needs scalar ideal points")
        if not -1.0 <= self.left.ideal <= self.right.ideal <= 1.0:
            raise ValidationError("ideal points must satisfy -1 <= ideal_left <= ideal_right <= 1")
        if self.nodes < 2 or self.tolerance <= 0:
            raise ValidationError("quadrature order must be >= 2 and tolerance positive")

    @cached_property
    def breakpoints(self) -> tuple[float, ...]:
        """Kinks of the turnout density: tabulation knots and cost-CDF clamp switches."""
        kinks = set(self.pdf.breakpoints())
        kinks.update(self.motivation.crossings(self.cost.kinks()))
        return tuple(sorted(kinks))

    @cached_property
    def total_turnout(self) -> float:
        return quadrature.integrate(self.turnout, -1.0, 1.0, self.breakpoints,
                                    self.nodes, self.tolerance)

    def turnout(self, x):
        """``g(x) F_c(m(x))`` without the support check (vectorised)."""
        return self.pdf.value(x) * self.cost(self.motivation(x))

    def turnout_slope(self, x):
        m = self.motivation(x)
        return (self.pdf.slope(x) * self.cost(m)
                + self.pdf.value(x) * self.cost.derivative(m) * self.motivation.derivative(x))

    def with_pdf(self, pdf: Pdf1D) -> "Scenario1D":
        return replace(self, pdf=pdf)

    def mirrored(self) -> "Scenario1D":
        """Reflect ``x -> -x``; only meaningful for even pdf and motivation, used by symmetry checks."""
        return replace(self, left=DeviationCost(self.right.k, -self.right.ideal),
                       right=DeviationCost(self.left.k, -self.left.ideal))


class StrategyPair(NamedTuple):
    x_left: float
    x_right: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.x_left + self.x_right)


def _pair(p) -> StrategyPair:
    p = StrategyPair(float(p[0]), float(p[1]))
    _check_support(np.array(p))
    return p


def turnout_density(s: Scenario1D, x):
    x = _check_support(x)
    return np.maximum(s.turnout(x), 0.0)


def share_below(s: Scenario1D, upper: float) -> float:
    """Turnout mass on ``[-1, upper]``; inverted bounds give a negative value."""
    return quadrature.integrate(s.turnout, -1.0, upper, s.breakpoints, s.nodes, s.tolerance)


def utility_left(s: Scenario1D, p) -> float:
    p = _pair(p)
    return share_below(s, p.midpoint) - float(s.left.value(p.x_left))


def utility_right(s: Scenario1D, p) -> float:
    p = _pair(p)
    mass = quadrature.integrate(s.turnout, p.midpoint, 1.0, s.breakpoints, s.nodes, s.tolerance)
    return mass - float(s.right.value(p.x_right))


def foc(s: Scenario1D, p) -> np.ndarray:
    """Own-strategy derivatives ``(dU_left/dx_left, dU_right/dx_right)``; analytic, no quadrature."""
    p = _pair(p)
    half = 0.5 * float(s.turnout(p.midpoint))
    return np.array([half - float(s.left.gradient(p.x_left)),
                     -half - float(s.right.gradient(p.x_right))])


def opponent_derivatives(s: Scenario1D, p) -> np.ndarray:
    """``(dU_left/dx_right, dU_right/dx_left)``: the first is >= 0, the second its negative."""
    half = 0.5 * float(s.turnout(_pair(p).midpoint))
    return np.array([half, -half])


def cross_derivative(s: Scenario1D, p) -> float:
    """The mixed partial ``d2U_left/dx_left dx_right``, which equals ``-d2U_right/dx_left dx_right``."""
    return 0.25 * float(s.turnout_slope(_pair(p).midpoint))


def second_partials(s: Scenario1D, p) -> np.ndarray:
    """Jacobian of :func:`foc` with respect to ``(x_left, x_right)``."""
    cross = cross_derivative(s, p)
    return np.array([[cross - s.left.curvature(), cross],
                     [-cross, -cross - s.right.curvature()]])
