"""Closed catalog of the model ingredients: voter densities, the voting-cost CDF,
the motivation polynomial, deviation costs and the linear feasibility cost.

Every density family exposes an unnormalised ``raw`` shape plus its analytic
slope; :func:`normalize_pdf` integrates the shape numerically and records the
normaliser.  All objects are frozen dataclasses and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import ClassVar, Sequence, Union

import numpy as np

from . import quadrature
from .errors import (BadLambda, DimensionMismatch, NegativeDensity, NotNormalized,
                     OutOfSupport, ValidationError, ZeroMass)

NEGATIVE_TOL = 1e-12
SUPPORT_TOL = 1e-12


def _tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(values))


class _Pdf1D:
    """Shared evaluation logic; subclasses provide ``raw``, ``raw_slope`` and ``breakpoints``."""

    normalizer: float | None

    def _norm(self) -> float:
        if self.normalizer is None:
            raise NotNormalized(f"{type(self).__name__} must pass through normalize_pdf first")
        return self.normalizer

    def value(self, x):
        """Normalised density without clipping; smooth continuation used by the quadratures."""
        return self.raw(np.asarray(x, dtype=float)) / self._norm()

    def density(self, x):
        return np.maximum(self.value(x), 0.0)

    def slope(self, x):
        return self.raw_slope(np.asarray(x, dtype=float)) / self._norm()

    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class GaussianBumps(_Pdf1D):
    """``sum_i w_i exp(-(x - mu_i)^2 / (2 sigma_i^2)) - offset`` on [-1, 1].

    The offset shifts the curve down so it can vanish at the support edge,
    e.g. ``exp(-x^2/0.5) - exp(-2)`` for the usual bell.
    """

    weights: tuple[float, ...]
    means: tuple[float, ...]
    sigmas: tuple[float, ...]
    offset: float = 0.0
    normalizer: float | None = None
    kind: ClassVar[str] = "gaussian"

    def __post_init__(self):
        for name in ("weights", "means", "sigmas"):
            object.__setattr__(self, name, _tuple(getattr(self, name)))
        if not len(self.weights) == len(self.means) == len(self.sigmas):
            raise ValidationError("weights, means and sigmas must have equal length")
        if min(self.sigmas) <= 0:
            raise ValidationError("sigmas must be positive")

    def _terms(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        mu = np.asarray(self.means)
        sig = np.asarray(self.sigmas)
        return np.asarray(self.weights) * np.exp(-((x - mu) ** 2) / (2 * sig**2)), x, mu, sig

    def raw(self, x):
        terms, *_ = self._terms(x)
        return terms.sum(axis=-1) - self.offset

    def raw_slope(self, x):
        terms, xx, mu, sig = self._terms(x)
        return (terms * (-(xx - mu) / sig**2)).sum(axis=-1)


@dataclass(frozen=True)
class Tabulated(_Pdf1D):
    """Piecewise-linear density through ``(grid, values)``."""

    grid: tuple[float, ...]
    values: tuple[float, ...]
    normalizer: float | None = None
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "grid", _tuple(self.grid))
        object.__setattr__(self, "values", _tuple(self.values))
        if len(self.grid) != len(self.values) or len(self.grid) < 2:
            raise ValidationError("tabulated pdf needs matching grid/values of length >= 2")
        if np.any(np.diff(self.grid) <= 0):
            raise ValidationError("tabulated grid must be strictly increasing")

    def raw(self, x):
        return np.interp(x, self.grid, self.values)

    def raw_slope(self, x):
        g = np.asarray(self.grid)
        slopes = np.diff(self.values) / np.diff(g)
        idx = np.clip(np.searchsorted(g, x, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    def breakpoints(self):
        return tuple(t for t in self.grid if -1.0 < t < 1.0)


@dataclass(frozen=True)
class Mixture(_Pdf1D):
    """Weighted sum of normalised densities.  Weights sum to one; negative weights
    are allowed so that ``g + gamma * (h1 - h2)`` is representable."""

    components: tuple
    weights: tuple[float, ...]
    normalizer: float | None = None
    kind: ClassVar[str] = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", _tuple(self.weights))
        if len(self.components) != len(self.weights) or not self.components:
            raise ValidationError("mixture needs one weight per component")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValidationError(f"mixture weights sum to {sum(self.weights)!r}, expected 1")

    def raw(self, x):
        return sum(w * c.value(x) for w, c in zip(self.weights, self.components))

    def raw_slope(self, x):
        return sum(w * c.slope(x) for w, c in zip(self.weights, self.components))

    def breakpoints(self):
        return tuple(sorted({t for c in self.components for t in c.breakpoints()}))


Pdf1D = Union[GaussianBumps, Tabulated, Mixture]


def normalize_pdf(spec: Pdf1D, grid_points: int = 2001) -> Pdf1D:
    """Integrate the raw shape over [-1, 1] and return a copy carrying the normaliser."""
    grid = np.union1d(np.linspace(-1.0, 1.0, grid_points), spec.breakpoints())
    raw = spec.raw(grid)
    worst = float(raw.min())
    if worst < -NEGATIVE_TOL:
        at = float(grid[int(np.argmin(raw))])
        raise NegativeDensity(f"raw density {worst:.3g} < 0 at x={at:.6g}")
    mass = quadrature.integrate(spec.raw, -1.0, 1.0, spec.breakpoints(), tol=1e-14)
    if mass < 1e-12:
        raise ZeroMass(f"raw density integrates to {mass:.3g}")
    return replace(spec, normalizer=mass)


def _check_support(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + SUPPORT_TOL):
        raise OutOfSupport(f"ideology outside [-1, 1]: {x[np.abs(x) > 1.0].ravel()[:3]}")
    return x


def eval_pdf(spec: Pdf1D, x):
    return spec.density(_check_support(x))


def mix_pdfs(a: Pdf1D, b: Pdf1D, lam: float) -> Pdf1D:
    """``(1 - lam) a + lam b``; the endpoints return the inputs themselves."""
    if not 0.0 <= lam <= 1.0:
        raise BadLambda(f"lambda must lie in [0, 1], got {lam}")
    a._norm(), b._norm()
    if lam == 0.0:
        return a
    if lam == 1.0:
        return b
    mixed = Mixture((a, b), (1.0 - lam, lam))
    return normalize_pdf(mixed)


def combine_pdfs(components: Sequence[Pdf1D], weights: Sequence[float]) -> Mixture:
    """Signed combination of normalised densities, normaliser fixed at exactly one.

    Used for perturbed densities ``g + gamma * h`` which may dip below zero at the
    edges for large ``gamma``; no positivity check is made.
    """
    return Mixture(tuple(components), tuple(weights), normalizer=1.0)


@dataclass(frozen=True)
class ProductPdf:
    """Joint density on [-1, 1]^n built from independent per-axis factors."""

    factors: tuple
    kind: ClassVar[str] = "product"

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        for f in self.factors:
            f._norm()

    @property
    def dim(self) -> int:
        return len(self.factors)

    def value(self, pts):
        pts = np.atleast_2d(pts)
        out = np.ones(pts.shape[0])
        for j, f in enumerate(self.factors):
            out = out * f.value(pts[:, j])
        return out

    def density(self, pts):
        return np.maximum(self.value(pts), 0.0)

    def axis_breakpoints(self):
        return [f.breakpoints() for f in self.factors]


@dataclass(frozen=True)
class GridPdf:
    """Joint density tabulated on a rectangular grid, multilinear in between."""

    axes: tuple
    values: tuple
    normalizer: float | None = None
    kind: ClassVar[str] = "grid"

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(_tuple(a) for a in self.axes))
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != tuple(len(a) for a in self.axes):
            raise ValidationError("grid values shape must match axes lengths")
        if np.any(arr < -NEGATIVE_TOL):
            raise NegativeDensity("tabulated joint density has negative entries")
        object.__setattr__(self, "values", _nested(arr))
        if self.normalizer is None:
            pts, wts = quadrature.box_rule([-1.0] * self.dim, [1.0] * self.dim, order=8,
                                           breaks=self.axis_breakpoints())
            mass = float(np.dot(wts, self._interp(pts)))
            if mass < 1e-12:
                raise ZeroMass("tabulated joint density has no mass")
            object.__setattr__(self, "normalizer", mass)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def _interp(self, pts):
        from scipy.interpolate import RegularGridInterpolator
        f = RegularGridInterpolator(self.axes, np.asarray(self.values), bounds_error=False,
                                    fill_value=None)
        return f(np.atleast_2d(pts))

    def value(self, pts):
        return self._interp(pts) / self.normalizer

    def density(self, pts):
        return np.maximum(self.value(pts), 0.0)

    def axis_breakpoints(self):
        return [tuple(t for t in a if -1.0 < t < 1.0) for a in self.axes]


def _nested(arr: np.ndarray):
    if arr.ndim == 1:
        return tuple(float(v) for v in arr)
    return tuple(_nested(a) for a in arr)


@dataclass(frozen=True)
class CostCdf:
    """CDF of the random voting cost, ``clip(slope * v + intercept, 0, 1)``."""

    slope: float
    intercept: float = 0.0
    kind: str = "affine"

    def __post_init__(self):
        if self.kind not in ("affine", "identity"):
            raise ValidationError(f"unknown cost CDF kind {self.kind!r}")
        if self.kind == "identity" and (self.slope != 1.0 or self.intercept != 0.0):
            raise ValidationError("identity cost CDF has slope 1 and intercept 0")
        if self.slope < 0:
            raise ValidationError("cost CDF must be non-decreasing (slope >= 0)")

    def __call__(self, v):
        return np.clip(self.slope * np.asarray(v, dtype=float) + self.intercept, 0.0, 1.0)

    def derivative(self, v):
        lin = self.slope * np.asarray(v, dtype=float) + self.intercept
        return np.where((lin > 0.0) & (lin < 1.0), self.slope, 0.0)

    def kinks(self) -> tuple[float, ...]:
        """Motivation levels where the clamp switches on."""
        if self.slope == 0.0:
            return ()
        return (-self.intercept / self.slope, (1.0 - self.intercept) / self.slope)


def eval_cost_cdf(spec: CostCdf, v):
    return spec(v)


@dataclass(frozen=True)
class Motivation:
    """Polynomial motivation ``m(x) = sum_i c_i x^i`` (ascending coefficients)."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _tuple(self.coefficients))

    @property
    def _poly(self):
        return np.polynomial.Polynomial(self.coefficients)

    def __call__(self, x):
        return self._poly(np.asarray(x, dtype=float))

    def derivative(self, x):
        return self._poly.deriv()(np.asarray(x, dtype=float))

    def curvature(self, x):
        return self._poly.deriv(2)(np.asarray(x, dtype=float))

    def is_convex(self, points: int = 2001) -> bool:
        return bool(np.all(self.curvature(np.linspace(-1, 1, points)) >= -1e-12))

    def crossings(self, levels) -> tuple[float, ...]:
        """Ideologies in (-1, 1) where ``m`` equals one of ``levels``."""
        out = set()
        for v in levels:
            shifted = self._poly - v
            if shifted.degree() < 1:
                continue
            for r in shifted.roots():
                if abs(r.imag) < 1e-12 and -1.0 < r.real < 1.0:
                    out.add(float(r.real))
        return tuple(sorted(out))


@dataclass(frozen=True)
class QuadraticMotivation:
    """Separable quadratic motivation over n coordinates:
    ``m(x) = constant + sum_j quadratic_j x_j^2 + linear_j x_j``."""

    constant: float
    quadratic: tuple[float, ...]
    linear: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "quadratic", _tuple(self.quadratic))
        lin = (0.0,) * len(self.quadratic) if self.linear is None else _tuple(self.linear)
        if len(lin) != len(self.quadratic):
            raise DimensionMismatch("linear and quadratic coefficient counts differ")
        object.__setattr__(self, "linear", lin)

    @property
    def dim(self) -> int:
        return len(self.quadratic)

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        return self.constant + pts**2 @ np.asarray(self.quadratic) + pts @ np.asarray(self.linear)

    def is_convex(self) -> bool:
        return min(self.quadratic) >= 0.0


@dataclass(frozen=True)
class DeviationCost:
    """Quadratic deviation cost ``k * |x - ideal|^2`` (scalar or vector ideal)."""

    k: float
    ideal: Union[float, tuple[float, ...]]

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError("deviation coefficient must be >= 0")
        if np.ndim(self.ideal) > 0:
            object.__setattr__(self, "ideal", _tuple(self.ideal))
        else:
            object.__setattr__(self, "ideal", float(self.ideal))

    def value(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.ideal)
        return self.k * np.sum(d * d, axis=-1) if np.ndim(self.ideal) else self.k * d * d

    def gradient(self, x):
        return 2.0 * self.k * (np.asarray(x, dtype=float) - np.asarray(self.ideal))

    def curvature(self) -> float:
        return 2.0 * self.k

    def scaled(self, factor: float) -> "DeviationCost":
        return replace(self, k=self.k * factor)


def eval_deviation(spec: DeviationCost, x):
    """Return ``(value, first derivative, second derivative)``; for vector ideals the
    derivatives are the gradient and the Hessian ``2k I``."""
    if np.ndim(spec.ideal):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != len(spec.ideal):
            raise DimensionMismatch(f"expected {len(spec.ideal)} coordinates, got {x.shape[-1]}")
        return spec.value(x), spec.gradient(x), spec.curvature() * np.eye(len(spec.ideal))
    return spec.value(x), spec.gradient(x), spec.curvature()


@dataclass(frozen=True)
class Feasibility:
    """Linear feasibility cost ``scale * <gradient, x>``."""

    gradient: tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "gradient", _tuple(self.gradient))
        if self.scale < 0:
            raise ValidationError("feasibility scale must be non-negative")

    @property
    def dim(self) -> int:
        return len(self.gradient)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates, got {x.shape[-1]}")
        return x

    def value(self, x):
        return self.scale * (self._check(x) @ np.asarray(self.gradient))

    def grad(self, x=None):
        if x is not None:
            self._check(x)
        return self.scale * np.asarray(self.gradient)

    def rescaled(self, factor: float) -> "Feasibility":
        return replace(self, scale=self.scale * factor)


def eval_feasibility(spec: Feasibility, x):
    return float(spec.value(x)), spec.grad(x)
