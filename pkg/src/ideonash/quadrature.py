"""Composite Gauss-Legendre rules on [-1, 1] and on polytopes of the cube [-1, 1]^n.

Every rule returns ``(points, weights)`` so callers evaluate their integrand
once, vectorised.  Breakpoints (kinks of the integrand) are honoured by
splitting panels there, which keeps the rules spectrally accurate for the
piecewise-smooth densities used throughout the package.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Callable, Iterable

import numpy as np

from .errors import QuadratureFailure

_TINY = 1e-14


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _edges(a: float, b: float, breaks: Iterable[float]) -> np.ndarray:
    lo, hi = min(a, b), max(a, b)
    inner = [t for t in breaks if lo < t < hi]
    return np.unique(np.concatenate(([lo, hi], inner)))


def panel_rule(a: float, b: float, breaks: Iterable[float] = (), order: int = 64,
               subdivisions: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule on [a, b]; panels split at ``breaks`` and then bisected evenly.

    An inverted interval (b < a) yields negated weights, so the rule integrates
    with orientation just like the integral sign convention.
    """
    edges = _edges(a, b, breaks)
    if edges.size < 2 or edges[-1] - edges[0] == 0.0:
        return np.zeros(0), np.zeros(0)
    fine = np.concatenate([
        np.linspace(lo, hi, subdivisions + 1)[:-1] for lo, hi in zip(edges[:-1], edges[1:])
    ] + [edges[-1:]])
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(fine)
    mid = 0.5 * (fine[:-1] + fine[1:])
    pts = (mid[:, None] + half[:, None] * x).ravel()
    wts = (half[:, None] * w).ravel()
    if b < a:
        wts = -wts
    return pts, wts


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              breaks: Iterable[float] = (), order: int = 64, tol: float = 1e-10,
              max_subdivisions: int = 64) -> float:
    """Integrate ``f`` over [a, b], doubling the panel count until two levels agree to ``tol``."""
    breaks = tuple(breaks)
    subdivisions = 1
    pts, wts = panel_rule(a, b, breaks, order, subdivisions)
    if pts.size == 0:
        return 0.0
    prev = float(np.dot(wts, f(pts)))
    while subdivisions < max_subdivisions:
        subdivisions *= 2
        pts, wts = panel_rule(a, b, breaks, order, subdivisions)
        cur = float(np.dot(wts, f(pts)))
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise QuadratureFailure(
        f"no agreement to {tol:g} on [{a}, {b}] after {max_subdivisions} subdivisions")


def cumulative(f: Callable[[np.ndarray], np.ndarray], uppers: np.ndarray,
               breaks: Iterable[float] = (), start: float = -1.0, order: int = 10) -> np.ndarray:
    """Return ``int_start^u f`` for every ``u`` in ``uppers`` (any order, any shape)."""
    uppers = np.asarray(uppers, dtype=float)
    flat = uppers.ravel()
    lo, hi = min(start, flat.min(initial=start)), max(start, flat.max(initial=start))
    knots = np.unique(np.concatenate(([start], flat, [t for t in breaks if lo < t < hi])))
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(knots)
    mid = 0.5 * (knots[:-1] + knots[1:])
    vals = f((mid[:, None] + half[:, None] * x).ravel()).reshape(-1, order)
    running = np.concatenate(([0.0], np.cumsum(half * (vals @ w))))
    out = running[np.searchsorted(knots, flat)] - running[np.searchsorted(knots, start)]
    return out.reshape(uppers.shape)


def box_rule(lows: Iterable[float], highs: Iterable[float], order: int = 24,
             breaks: Iterable[Iterable[float]] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on an axis-aligned box (zero-width axes give an empty rule)."""
    lows = np.atleast_1d(np.asarray(lows, dtype=float))
    highs = np.atleast_1d(np.asarray(highs, dtype=float))
    axes_breaks = list(breaks) if breaks is not None else [()] * lows.size
    axes = [panel_rule(lo, hi, br, order) for lo, hi, br in zip(lows, highs, axes_breaks)]
    if any(p.size == 0 for p, _ in axes):
        return np.zeros((0, lows.size)), np.zeros(0)
    grids = np.meshgrid(*[p for p, _ in axes], indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return pts, wts


def _corner_sums(a: np.ndarray) -> np.ndarray:
    if a.size == 0:
        return np.zeros(1)
    signs = np.array(list(product((-1.0, 1.0), repeat=a.size)))
    return np.unique(signs @ a)


def _last_interval(ad: float, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if abs(ad) <= _TINY:
        inside = (lo <= 0.0) & (hi >= 0.0)
        left = np.where(inside, -1.0, 0.0)
        right = np.where(inside, 1.0, 0.0)
        return left, right
    with np.errstate(invalid="ignore"):
        u, v = lo / ad, hi / ad
    left = np.clip(np.minimum(u, v), -1.0, 1.0)
    right = np.clip(np.maximum(u, v), -1.0, 1.0)
    return left, np.maximum(right, left)


def slab_rule(normal: Iterable[float], lo: float = -np.inf, hi: float = np.inf,
              order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ``{x in [-1,1]^n : lo <= normal . x <= hi}`` by iterated integration.

    Coordinates are integrated outermost first.  For each outer coordinate the
    inner region's measure is only piecewise smooth, with kinks where the
    bounding hyperplanes pass through a corner of the remaining sub-cube; the
    panels are split exactly there.
    """
    a = np.asarray(list(normal), dtype=float)
    n = a.size
    x, w = gauss_legendre(order)
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    lo_r = np.array([float(lo)])
    hi_r = np.array([float(hi)])
    for d in range(n):
        ad = a[d]
        if d == n - 1:
            left, right = _last_interval(ad, lo_r, hi_r)
            edges = np.stack([left, right], axis=1)
        else:
            cols = [np.full((lo_r.size, 1), -1.0), np.full((lo_r.size, 1), 1.0)]
            if abs(ad) > _TINY:
                corners = _corner_sums(a[d + 1:])
                for bound in (lo_r, hi_r):
                    if np.all(np.isfinite(bound)):
                        cols.append((bound[:, None] - corners[None, :]) / ad)
            edges = np.sort(np.clip(np.concatenate(cols, axis=1), -1.0, 1.0), axis=1)
        half = 0.5 * np.diff(edges, axis=1)
        mid = 0.5 * (edges[:, :-1] + edges[:, 1:])
        nodes = mid[..., None] + half[..., None] * x
        nw = wts[:, None, None] * half[..., None] * w
        keep = nw.ravel() != 0.0
        reps = nodes.shape[1] * nodes.shape[2]
        pts = np.concatenate([np.repeat(pts, reps, axis=0), nodes.reshape(-1, 1)], axis=1)[keep]
        new_lo = np.repeat(lo_r, reps) - ad * nodes.ravel()
        new_hi = np.repeat(hi_r, reps) - ad * nodes.ravel()
        wts = nw.ravel()[keep]
        lo_r, hi_r = new_lo[keep], new_hi[keep]
    return pts, wts


def plane_rule(normal: Iterable[float], offset: float, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Surface rule on ``{x in [-1,1]^n : normal . x = offset}``.

    Weights carry the surface element, so ``sum(w * f(p))`` approximates the
    surface integral.  In one dimension the "surface" is a point with unit mass.
    """
    a = np.asarray(list(normal), dtype=float)
    n = a.size
    k = int(np.argmax(np.abs(a)))
    ak = a[k]
    if abs(ak) <= _TINY:
        return np.zeros((0, n)), np.zeros(0)
    if n == 1:
        p = offset / ak
        if -1.0 <= p <= 1.0:
            return np.array([[p]]), np.ones(1)
        return np.zeros((0, 1)), np.zeros(0)
    rest = np.delete(a, k)
    ys, wy = slab_rule(rest, offset - abs(ak), offset + abs(ak), order)
    xk = (offset - ys @ rest) / ak
    pts = np.insert(ys, k, xk, axis=1)
    return pts, wy * (np.linalg.norm(a) / abs(ak))
