"""Bayesian equilibrium when the voter density is one of finitely many candidates.

Nature draws the true density from a common prior; each party sees a noisy
signal of it through its own confusion matrix and picks a signal-contingent
position.  Signals are independent given the true type.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (NoConvergence, NonUnique, RadiusTooSmall, ValidationError, ZeroEvidence)
from .functions import Pdf1D, Tabulated, normalize_pdf
from .model1d import Scenario1D
from .solver1d import best_response_terms, expected_utility

log = logging.getLogger(__name__)

GRID = np.linspace(-1.0, 1.0, 2001)
METRICS = ("KL", "JS", "W1")
FILL = 0.9


def _trapz(y: np.ndarray) -> float:
    return float(np.trapezoid(y, GRID)) if hasattr(np, "trapezoid") else float(np.trapz(y, GRID))


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / q), 0.0)
    return _trapz(terms)


def divergence(p: Pdf1D, q: Pdf1D, metric: str = "JS") -> float:
    """Divergence between two densities evaluated on the 2001-point grid."""
    a = np.maximum(p.value(GRID), 0.0)
    b = np.maximum(q.value(GRID), 0.0)
    return _grid_divergence(a, b, metric)


def _grid_divergence(a: np.ndarray, b: np.ndarray, metric: str) -> float:
    if metric == "KL":
        return _kl(a, b)
    if metric == "JS":
        m = 0.5 * (a + b)
        return 0.5 * _kl(a, m) + 0.5 * _kl(b, m)
    if metric == "W1":
        step = np.diff(GRID)
        ca = np.concatenate(([0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * step)))
        cb = np.concatenate(([0.0], np.cumsum(0.5 * (b[1:] + b[:-1]) * step)))
        return _trapz(np.abs(ca - cb))
    raise ValidationError(f"unknown divergence {metric!r}; choose from {METRICS}")


def confusion(k: int, noise: float) -> np.ndarray:
    """Symmetric signal matrix: correct with probability ``1 - noise``, otherwise uniform over the rest."""
    if not 0.0 <= noise < 1.0:
        raise ValidationError(f"noise must lie in [0, 1), got {noise}")
    if k == 1:
        return np.ones((1, 1))
    out = np.full((k, k), noise / (k - 1))
    np.fill_diagonal(out, 1.0 - noise)
    return out


@dataclass(frozen=True)
class TypeModel:
    candidates: tuple
    prior: np.ndarray
    likelihood_left: np.ndarray
    likelihood_right: np.ndarray
    metric: str = "JS"
    radius: tuple[float, float] | None = None
    divergences: tuple[float, ...] = field(default=())

    def __post_init__(self):
        k = len(self.candidates)
        prior = np.asarray(self.prior, dtype=float)
        object.__setattr__(self, "prior", prior)
        if prior.shape != (k,) or np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-12:
            raise ValidationError("prior must be a probability vector with one entry per candidate")
        for name in ("likelihood_left", "likelihood_right"):
            m = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, m)
            if m.shape[0] != k or np.any(m < 0) or np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-12):
                raise ValidationError(f"{name} rows must be probability vectors, one per candidate")
        if self.metric not in METRICS:
            raise ValidationError(f"unknown divergence {self.metric!r}")
        divs = tuple(divergence(c, self.candidates[0], self.metric) for c in self.candidates)
        object.__setattr__(self, "divergences", divs)
        if self.radius is not None:
            bound = min(self.radius)
            if bound <= 0:
                raise ValidationError("radius must be positive")
            worst = max(divs)
            if worst >= bound:
                raise ValidationError(f"candidate divergence {worst:.4g} is not below radius {bound:.4g}")

    @property
    def size(self) -> int:
        return len(self.candidates)

    def likelihood(self, party: str) -> np.ndarray:
        return self.likelihood_left if party == "left" else self.likelihood_right

    @classmethod
    def from_candidates(cls, candidates: Sequence[Pdf1D], prior=None, noise: float = 0.0,
                        noise_right: float | None = None, metric: str = "JS",
                        radius: float | tuple[float, float] | None = None) -> "TypeModel":
        k = len(candidates)
        prior = np.full(k, 1.0 / k) if prior is None else prior
        right = noise if noise_right is None else noise_right
        if radius is not None and np.ndim(radius) == 0:
            radius = (float(radius), float(radius))
        return cls(tuple(candidates), prior, confusion(k, noise), confusion(k, right), metric,
                   radius)


def _shape(rng: np.random.Generator, center: np.ndarray) -> np.ndarray:
    if rng.random() < 0.5:
        beta = rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 2.0)
        return center * np.exp(beta * GRID)
    delta = rng.uniform(0.1, 1.0)
    return center * (GRID**2 + delta)


def build_type_model(center: Pdf1D, metric: str = "JS", radius: float = 0.02, k: int = 3,
                     noise: float = 0.0, seed: int = 0, noise_right: float | None = None) -> TypeModel:
    """Centre plus ``k - 1`` tilted or spread copies, each mixed in just far enough that its
    divergence from the centre is 90% of ``radius``."""
    if k < 1:
        raise ValidationError("need at least one candidate")
    if radius <= 0:
        raise ValidationError("radius must be positive")
    base = np.maximum(center.value(GRID), 0.0)
    rng = np.random.default_rng(seed)
    cands = [center]
    for _ in range(k - 1):
        shape = _shape(rng, base)
        shape = shape / _trapz(shape)
        mixed = lambda w: (1.0 - w) * base + w * shape
        target = FILL * radius
        if _grid_divergence(mixed(1.0), base, metric) <= target:
            w = 1.0
        else:
            w = brentq(lambda w: _grid_divergence(mixed(w), base, metric) - target, 0.0, 1.0,
                       xtol=1e-14)
        if w < 1e-6:
            raise RadiusTooSmall(f"radius {radius:g} admits only the centre")
        cands.append(normalize_pdf(Tabulated(tuple(GRID), tuple(mixed(w)))))
    return TypeModel.from_candidates(cands, noise=noise, noise_right=noise_right, metric=metric,
                                     radius=radius)


def posterior(tm: TypeModel, party: str, signal: int) -> np.ndarray:
    lik = tm.likelihood(party)
    if not 0 <= signal < lik.shape[1]:
        raise ValidationError(f"signal index {signal} out of range")
    joint = tm.prior * lik[:, signal]
    total = joint.sum()
    if total <= 0.0:
        raise ZeroEvidence(f"signal {signal} has zero probability for the {party} party")
    return joint / total


def signal_probabilities(tm: TypeModel, party: str) -> np.ndarray:
    return tm.prior @ tm.likelihood(party)


@dataclass(frozen=True)
class BnePolicy:
    left: np.ndarray
    right: np.ndarray
    utilities_left: np.ndarray
    utilities_right: np.ndarray
    iterations: int
    max_deviation_gain: float
    active_left: np.ndarray
    active_right: np.ndarray
    ex_ante: tuple[float, float]


def _terms(tm: TypeModel, scenarios, party: str, signal: int, opp_policy: np.ndarray):
    post = posterior(tm, party, signal)
    other = tm.likelihood("right" if party == "left" else "left")
    return [(post[i] * other[i, k], scenarios[i], float(opp_policy[k]))
            for i in range(tm.size) for k in range(other.shape[1])
            if post[i] * other[i, k] > 0.0]


def _bounds(party: str, opp: np.ndarray, active: np.ndarray) -> tuple[float, float]:
    used = opp[active]
    if party == "left":
        return -1.0, float(used.min())
    return float(used.max()), 1.0


def _respond(tm, scenarios, party, policy_opp, active_own, active_opp, current):
    out = current.copy()
    lo, hi = _bounds(party, policy_opp, active_opp)
    for j in np.flatnonzero(active_own):
        out[j] = best_response_terms(_terms(tm, scenarios, party, j, policy_opp), party, lo, hi).x
    return out


def _iterate(tm, scenarios, start_left, start_right, act_l, act_r, max_iter, damping, tol):
    sl = np.array(start_left, dtype=float)
    sr = np.array(start_right, dtype=float)
    for it in range(1, max_iter + 1):
        nl = sl + damping * (_respond(tm, scenarios, "left", sr, act_l, act_r, sl) - sl)
        nr = sr + damping * (_respond(tm, scenarios, "right", nl, act_r, act_l, sr) - sr)
        change = max(np.max(np.abs(nl - sl)), np.max(np.abs(nr - sr)))
        sl, sr = nl, nr
        if change < tol:
            return sl, sr, it
    raise NoConvergence(f"policy iteration did not settle in {max_iter} rounds")


def _expected(tm, scenarios, party, signal, opp, xs) -> np.ndarray:
    return expected_utility(_terms(tm, scenarios, party, signal, opp), party, xs)


def solve_bne(tm: TypeModel, base: Scenario1D, *, max_iter: int = 1000, damping: float = 0.5,
              tol: float = 1e-10, check_unique: bool = True, deviation_points: int = 2001) -> BnePolicy:
    """Damped alternating best responses in signal-contingent policy space."""
    scenarios = [base.with_pdf(c) for c in tm.candidates]
    act_l = signal_probabilities(tm, "left") > 0.0
    act_r = signal_probabilities(tm, "right") > 0.0
    k_l, k_r = act_l.size, act_r.size
    il, ir = base.left.ideal, base.right.ideal
    sl, sr, its = _iterate(tm, scenarios, np.full(k_l, il), np.full(k_r, ir), act_l, act_r,
                           max_iter, damping, tol)
    if check_unique:
        ql, qr, _ = _iterate(tm, scenarios, np.full(k_l, 0.75 * il + 0.25 * ir),
                             np.full(k_r, 0.25 * il + 0.75 * ir), act_l, act_r, max_iter, damping, tol)
        gap = max(np.max(np.abs(ql - sl)), np.max(np.abs(qr - sr)))
        if gap > 1e-5:
            raise NonUnique(f"policy iteration starts disagree by {gap:.3g}",
                            candidates=[(sl, sr), (ql, qr)])
    ul = np.full(k_l, np.nan)
    ur = np.full(k_r, np.nan)
    gain = 0.0
    for party, policy, opp, act, act_o, util in (("left", sl, sr, act_l, act_r, ul),
                                                ("right", sr, sl, act_r, act_l, ur)):
        lo, hi = _bounds(party, opp, act_o)
        grid = np.linspace(lo, hi, deviation_points)
        for j in np.flatnonzero(act):
            vals = _expected(tm, scenarios, party, j, opp, np.append(grid, policy[j]))
            util[j] = vals[-1]
            gain = max(gain, float(vals[:-1].max() - vals[-1]))
    ex_ante = (float(np.nansum(signal_probabilities(tm, "left") * np.where(act_l, ul, 0.0))),
               float(np.nansum(signal_probabilities(tm, "right") * np.where(act_r, ur, 0.0))))
    log.debug("BNE after %d rounds, largest deviation gain %.3g", its, gain)
    return BnePolicy(sl, sr, ul, ur, its, gain, act_l, act_r, ex_ante)
