"""Random scenario generators and brute-force oracles shared by the test modules."""

import numpy as np

from ideonash import quadrature
from ideonash.functions import (CostCdf, DeviationCost, GaussianBumps, Motivation, ProductPdf,
                                QuadraticMotivation, normalize_pdf)
from ideonash.model1d import Scenario1D
from ideonash.multidim import ScenarioND


def bump(mean=0.0, sigma=0.5, offset=0.0):
    return normalize_pdf(GaussianBumps((1.0,), (mean,), (sigma,), offset))


def random_symmetric(rng):
    """Even density and motivation, mirrored ideals and equal cost coefficients."""
    if rng.random() < 0.5:
        pdf = bump(0.0, rng.uniform(0.3, 1.0))
    else:
        mu = rng.uniform(0.05, 0.25)
        sig = rng.uniform(0.35, 0.6)
        pdf = normalize_pdf(GaussianBumps((0.5, 0.5), (-mu, mu), (sig, sig)))
    a = rng.uniform(0.3, 0.9)
    k = rng.uniform(0.3, 2.0)
    return Scenario1D(pdf, CostCdf(rng.uniform(0.2, 1.0)),
                      Motivation((rng.uniform(0.3, 1.5), 0.0, rng.uniform(0.0, 1.0))),
                      DeviationCost(k, -a), DeviationCost(k, a))


def random_general(rng, k_low=0.2):
    pdf = bump(rng.uniform(-0.3, 0.3), rng.uniform(0.3, 1.0))
    motivation = Motivation((rng.uniform(0.3, 1.5), rng.uniform(-0.2, 0.2), rng.uniform(0.0, 1.0)))
    return Scenario1D(pdf, CostCdf(rng.uniform(0.2, 1.0), rng.uniform(0.0, 0.2)), motivation,
                      DeviationCost(rng.uniform(k_low, 2.0), rng.uniform(-0.95, -0.1)),
                      DeviationCost(rng.uniform(k_low, 2.0), rng.uniform(0.1, 0.95)))


def random_interior(rng, make=random_general, tries=50):
    """Draw scenarios until one has a strictly interior, non-touching equilibrium.

    Draws where both parties would rather sit on top of each other produce a
    continuum of contact equilibria; those are excluded.
    """
    from ideonash.solver1d import solve_nash
    for _ in range(tries):
        s = make(rng)
        r = solve_nash(s, check_unique=False, certify_result=False)
        if r.interior and r.x_right - r.x_left > 1e-3:
            return s
    raise RuntimeError("no interior scenario drawn")


def random_pair(rng, s=None):
    a, b = np.sort(rng.uniform(-0.95, 0.95, 2))
    return float(a), float(b)


def trapezoid_utilities(s, pair, points=4001):
    """Utilities by a plain trapezoid rule on a uniform grid (independent of the package quadrature)."""
    xl, xr = pair
    mid = 0.5 * (xl + xr)
    left_x = np.linspace(-1.0, mid, points)
    right_x = np.linspace(mid, 1.0, points)
    t = lambda x: s.pdf.value(x) * s.cost(s.motivation(x))
    ul = np.trapezoid(t(left_x), left_x) if hasattr(np, "trapezoid") else np.trapz(t(left_x), left_x)
    ur = np.trapezoid(t(right_x), right_x) if hasattr(np, "trapezoid") else np.trapz(t(right_x), right_x)
    return ul - float(s.left.value(xl)), ur - float(s.right.value(xr))


def grid_equilibrium(s, points=2001):
    """Mutual best responses on a uniform grid, by exhaustive search.

    Midpoints of grid pairs fall on the half-step grid, so every utility is a
    lookup into one cumulative integral.  Each party's response is restricted
    to not crossing the opponent.  Returns the grid pair closest to a fixed
    point of the discrete best-response maps.
    """
    xs = np.linspace(-1.0, 1.0, points)
    half = np.linspace(-1.0, 1.0, 2 * points - 1)
    cum = quadrature.cumulative(s.turnout, half, s.breakpoints)
    total = s.total_turnout
    i = np.arange(points)
    shares = cum[i[:, None] + i[None, :]]  # shares[a, b] = mass below (x_a + x_b) / 2
    ul = shares - s.left.value(xs)[:, None]
    ur = (total - shares) - s.right.value(xs)[None, :]
    crossing = i[:, None] > i[None, :]
    ul = np.where(crossing, -np.inf, ul)
    ur = np.where(crossing, -np.inf, ur)
    br_left = np.argmax(ul, axis=0)   # best left index for each right index
    br_right = np.argmax(ur, axis=1)  # best right index for each left index
    fixed = [(a, br_right[a]) for a in range(points) if br_left[br_right[a]] == a]
    if not fixed:
        # discrete maps may cycle between neighbours; fall back to the smallest two-step gap
        gaps = np.abs(br_left[br_right] - i)
        a = int(np.argmin(gaps))
        fixed = [(a, br_right[a])]
    return [(xs[a], xs[b]) for a, b in fixed]


def one_dim_pair(rng):
    """The same random scenario as a 1-D model and as an n = 1 instance of the vector model."""
    mu, sig = rng.uniform(-0.3, 0.3), rng.uniform(0.3, 1.0)
    pdf = bump(mu, sig)
    c, b, q = rng.uniform(0.3, 1.0), rng.uniform(-0.2, 0.2), rng.uniform(0.0, 1.0)
    slope = rng.uniform(0.1, 0.35)
    kl, kr = rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0)
    il, ir = rng.uniform(-0.9, -0.2), rng.uniform(0.2, 0.9)
    s1 = Scenario1D(pdf, CostCdf(slope), Motivation((c, b, q)), DeviationCost(kl, il),
                    DeviationCost(kr, ir))
    sn = ScenarioND(ProductPdf((pdf,)), CostCdf(slope), QuadraticMotivation(c, (q,), (b,)),
                    DeviationCost(kl, (il,)), DeviationCost(kr, (ir,)))
    return s1, sn
