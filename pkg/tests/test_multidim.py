from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate

from helpers import bump, one_dim_pair
from ideonash import presets
from ideonash.errors import (BoundaryEquilibrium, DimensionMismatch, OutOfSupport, PathBreak,
                             SingularBlock, ValidationError)
from ideonash.functions import (CostCdf, DeviationCost, Feasibility, GaussianBumps, Motivation,
                                ProductPdf, QuadraticMotivation, normalize_pdf)
from ideonash.model1d import Scenario1D, utility_left, utility_right
from ideonash.multidim import (EquilibriumResultND, ScenarioND, jacobian_nd, own_gradients,
                               perturb_feasibility, region_masses, slice_scan, solve_nash_nd,
                               sweep_phi_scale, utility_gradient, utility_nd)
from ideonash.solver1d import solve_nash


@pytest.fixture(scope="module")
def ex2d():
    return presets.ex2d()


@pytest.fixture(scope="module")
def ex2d_result(ex2d):
    return solve_nash_nd(ex2d)


def riemann_masses(s, xl, xr, points=401):
    """Midpoint-rule voter masses on a uniform grid, assigning each cell by distance."""
    edges = np.linspace(-1, 1, points + 1)
    c = 0.5 * (edges[1:] + edges[:-1])
    pts = np.array(np.meshgrid(c, c, indexing="ij")).reshape(2, -1).T
    t = s.turnout(pts) * (2.0 / points) ** 2
    gap = np.linalg.norm(pts - xr, axis=1) - np.linalg.norm(pts - xl, axis=1)
    share = np.where(np.abs(gap) < 1e-12, 0.5, (gap > 0).astype(float))  # cells on the bisector split evenly
    return (t * share).sum(), (t * (1 - share)).sum()


# --- utilities and gradients -----------------------------------------------

def test_bisector_masses_against_riemann(ex2d):
    for xl, xr in (((-0.5, -0.3), (0.4, 0.5)), ((0.2, -0.6), (-0.1, 0.7)), ((-0.9, 0.9), (0.9, -0.9))):
        xl, xr = np.array(xl), np.array(xr)
        got = region_masses(ex2d, xl, xr)
        want = riemann_masses(ex2d, xl, xr)
        assert got == pytest.approx(want, abs=1e-4)


def test_box_masses_against_dblquad():
    s = presets.ex2d(region="box")
    xl, xr = np.array([-0.5, -0.3]), np.array([0.4, 0.5])
    mid = 0.5 * (xl + xr)
    f = lambda y, x: float(s.turnout(np.array([[x, y]]))[0])
    left, _ = integrate.dblquad(f, -1, mid[0], -1, mid[1], epsabs=1e-12)
    right, _ = integrate.dblquad(f, mid[0], 1, mid[1], 1, epsabs=1e-12)
    assert region_masses(s, xl, xr) == pytest.approx((left, right), abs=1e-9)


def test_masses_partition_total(ex2d):
    left, right = region_masses(ex2d, np.array([-0.2, 0.1]), np.array([0.3, 0.2]))
    assert left + right == pytest.approx(ex2d.total_turnout, abs=1e-12)


def test_symmetric_pair_equal_utilities():
    axis = normalize_pdf(GaussianBumps((1.0,), (0.0,), (0.5,)))
    s = ScenarioND(ProductPdf((axis, axis)), CostCdf(1.0, kind="identity"),
                   QuadraticMotivation(0.5, (0.25, 0.25)), DeviationCost(1.0, (-0.5, -0.5)),
                   DeviationCost(1.0, (0.5, 0.5)))
    x = np.array([0.3, 0.2])
    assert utility_nd(s, "left", -x, x) == pytest.approx(utility_nd(s, "right", -x, x), abs=1e-12)


def test_n1_utilities_equal_1d():
    rng = np.random.default_rng(4)
    for _ in range(5):
        s1, sn = one_dim_pair(rng)
        xl, xr = np.sort(rng.uniform(-0.9, 0.9, 2))
        assert utility_nd(sn, "left", [xl], [xr]) == pytest.approx(utility_left(s1, (xl, xr)), abs=1e-9)
        assert utility_nd(sn, "right", [xl], [xr]) == pytest.approx(utility_right(s1, (xl, xr)), abs=1e-9)


@pytest.mark.parametrize("region", ["bisector", "box"])
def test_gradients_match_finite_differences(region):
    s = presets.ex2d(region=region)
    rng = np.random.default_rng(12)
    h = 1e-5
    for _ in range(10):
        xl = rng.uniform(-0.9, 0.0, 2)
        xr = rng.uniform(0.0, 0.9, 2)
        for side in ("left", "right"):
            g = utility_gradient(s, side, xl, xr)
            for who, x in ((0, xl), (1, xr)):
                for j in range(2):
                    e = np.zeros(2)
                    e[j] = h
                    args_hi = (x + e, xr) if who == 0 else (xl, x + e)
                    args_lo = (x - e, xr) if who == 0 else (xl, x - e)
                    fd = (utility_nd(s, side, *args_hi) - utility_nd(s, side, *args_lo)) / (2 * h)
                    assert g[who, j] == pytest.approx(fd, abs=1e-6)


def test_jacobian_matches_gradient_differences(ex2d, ex2d_result):
    r = ex2d_result
    j = jacobian_nd(ex2d, r.x_left, r.x_right, step=1e-4)
    np.testing.assert_allclose(j, r.jacobian, atol=1e-5)


def test_out_of_cube_rejected(ex2d):
    with pytest.raises(OutOfSupport):
        utility_nd(ex2d, "left", [1.2, 0.0], [0.1, 0.1])
    with pytest.raises(DimensionMismatch):
        utility_nd(ex2d, "left", [0.0], [0.1, 0.1])


# --- validation ------------------------------------------------------------

def test_validation(ex2d):
    with pytest.raises(ValidationError):
        replace(ex2d, region="diamond")
    with pytest.raises(DimensionMismatch):
        replace(ex2d, left=DeviationCost(1.0, (0.1, 0.2, 0.3)))
    with pytest.raises(DimensionMismatch):
        replace(ex2d, feasibility=Feasibility((0.1, 0.2, 0.3)))
    with pytest.raises(DimensionMismatch):
        replace(ex2d, motivation=QuadraticMotivation(0.5, (0.25,)))
    axis = bump()
    with pytest.raises(ValidationError):
        ScenarioND(ProductPdf((axis,) * 4), CostCdf(0.5), QuadraticMotivation(0.5, (0.1,) * 4),
                   DeviationCost(1.0, (0.0,) * 4), DeviationCost(1.0, (0.1,) * 4))


# --- equilibrium -----------------------------------------------------------

def test_example_solves(ex2d, ex2d_result):
    r = ex2d_result
    assert r.residual_norm < 1e-6
    assert r.interior and r.slices.certified
    assert np.all(r.x_left < 0) and np.all(r.x_right > 0)


def test_example_is_mutual_best_response_on_grid(ex2d, ex2d_result):
    r = ex2d_result
    axis = np.linspace(-1, 1, 61)
    grid = np.array(np.meshgrid(axis, axis, indexing="ij")).reshape(2, -1).T
    base_l, base_r = r.utilities
    best_l = max(utility_nd(ex2d, "left", x, r.x_right) for x in grid)
    best_r = max(utility_nd(ex2d, "right", r.x_left, x) for x in grid)
    assert best_l <= base_l + 1e-9
    assert best_r <= base_r + 1e-9


def test_n1_reduction_matches_1d_solver():
    rng = np.random.default_rng(31)
    for _ in range(5):
        s1, sn = one_dim_pair(rng)
        r1 = solve_nash(s1, check_unique=False, certify_result=False)
        if not r1.interior or r1.x_right - r1.x_left < 1e-3:
            continue
        rn = solve_nash_nd(sn, check_unique=False, certify_result=False)
        assert rn.x_left[0] == pytest.approx(r1.x_left, abs=1e-7)
        assert rn.x_right[0] == pytest.approx(r1.x_right, abs=1e-7)


def test_axis_aligned_ideals_reduce_to_marginal_problem():
    g1 = bump(0.1, 0.5)
    g2 = bump(0.0, 0.4)
    c, q1, q2 = 0.3, 0.3, 0.3
    sn = ScenarioND(ProductPdf((g1, g2)), CostCdf(1.0, kind="identity"),
                    QuadraticMotivation(c, (q1, q2)), DeviationCost(1.0, (-0.6, 0.0)),
                    DeviationCost(0.8, (0.5, 0.0)))
    second_moment, _ = integrate.quad(lambda y: y * y * float(g2.value(y)), -1, 1, epsabs=1e-14)
    s1 = Scenario1D(g1, CostCdf(1.0, kind="identity"), Motivation((c + q2 * second_moment, 0.0, q1)),
                    DeviationCost(1.0, -0.6), DeviationCost(0.8, 0.5))
    rn = solve_nash_nd(sn)
    r1 = solve_nash(s1)
    assert rn.x_left == pytest.approx([r1.x_left, 0.0], abs=1e-7)
    assert rn.x_right == pytest.approx([r1.x_right, 0.0], abs=1e-7)


def test_stiff_costs_pin_ideals(ex2d):
    s = replace(ex2d, left=DeviationCost(1e6, (-0.7, -0.5)), right=DeviationCost(1e6, (0.6, 0.6)))
    r = solve_nash_nd(s, check_unique=False, certify_result=False)
    assert r.x_left == pytest.approx([-0.7, -0.5], abs=1e-5)
    assert r.x_right == pytest.approx([0.6, 0.6], abs=1e-5)


def test_box_region_solves():
    s = presets.ex2d(region="box")
    r = solve_nash_nd(s)
    assert r.residual_norm < 1e-6 and r.slices.certified


def test_slice_scan_counts(ex2d, ex2d_result):
    rep = slice_scan(ex2d, ex2d_result.x_left, ex2d_result.x_right, points=51)
    assert rep.grid_points == 51 and rep.maxima == ((1, 1), (1, 1))


# --- feasibility perturbation ----------------------------------------------

def test_zero_alpha(ex2d, ex2d_result):
    rep = perturb_feasibility(ex2d, ex2d_result, 0.0, oracle=False)
    assert np.all(rep.full == 0) and np.all(rep.elasticities == 0)


def test_linear_response_against_resolve(ex2d, ex2d_result):
    rep = perturb_feasibility(ex2d, ex2d_result, 1e-2)
    np.testing.assert_allclose(rep.full, rep.oracle, rtol=2e-2, atol=1e-6)
    assert rep.cross_gap <= rep.cross_bound + 1e-15


def test_direction_of_response(ex2d, ex2d_result):
    rep = perturb_feasibility(ex2d, ex2d_result, 0.1, oracle=False)
    # gradient (+, -): cost grows with x_1 and falls with x_2
    for pred in (rep.full, rep.block_only, rep.diagonal):
        assert pred[0] < 0 and pred[2] < 0
        assert pred[1] > 0 and pred[3] > 0


def test_reversed_feasibility_flips(ex2d):
    flipped = replace(ex2d, feasibility=Feasibility((-0.1, 0.1)))
    r = solve_nash_nd(flipped)
    rep = perturb_feasibility(flipped, r, 0.1, oracle=False)
    assert rep.full[0] > 0 and rep.full[1] < 0


def test_boundary_result_refused(ex2d, ex2d_result):
    r = replace(ex2d_result, boundary_flags=(("lower-bound", "interior"), ("interior", "interior")))
    with pytest.raises(BoundaryEquilibrium):
        perturb_feasibility(ex2d, r, 0.1)


def test_singular_block(ex2d, ex2d_result):
    r = replace(ex2d_result, jacobian=np.zeros((4, 4)))
    with pytest.raises(SingularBlock):
        perturb_feasibility(ex2d, r, 0.1, oracle=False)


# --- feasibility sweep -----------------------------------------------------

def test_phi_sweep_without_feasibility_is_constant(ex2d, ex2d_result):
    s = replace(ex2d, feasibility=None)
    path = sweep_phi_scale(s, [0.5, 1.0, 2.0])
    base = path.results[0]
    for r in path.results:
        assert r.x_left == pytest.approx(base.x_left, abs=1e-10)


def test_phi_sweep_monotone(ex2d):
    path = sweep_phi_scale(ex2d, np.linspace(0.5, 2.0, 6))
    for side in ("left", "right"):
        traj = path.trajectory(side)
        assert np.all(np.diff(traj[:, 0]) < 0)
        assert np.all(np.diff(traj[:, 1]) > 0)
    assert path.conditions().shape == (6, 3)


def test_phi_sweep_jump(ex2d):
    with pytest.raises(PathBreak):
        sweep_phi_scale(ex2d, [0.5, 50.0], step_bound=1e-3)
