import numpy as np
import pytest
from scipy import integrate

from ideonash import quadrature
from ideonash.errors import QuadratureFailure


def square_halfplane_area(a, c):
    """Area of {x in [-1,1]^2 : a.x <= c} by clipping the square polygon (Sutherland-Hodgman)."""
    poly = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    inside = lambda p: a[0] * p[0] + a[1] * p[1] <= c
    out = []
    for i, p in enumerate(poly):
        q = poly[(i + 1) % len(poly)]
        if inside(p):
            out.append(p)
        if inside(p) != inside(q):
            fp = a[0] * p[0] + a[1] * p[1] - c
            fq = a[0] * q[0] + a[1] * q[1] - c
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    if len(out) < 3:
        return 0.0
    xs, ys = np.array(out).T
    return 0.5 * abs(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1)))


def test_panel_rule_exact_for_polynomials():
    pts, wts = quadrature.panel_rule(-0.3, 0.8, breaks=(0.1,), order=8)
    for deg in range(16):
        exact = (0.8 ** (deg + 1) - (-0.3) ** (deg + 1)) / (deg + 1)
        assert np.dot(wts, pts**deg) == pytest.approx(exact, abs=1e-14)


def test_inverted_interval_negates():
    f = lambda x: np.exp(x)
    assert quadrature.integrate(f, 0.5, -0.2) == pytest.approx(-(np.exp(0.5) - np.exp(-0.2)), abs=1e-13)


def test_integrate_matches_scipy_with_kink():
    f = lambda x: np.abs(x - 0.137) * np.exp(-x**2)
    ours = quadrature.integrate(f, -1, 1, breaks=(0.137,), tol=1e-13)
    ref, _ = integrate.quad(f, -1, 1, points=[0.137], epsabs=1e-14)
    assert ours == pytest.approx(ref, abs=1e-12)


def test_integrate_gives_up_on_unresolved_jump():
    with pytest.raises(QuadratureFailure):
        quadrature.integrate(lambda x: np.where(x < 0.1234567, 0.0, 1.0), -1, 1, order=4,
                             tol=1e-15, max_subdivisions=4)


def test_cumulative_agrees_with_integrate():
    f = lambda x: 1.0 + np.sin(3 * x) ** 2
    uppers = np.array([[-0.9, 0.3], [1.0, -1.0]])
    got = quadrature.cumulative(f, uppers, start=-0.2)
    want = np.vectorize(lambda u: quadrature.integrate(f, -0.2, u, tol=1e-13))(uppers)
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("a,c", [((1.0, 1.0), 0.3), ((0.3, -1.2), -0.5), ((1.0, 0.0), 0.25),
                                 ((-0.7, 0.2), 0.9), ((1.0, 1.0), -2.5)])
def test_slab_rule_area(a, c):
    _, wts = quadrature.slab_rule(a, hi=c)
    assert wts.sum() == pytest.approx(square_halfplane_area(a, c), abs=1e-12)


def test_slab_rule_volume_3d():
    a = np.array([0.4, -0.9, 0.6])
    c = 0.2
    _, wts = quadrature.slab_rule(a, hi=c)
    ref, _ = integrate.quad(lambda z: square_halfplane_area(a[:2], c - a[2] * z), -1, 1,
                            epsabs=1e-13, limit=200)
    assert wts.sum() == pytest.approx(ref, abs=1e-10)


def test_slab_rule_smooth_integrand():
    a, lo, hi = np.array([0.5, 1.0]), -0.4, 0.7
    pts, wts = quadrature.slab_rule(a, lo, hi)
    f = lambda x, y: np.exp(-x**2 - 0.5 * y**2)
    ours = np.dot(wts, f(pts[:, 0], pts[:, 1]))
    ref, _ = integrate.dblquad(lambda y, x: f(x, y), -1, 1,
                               lambda x: max(-1, (lo - a[0] * x) / a[1]),
                               lambda x: min(1, (hi - a[0] * x) / a[1]), epsabs=1e-13)
    assert ours == pytest.approx(ref, abs=1e-11)


def test_plane_rule_line_integral():
    d, c = np.array([1.0, 2.0]), 0.5
    pts, wts = quadrature.plane_rule(d, c)
    np.testing.assert_allclose(pts @ d, c, atol=1e-13)
    f = lambda p: np.exp(p[..., 0])
    # parametrise by x: y = (c - x) / 2, arc length factor sqrt(1 + 1/4)
    xlo, xhi = max(-1, c - 2), min(1, c + 2)
    ref, _ = integrate.quad(lambda x: np.exp(x) * np.sqrt(1.25), xlo, xhi, epsabs=1e-14)
    assert np.dot(wts, f(pts)) == pytest.approx(ref, abs=1e-12)


def test_plane_rule_misses_cube():
    _, wts = quadrature.plane_rule([1.0, 1.0], 3.0)
    assert wts.size == 0 or wts.sum() == pytest.approx(0.0)


def test_box_rule_volume():
    _, wts = quadrature.box_rule([-1, -0.5, 0], [0.2, 1, 1], order=6)
    assert wts.sum() == pytest.approx(1.2 * 1.5 * 1.0)
