import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate as si
from scipy import optimize
from scipy.spatial import ConvexHull

from capillary import cap_geometry as cg
from capillary import examples as ex

TH = 2 * math.pi / 3
LAMBDAS = (1, 2, 4, 8, 16)
BS = (2, 4, 8, 16, 32)


def stadium_half_width(e, y):
    """Half width of the stadium body at height ``y``, from its piecewise description."""
    r = e.radius
    k = e.lower_centre[1]
    if y <= k:
        return math.sqrt(max(r * r - (y - k) ** 2, 0.0))
    if y <= e.lam:
        return r
    return math.sqrt(max(r * r - (y - e.lam) ** 2, 0.0))


def stadium_breaks(e):
    return [0.0, e.lower_centre[1], e.lam, e.lam + e.radius]


# stadium family


def test_example1_rejects():
    with pytest.raises(ValueError):
        ex.example1_body(2.0, math.pi / 3)
    with pytest.raises(ValueError):
        ex.example1_body(0.5, TH)  # lambda^2 < -cos
    e = ex.example1_body(2.0, TH)
    with pytest.raises(ValueError):
        ex.example1_capillary_support(e, [1.0, -0.9])


def test_example1_support_against_boundary_sampling():
    for lam in (1.0, 3.0, 10.0):
        e = ex.example1_body(lam, TH)
        pts = ex.example1_boundary(e, m=20_000)
        t = np.linspace(0, 2 * math.pi, 721)
        u = np.stack([np.cos(t), np.sin(t)], axis=1)
        assert_allclose(ex.example1_support(e, u), (u @ pts.T).max(axis=1), atol=1e-6)


def test_example1_boundary_is_continuous_and_convex():
    e = ex.example1_body(3.0, TH)
    pts = ex.example1_boundary(e, m=2000)
    hull = ConvexHull(pts)
    # every sampled point lies on the hull boundary
    assert np.all(np.abs((pts @ hull.equations[:, :2].T + hull.equations[:, 2]).max(axis=1)) <= 1e-12)
    # pieces meet: the lower arc ends where the rectangle starts
    r = e.radius
    assert_allclose(stadium_half_width(e, e.lower_centre[1]), r)
    assert_allclose(stadium_half_width(e, e.lam), r)
    # the body meets y = 0 at the corner (r sin, 0)
    assert_allclose(stadium_half_width(e, 0.0), r * e.angle.sin, rtol=1e-14)


def test_example1_volume_against_slicing():
    for lam in (1.0, 2.5, 16.0):
        e = ex.example1_body(lam, TH)
        br = stadium_breaks(e)
        area = sum(si.quad(lambda y: 2 * stadium_half_width(e, y), a, b, epsabs=1e-13)[0] for a, b in zip(br, br[1:]))
        vol = sum(si.quad(lambda y: math.pi * stadium_half_width(e, y) ** 2, a, b, epsabs=1e-13)[0]
                  for a, b in zip(br, br[1:]))
        assert_allclose(ex.example1_volume(e), area, rtol=1e-10)
        assert_allclose(ex.example1_volume(e, dim=3), vol, rtol=1e-10)
    with pytest.raises(ValueError):
        ex.example1_volume(e, dim=4)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_example1_volume_bounds(lam):
    e = ex.example1_body(lam, TH)
    c = e.angle.cos
    # the rotated body dilated by lambda
    assert lam**3 * ex.example1_volume(e, dim=3) >= math.pi * (lam * lam + c)
    # planar analogue: the rectangle alone has area 2 (lambda^2 + cos) / lambda^2
    assert lam**2 * ex.example1_volume(e) >= 2 * (lam * lam + c)


def test_example1_capillary_support_examples():
    e = ex.example1_body(10.0, TH)
    (lo, a), (b, hi) = ex.example1_lower_region(TH)
    phi = np.concatenate([np.linspace(lo, a, 50), np.linspace(b, hi, 50)])
    x = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    s = ex.example1_capillary_support(e, x)
    assert np.all(s <= 0.15 + 1e-12)
    # there the support is ell / lambda
    assert_allclose(s, cg.ell(x, TH) / 10.0, rtol=1e-13)
    # lowest cap direction at lambda = 1: the value is ell there, sin^2(theta)
    e1 = ex.example1_body(1.0, TH)
    low = cg.CapPoint.from_x([e1.angle.sin, e1.angle.cos], e1.angle)
    assert_allclose(ex.example1_capillary_support(e1, low), e1.angle.sin**2)
    assert ex.example1_capillary_support(e1, low) <= 1 - e1.angle.cos


@pytest.mark.parametrize("lam", [1.0, 4.0, 16.0])
def test_example1_bound_on_lower_region_nodes(lam):
    rule = ex.example1_rule(TH)
    phi = rule.coords["phi"]
    (lo, a), (b, hi) = ex.example1_lower_region(TH)
    mask = (phi <= a) | (phi >= b)
    e = ex.example1_body(lam, TH)
    s = ex.example1_capillary_support(e, rule.nodes[mask])
    assert np.all(s <= (1 - e.angle.cos) / lam + 1e-12)


def test_example1_polar_volume_against_adaptive_quad():
    rule = ex.example1_rule(TH)
    for lam in (1.0, 8.0, 16.0):
        e = ex.example1_body(lam, TH)

        def integrand(phi):
            x = np.array([math.cos(phi), math.sin(phi)])
            return 0.5 * float(cg.ell(x, TH)) ** 3 / float(ex.example1_support(e, x)) ** 2

        lo, hi = math.pi / 2 - TH, math.pi / 2 + TH
        pts = [0.0, math.pi, *[v for pair in ex.example1_lower_region(TH) for v in pair][1:3]]
        ref = si.quad(integrand, lo, hi, points=pts, limit=400, epsabs=1e-12, epsrel=1e-12)[0]
        assert_allclose(ex.example1_polar_volume(e, rule), ref, rtol=1e-8)


def test_example1_product_diverges():
    table = ex.example1_product(LAMBDAS, TH)
    p = table.products
    assert table.increasing and np.all(np.diff(p) > 0)
    assert p[-1] / p[0] >= 10
    lower = np.array(table.extra["lower_region_integral"])
    bound = np.array(table.extra["lower_region_bound"])
    assert np.all(lower >= bound * (1 - 1e-12))
    assert_allclose(bound[1:] / bound[:-1], 4.0)
    assert [r[0] for r in table.rows] == list(map(float, LAMBDAS))
    d = table.as_dict()
    assert d["columns"] == list(ex.FAMILY_COLUMNS)


# ellipse family


def test_example2_parameters():
    e = ex.example2_body(4, TH)
    assert_allclose(e.eta, 16 / math.sqrt(259), rtol=1e-15)
    assert abs(e.eta - 0.99415) < 1e-4
    assert e.a == 0.25
    assert_allclose(e.c, e.eta * 4)
    assert abs(e.contact_cos() + 0.5) <= 1e-10
    e1 = ex.example2_body(1, TH)
    assert_allclose(e1.c, abs(math.cos(TH)), rtol=1e-14)
    near = ex.example2_body(2, math.pi / 2 + 1e-6)
    assert near.eta < 1e-5 and near.c < 1e-4


def test_example2_contact_angle_from_geometry():
    # tangent of the ellipse at its crossing with y = 0, against the horizontal
    for b in (1.5, 4, 32):
        e = ex.example2_body(b, TH)
        t = -math.asin(e.c / e.b)
        tangent = np.array([-e.a * math.sin(t), e.b * math.cos(t)])  # direction of increasing t
        normal = np.array([tangent[1], -tangent[0]])  # outward for the counter-clockwise curve
        normal /= np.linalg.norm(normal)
        # the outward normal makes angle theta with the upward axis
        assert_allclose(normal[1], math.cos(TH), atol=1e-12)


def test_example2_rejects():
    with pytest.raises(ValueError):
        ex.example2_body(0.5, TH)
    with pytest.raises(ValueError):
        ex.example2_body(2, math.pi / 3)
    e = ex.example2_body(2, TH)
    with pytest.raises(ValueError):
        ex.example2_support(e, -1.5)


def support_by_maximization(e, psi):
    u = np.array([math.cos(psi), math.sin(psi)])
    t0, t1 = e.t_range

    def neg(t):
        return -(e.a * math.cos(t) * u[0] + (e.b * math.sin(t) + e.c) * u[1])

    grid = np.linspace(t0, t1, 2001)
    k = int(np.argmin([neg(t) for t in grid]))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    return -min(res.fun, neg(t0), neg(t1))


@pytest.mark.parametrize("b", [1.0, 2.0, 8.0])
def test_example2_support_against_maximization(b):
    e = ex.example2_body(b, TH)
    psis = np.linspace(math.pi / 2 - TH, math.pi / 2 + TH, 41)
    ours = ex.example2_support(e, psis)
    ref = np.array([support_by_maximization(e, p) for p in psis])
    assert_allclose(ours, ref, rtol=1e-9, atol=1e-12)
    assert_allclose(ex.example2_support(e, math.pi / 2), e.c + e.b)


def test_example2_support_displayed_formula():
    e = ex.example2_body(3.0, TH)
    psi = np.linspace(math.pi / 2 - TH, math.pi / 2 + TH, 101)
    direct = e.c * np.sin(psi) + np.sqrt(e.a**2 * np.cos(psi) ** 2 + e.b**2 * np.sin(psi) ** 2)
    assert_allclose(ex.example2_support(e, psi), direct, rtol=1e-12)


def test_example2_support_bound_near_lowest_direction():
    for b in (8.0, 32.0, 128.0):
        e = ex.example2_body(b, TH)
        delta = b**-3
        lo = math.pi / 2 - TH
        psi = np.linspace(lo, lo + delta, 201)
        bound = ex.example2_support_bound(e)
        assert np.all(ex.example2_support(e, psi) <= bound * (1 + 1e-12))
    # the bound behaves like sin(theta) / b^2
    e = ex.example2_body(512.0, TH)
    assert_allclose(ex.example2_support_bound(e) * 512.0**2 / math.sin(TH), 1.0, rtol=1e-2)
    # the value at the lowest direction itself is smaller: about 2 sin^2 / b^3 (expand 1 - eta^2 ~ tan^2 / b^4)
    lowest = ex.example2_support(e, math.pi / 2 - TH)
    assert_allclose(lowest * 512.0**3 / (2 * math.sin(TH) ** 2), 1.0, rtol=1e-4)


def test_example2_g_derivative():
    e = ex.example2_body(4.0, TH)
    alpha = np.linspace(-math.pi / 2 + 1e-3, -1e-3, 500)
    d = ex.example2_g_derivative(e, alpha)
    assert np.all(d < 0)

    def g(a):
        return np.cos(a) ** 2 / e.b**2 + e.b**2 * np.sin(a) ** 2

    h = 1e-6
    assert_allclose(d, (g(alpha + h) - g(alpha - h)) / (2 * h), atol=1e-7)


@pytest.mark.parametrize("b", BS)
def test_example2_area(b):
    e = ex.example2_body(b, TH)
    t = np.linspace(*e.t_range, 400_001)
    pts = np.stack([e.a * np.cos(t), e.b * np.sin(t) + e.c], axis=1)
    # trapezoidal shoelace of the dense boundary plus the closing segment
    x, y = pts[:, 0], pts[:, 1]
    oracle = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    area = ex.example2_area(e)
    assert_allclose(area, oracle, rtol=1e-9)
    assert area >= math.pi / 2 - 1e-9


def test_example2_polar_volume_against_adaptive_quad():
    for b in (2.0, 16.0):
        e = ex.example2_body(b, TH)

        def integrand(psi):
            ell = 1 - math.cos(TH) * math.sin(psi)
            return 0.5 * ell**3 / ex.example2_support(e, psi, check=False) ** 2

        lo, hi = math.pi / 2 - TH, math.pi / 2 + TH
        ref = si.quad(integrand, lo, hi, points=[0.0, math.pi], limit=500, epsabs=0, epsrel=1e-12)[0]
        assert_allclose(ex.example2_polar_volume(e), ref, rtol=1e-8)


def test_example2_product_diverges():
    table = ex.example2_product(BS, TH)
    assert table.increasing
    assert table.slope >= 0.8
    assert np.all(np.array([r[1] for r in table.rows]) >= math.pi / 2 - 1e-9)
    assert table.products[-1] / table.products[0] >= 10


def test_growth_exponent():
    p = np.array([1.0, 2, 4, 8, 16, 32])
    assert_allclose(ex.growth_exponent(p, 3 * p**1.5), 1.5)
    with pytest.raises(ValueError):
        ex.growth_exponent([1.0, 100.0], [1.0, 2.0])
