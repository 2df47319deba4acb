import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from capillary import bodies as bd
from capillary import cap_geometry as cg
from capillary import functionals as fn
from capillary.errors import NonPositiveSupportError
from capillary.quadrature import cap_rule

PI3 = math.pi / 3
THETAS = (math.pi / 6, math.pi / 4, PI3, 0.49 * math.pi)


def membership_mc(n, theta, samples, seed):
    """Monte Carlo volume of {x in the orthant-free half space : |x + cos E_n| <= 1, x_n >= 0}."""
    c = math.cos(theta)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    box = 2.0 ** (n - 1) * (1 - c)  # [-1, 1]^{n-1} x [0, 1 - c]
    while done < samples:
        m = min(10**6, samples - done)
        x = rng.uniform(-1, 1, size=(m, n))
        x[:, -1] = (x[:, -1] + 1) / 2 * (1 - c)
        shifted = x.copy()
        shifted[:, -1] += c
        hits += int(((shifted * shifted).sum(axis=1) <= 1).sum())
        done += m
    p = hits / samples
    return box * p, box * math.sqrt(p * (1 - p) / samples)


def test_vol_cap_hat_examples():
    assert_allclose(fn.vol_cap_hat(2, math.pi / 2), math.pi / 2)
    assert_allclose(fn.vol_cap_hat(2, PI3), math.pi / 3 - math.sqrt(3) / 4)
    assert_allclose(fn.vol_cap_hat(3, math.pi / 2), 2 * math.pi / 3)
    with pytest.raises(ValueError):
        fn.vol_cap_hat(4, PI3)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("theta", [PI3, 2.0])
def test_vol_cap_hat_against_membership_mc(n, theta):
    est, se = membership_mc(n, theta, 10**7, seed=n)
    assert abs(fn.vol_cap_hat(n, theta) - est) <= 3 * se


@pytest.mark.parametrize("n", [2, 3])
def test_cap_is_self_polar(n):
    angle = cg.as_angle(PI3)
    rule = cap_rule(n, angle, fn.default_resolution(n))
    cb = bd.CapillaryBody(bd.double_cap(n, PI3), angle)
    assert abs(fn.polar_volume(cb, rule) - fn.vol_cap_hat(n, angle)) <= 1e-9
    for lam in (0.5, 3.0):
        cbl = bd.CapillaryBody(bd.double_cap(n, PI3, lam), angle)
        assert_allclose(fn.polar_volume(cbl, rule), lam**-n * fn.vol_cap_hat(n, angle), rtol=1e-12)


def test_polar_volume_box_against_trapezoid():
    angle = cg.as_angle(PI3)
    cb = bd.CapillaryBody(bd.box([1.0, 1.0]), angle)
    lo, hi = math.pi / 2 - angle.theta, math.pi / 2 + angle.theta
    phi = np.linspace(lo, hi, 10**6 + 1)
    x = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    vals = (1 - angle.cos * x[:, 1]) ** 3 / (np.abs(x[:, 0]) + np.abs(x[:, 1])) ** 2
    oracle = np.trapezoid(vals, phi) / 2
    assert abs(fn.polar_volume(cb, cap_rule(2, angle, 64)) - oracle) <= 1e-7


@pytest.mark.parametrize("n", [2, 3])
def test_two_polar_forms_agree(n):
    angle = cg.as_angle(math.pi / 4)
    rule = cap_rule(n, angle, 16)
    for body in fn.catalog_bodies(n):
        cb = bd.CapillaryBody(body, angle)
        assert_allclose(fn.polar_volume_cone_form(cb, rule), fn.polar_volume(cb, rule), rtol=1e-12)


def test_gauge_integral_form_equals_product():
    angle = cg.as_angle(PI3)
    rule = cap_rule(2, angle, 64)
    body = bd.ellipsoid([1.0, 2.0])
    rep = fn.volume_product(bd.CapillaryBody(body, angle), rule)
    assert_allclose(fn.theorem1_lhs(body, angle, rule), rep.product, rtol=1e-14)
    cap = bd.double_cap(2, PI3)
    assert_allclose(fn.theorem1_lhs(cap, angle, rule), fn.vol_cap_hat(2, angle) ** 2, rtol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_equality_case_and_scale_invariance(n):
    angle = cg.as_angle(PI3)
    rule = cap_rule(n, angle, fn.default_resolution(n))
    products = []
    for lam in (0.5, 1.0, 3.0):
        rep = fn.volume_product(bd.CapillaryBody(bd.double_cap(n, PI3, lam), angle), rule)
        assert abs(rep.margin) <= (1e-8 if n == 2 else 1e-5)
        products.append(rep.product)
    assert np.ptp(products) <= 1e-8
    body = bd.ellipsoid([1.0, 0.7, 2.0][:n])
    ps = [fn.volume_product(bd.CapillaryBody(bd.scaled(body, lam), angle), rule).product for lam in (0.5, 1, 3)]
    assert np.ptp(ps) <= 1e-8


def test_ball_and_boxes_strictly_below_bound():
    angle = cg.as_angle(PI3)
    rule = cap_rule(2, angle, 64)
    assert fn.volume_product(bd.CapillaryBody(bd.ball(2), angle), rule).margin > 0
    assert fn.volume_product(bd.CapillaryBody(bd.ellipsoid([1.0, 2.0]), angle), rule).margin > 0
    angle4 = cg.as_angle(math.pi / 4)
    rule4 = cap_rule(2, angle4, 64)
    for a in (0.5, 1.0, 2.0):
        for b in (0.5, 1.0, 2.0):
            assert fn.volume_product(bd.CapillaryBody(bd.box([a, b]), angle4), rule4).margin > 0


@pytest.mark.parametrize("n", [2, 3])
def test_catalog_sweep_margins(n):
    reports = fn.sweep(fn.catalog_bodies(n), THETAS, n)
    assert len(reports) == len(THETAS) * 15
    for r in reports:
        assert r.margin > 1e-4, r


def test_equality_detection():
    angle = cg.as_angle(PI3)
    rule = cap_rule(2, angle, 64)
    equal = fn.volume_product(bd.CapillaryBody(bd.diag_scaled_cap(PI3, [2.0, 2.0]), angle), rule)
    assert abs(equal.margin) <= 1e-8
    for diag in ([1.0, 2.0], [2.0, 1.0], [1.0, 1.1]):
        rep = fn.volume_product(bd.CapillaryBody(bd.diag_scaled_cap(PI3, diag), angle), rule)
        assert rep.margin > 1e-8


def test_reports_csv_and_dict():
    reports = fn.sweep([bd.ball(2)], [PI3], 2)
    text = fn.reports_to_csv(reports)
    header, row = text.strip().split("\n")
    assert header.split(",") == list(fn.REPORT_COLUMNS)
    assert row.startswith("ball(r=1),2,")
    d = reports[0].as_dict()
    assert d["bound"] == fn.vol_cap_hat(2, PI3) ** 2
    assert d["resolution"] == "64"


def test_nonpositive_support_aborts(monkeypatch):
    angle = cg.as_angle(PI3)
    with pytest.raises(ValueError):
        fn.polar_volume(bd.CapillaryBody(bd.ball(2), angle), cap_rule(2, math.pi / 4, 8))
    rule = cap_rule(2, angle, 8)

    def broken(body, y):
        h = np.linalg.norm(y, axis=-1)
        h[5] = 0.0
        return h

    monkeypatch.setattr(bd, "support", broken)
    with pytest.raises(NonPositiveSupportError) as info:
        fn.polar_volume(bd.CapillaryBody(bd.ball(2), angle), rule)
    assert info.value.index == 5


def test_e_p_of_cap():
    for n in (2, 3):
        angle = cg.as_angle(PI3)
        rule = cap_rule(n, angle, fn.default_resolution(n))
        cap = bd.double_cap(n, PI3)
        for p in (-0.5, -1.0, 2.0):
            assert_allclose(fn.E_p(cap, angle, p, rule), n * fn.vol_cap_hat(n, angle), rtol=1e-12)
    with pytest.raises(ValueError):
        fn.E_p(cap, angle, 0.5, rule, check=True)
    with pytest.raises(ValueError):
        fn.E_p(cap, angle, 0, rule)


def test_p_functionals_against_cap():
    angle = cg.as_angle(PI3)
    rule = cap_rule(2, angle, 64)
    cap = bd.double_cap(2, PI3)
    for body in (bd.box([1.0, 2.0]), bd.ellipsoid([1.0, 3.0])):
        k = fn.normalize(body, angle)
        assert abs(bd.volume(k) - bd.volume(cap)) <= 1e-10
        for p in (-0.5, -1.0, -1.5):
            assert fn.E_p(k, angle, p, rule, check=True) < fn.E_p(cap, angle, p, rule) - 1e-6
        assert fn.log_functional(k, angle, rule) > fn.log_functional(cap, angle, rule) + 1e-6


def test_regime_rejections():
    with pytest.raises(ValueError):
        fn.theorem1_lhs(bd.ball(2), 2.0, cap_rule(2, 2.0, 8))
