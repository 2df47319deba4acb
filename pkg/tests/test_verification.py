import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate as si

from capillary import bodies as bd
from capillary import cap_geometry as cg
from capillary import verification as vf
from capillary.errors import RegimeError

PI3 = math.pi / 3


def test_check_result_pass_rule():
    r = vf._combine("x", {"a": (-0.5e-6, 1e-6), "b": (1.0, 1.0)}, 1e-6, 10, 0, "o")
    assert r.passed and r.worst_margin == pytest.approx(-0.5e-6)
    r = vf._combine("x", {"a": (1e-6, 1e-6), "b": (-2e-3, 1e-3)}, 1e-6, 10, 0, "o")
    # sub-margin -2 tolerances becomes -2e-6 on the headline scale
    assert not r.passed and r.worst_margin == pytest.approx(-2e-6)
    assert r.line().startswith("FAIL x:")
    assert set(r.as_dict()) == {"name", "samples", "worst_margin", "tolerance", "passed", "seed", "oracle", "details"}


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("theta", [math.pi / 6, PI3])
def test_sqrt_potential_concave(n, theta):
    r = vf.check_lemma1(n, theta, samples=100, seed=1)
    assert r.passed, r.details
    assert r.details["worst_eigenvalue"] <= 1e-7
    assert r.details["hess_v_2d_max_abs_error"] <= 1e-6


def test_sqrt_potential_flat_at_right_angle():
    r = vf.check_lemma1(2, math.pi / 2, samples=50, seed=0)
    assert r.passed
    assert abs(r.details["worst_eigenvalue"]) <= 1e-7


def test_sqrt_potential_flips_for_obtuse():
    concave = vf.check_lemma1(2, 2 * math.pi / 3, samples=50, seed=0)
    assert not concave.passed
    convex = vf.check_lemma1(2, 2 * math.pi / 3, samples=50, seed=0, assertion="convex")
    assert convex.passed
    assert convex.details["worst_eigenvalue"] >= -1e-7
    with pytest.raises(ValueError):
        vf.check_lemma1(2, PI3, assertion="flat")


@pytest.mark.parametrize("n", [2, 3])
def test_dual_potential_derivatives(n):
    r = vf.check_lemma2(n, PI3, samples=60, seed=2)
    assert r.passed, r.details
    assert r.details["det_max_relative_error"] <= 1e-5
    assert r.details["gradient_jump_across_cone"] <= 1e-5
    if n == 2:
        ma = r.details["monge_ampere"]
        assert abs(ma["image_area"] - ma["det_integral"]) <= 1e-4 * ma["det_integral"]


def test_monge_ampere_mass_against_scipy():
    angle = cg.as_angle(math.pi / 4)
    lo, hi = (0.2, 0.9), (0.25, 0.95)
    ref, _ = si.dblquad(lambda y, x: float(cg.det_hess_Vstar(np.array([x, y]), angle)),
                        lo[0], hi[0], lo[1], hi[1], epsabs=1e-14, epsrel=1e-12)
    assert_allclose(vf.monge_ampere_mass(angle, lo, hi, m=4000), ref, rtol=1e-4)


def test_monge_ampere_mass_of_cylinder_box_is_zero():
    # the gradient squashes the cylinder region onto a line
    angle = cg.as_angle(PI3)
    assert vf.monge_ampere_mass(angle, (1.0, 0.05), (1.1, 0.1)) <= 1e-14


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("theta", [math.pi / 6, PI3, 0.49 * math.pi])
def test_gradient_map_inverse(n, theta):
    r = vf.check_lemma3(n, theta, samples=60, seed=3)
    assert r.passed, r.details
    assert r.details["roundtrip_error"] <= 1e-8
    assert r.details["det_product_error"] <= 1e-6


def test_gradient_map_ratio_limit():
    angle = cg.as_angle(PI3)
    eps = 1e-4
    f = angle.sin * math.sin(math.pi / 2 - eps) / (angle.cos + math.cos(math.pi / 2 - eps))
    assert abs(f - math.tan(angle.theta)) <= 1e-3


def test_two_concavity():
    for n in (2, 3):
        r = vf.check_two_concavity(n, PI3, samples=500, seed=4)
        assert r.passed and r.details["min_gap"] >= -1e-10
    with pytest.raises(RegimeError):
        vf.check_two_concavity(2, 2.0)
    rec = vf.check_two_concavity(2, 2.0, samples=500, seed=4, record_only=True)
    assert rec.details["asserted"] is False
    assert rec.details["min_gap"] < 0


def test_gaussian_moment():
    assert_allclose(vf.gaussian_moment(2), 1.0, rtol=1e-12)
    assert_allclose(vf.gaussian_moment(3), math.sqrt(math.pi / 2), rtol=1e-12)


def test_key_inequality_equality_case():
    angle = cg.as_angle(PI3)
    r = vf.check_key_inequality(bd.double_cap(2, PI3), angle, samples=200_000, seed=5)
    d = r.details
    assert abs(d["lhs"] - d["rhs"]) <= 3 * d["combined_se"]
    assert abs(d["I_cap_z"]) <= 3
    grid = d["grid"]
    assert_allclose(grid["I_cap"], d["I_cap_closed_form"], rtol=1e-8)
    assert_allclose(grid["I_body"] * grid["I_dual"], grid["I_cap"] ** 2, rtol=1e-6)


@pytest.mark.parametrize("body", [bd.ball(2), bd.box([1.0, 2.0])], ids=["ball", "box"])
def test_key_inequality_strict(body):
    r = vf.check_key_inequality(body, PI3, samples=1_000_000, seed=6, strict=True)
    assert r.passed, r.details
    d = r.details
    for k in ("I_body", "I_dual", "I_cap"):
        mc = d["integrals"][k]
        assert abs(mc["estimate"] - d["grid"][k]) <= 4 * mc["se"] + 1e-9


def test_key_inequality_three_dim_cap():
    r = vf.check_key_inequality(bd.double_cap(3, PI3), PI3, samples=400_000, seed=7)
    assert r.passed
    assert abs(r.details["I_cap_z"]) <= 3


def test_key_inequality_rejects():
    body = bd.custom_radial(2, lambda u: np.ones(len(u)), 16)
    with pytest.raises(ValueError):
        vf.check_key_inequality(body, PI3, samples=10_000)
    with pytest.raises(RegimeError):
        vf.check_key_inequality(bd.ball(2), 2.0, samples=10_000)


def test_checks_are_reproducible():
    a = vf.check_key_inequality(bd.ball(2), PI3, samples=50_000, seed=9)
    b = vf.check_key_inequality(bd.ball(2), PI3, samples=50_000, seed=9)
    assert a.as_dict() == b.as_dict()
    assert vf.check_lemma2(3, PI3, 20, 9).as_dict() == vf.check_lemma2(3, PI3, 20, 9).as_dict()


@pytest.mark.parametrize("n", [2, 3])
def test_volume_product_sweep_check(n):
    r = vf.check_theorem1(n, math.pi / 4)
    assert r.passed
    assert r.samples == 15
    assert r.details["strict_non_cap"]["margin"] > 0
    with_cap = vf.check_theorem1(2, PI3, bodies=[bd.double_cap(2, PI3), bd.ball(2)])
    assert with_cap.passed
