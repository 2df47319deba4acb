"""Cap volume, capillary polar volume and the volume product.

All cap integrals are taken against the ``(n-1)``-dimensional surface measure
on the sphere representatives ``x`` of the cap.  The cone-volume measure of
the cap is ``ell / n`` times that measure.
"""
from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bodies as bd
from . import cap_geometry as cg
from .errors import NonPositiveSupportError
from .quadrature import cap_rule, integrate

__all__ = [
    "vol_cap_hat",
    "polar_volume",
    "polar_volume_cone_form",
    "theorem1_lhs",
    "VolumeProductReport",
    "volume_product",
    "E_p",
    "log_functional",
    "normalize",
    "catalog_bodies",
    "sweep",
    "reports_to_csv",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = ("name", "n", "theta", "vol_hat", "vol_polar", "product", "bound", "margin", "resolution")


@functools.lru_cache(maxsize=None)
def _vol_cap_hat(n, theta):
    angle = cg.ContactAngle(theta)
    c, s = angle.cos, angle.sin
    if n == 2:
        return angle.theta - s * c
    if n == 3:
        return math.pi * (1 - c) ** 2 * (2 + c) / 3
    raise ValueError(f"vol_cap_hat is implemented for n in (2, 3), got n={n}")


def vol_cap_hat(n, angle) -> float:
    """Volume of the region between the cap and the hyperplane.

    ``theta - sin cos`` for ``n = 2``; ``pi (1 - cos)^2 (2 + cos) / 3`` for ``n = 3``.
    The formulas are the circular segment / spherical cap volumes and hold for
    every ``theta`` in ``(0, pi)``.
    """
    return _vol_cap_hat(int(n), cg.as_angle(angle).theta)


def _check_rule(rule, n, angle):
    if rule.domain != "cap" or rule.dim != n:
        raise ValueError(f"need a cap rule in dimension {n}, got {rule.domain} in {rule.dim}")
    if abs(rule.theta - angle.theta) > 1e-14:
        raise ValueError(f"rule was built for theta={rule.theta}, not {angle.theta}")


def _positive_support(body, rule):
    h = np.asarray(bd.support(body, rule.nodes), dtype=float)
    bad = ~(h > 0)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonPositiveSupportError(i, rule.nodes[i].tolist(), float(h[i]))
    return h


def polar_volume(cb, rule) -> float:
    """Volume of the capillary polar body, ``(1/n) int ell^{n+1} / s^n``."""
    n = cb.base.dim
    _check_rule(rule, n, cb.angle)
    s = _positive_support(cb.base, rule)
    l = cg.ell(rule.nodes, cb.angle)
    return integrate(rule, l ** (n + 1) / s**n) / n


def polar_volume_cone_form(cb, rule) -> float:
    """Same volume written as ``int sigma^{-n} dV`` with ``sigma = s / ell``."""
    n = cb.base.dim
    _check_rule(rule, n, cb.angle)
    s = _positive_support(cb.base, rule)
    l = cg.ell(rule.nodes, cb.angle)
    sigma = s / l
    return integrate(rule, sigma ** (-n) * l / n)


def theorem1_lhs(body, angle, rule) -> float:
    """``vol(K) / (2n) * int_cap (1 - cos(theta) x_n)^{n+1} / h_K^n``."""
    angle = cg.as_angle(angle)
    angle.require_not_obtuse("theorem1_lhs")
    n = body.dim
    _check_rule(rule, n, angle)
    h = _positive_support(body, rule)
    l = cg.ell(rule.nodes, angle)
    return bd.volume(body) / (2 * n) * integrate(rule, l ** (n + 1) / h**n)


@dataclass(frozen=True)
class VolumeProductReport:
    name: str
    n: int
    theta: float
    vol_hat: float
    vol_polar: float
    product: float
    bound: float
    margin: float
    resolution: str

    def as_dict(self):
        return asdict(self)


def volume_product(cb, rule) -> VolumeProductReport:
    """Product of the half-body volume and the capillary polar volume.

    The half-body volume of an unconditional body is ``vol(K) / 2``.
    """
    cb.angle.require_not_obtuse("volume_product")
    n = cb.base.dim
    vol_hat = bd.volume(cb.base) / 2
    vol_polar = polar_volume(cb, rule)
    product = vol_hat * vol_polar
    bound = vol_cap_hat(n, cb.angle) ** 2
    return VolumeProductReport(
        cb.base.name, n, cb.angle.theta, vol_hat, vol_polar, product, bound,
        bound - product, "x".join(str(r) for r in rule.resolution),
    )


def E_p(body, angle, p, rule, check=False) -> float:
    """``int_cap (h_K / h_C)^p h_C``.

    With ``check=True`` exponents outside ``(-n, 0)``, where the comparison
    with the double cap is claimed, are rejected.
    """
    angle = cg.as_angle(angle)
    n = body.dim
    if p == 0:
        raise ValueError("E_p is defined for p != 0")
    if check and not (-n < p < 0):
        raise ValueError(f"the E_p comparison needs p in (-{n}, 0), got {p}")
    _check_rule(rule, n, angle)
    hk = _positive_support(body, rule)
    hc = cg.support_C(rule.nodes, angle)
    return integrate(rule, (hk / hc) ** p * hc)


def log_functional(body, angle, rule) -> float:
    """``int_cap h_C log h_K``."""
    angle = cg.as_angle(angle)
    _check_rule(rule, body.dim, angle)
    hk = _positive_support(body, rule)
    hc = cg.support_C(rule.nodes, angle)
    return integrate(rule, hc * np.log(hk))


def normalize(body, angle):
    """Rescale ``body`` to the volume of the double cap ``C``."""
    target = 2.0 * vol_cap_hat(body.dim, angle)
    lam = (target / bd.volume(body)) ** (1.0 / body.dim)
    out = bd.scaled(body, lam)
    if abs(bd.volume(out) - target) > 1e-10:
        raise AssertionError("normalization missed the target volume")
    return out


ASPECT_RATIOS = (0.25, 0.5, 2.0, 3.0, 4.0)
LP_EXPONENTS = (1.0, 1.5, 3.0, "inf")


def catalog_bodies(n):
    """The unconditional catalog swept when checking the volume-product bound."""
    out = [bd.ball(n, 1.0)]
    for r in ASPECT_RATIOS:
        axes = [1.0] * (n - 1) + [r] if n == 2 else [1.0, math.sqrt(r), r]
        out.append(bd.box(axes))
    for r in ASPECT_RATIOS:
        axes = [1.0] * (n - 1) + [r] if n == 2 else [1.0, math.sqrt(r), r]
        out.append(bd.ellipsoid(axes))
    for p in LP_EXPONENTS:
        out.append(bd.lp_ball(n, p))
    return out


def default_resolution(n):
    return 64 if n == 2 else (48, 96)


def sweep(bodies, thetas, n, resolution=None):
    """Volume-product reports for every (body, theta) pair, bodies taken as half-bodies."""
    resolution = resolution or default_resolution(n)
    out = []
    for theta in thetas:
        angle = cg.as_angle(theta)
        rule = cap_rule(n, angle, resolution)
        for body in bodies:
            out.append(volume_product(bd.CapillaryBody(body, angle), rule))
    return out


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.as_dict().items()})
    return buf.getvalue()
