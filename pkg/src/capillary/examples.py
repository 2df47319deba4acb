"""Two planar families with obtuse contact angle whose volume product is unbounded.

Both families live in the upper half-plane and meet the line ``y = 0`` at a
fixed obtuse angle ``theta``.  Support functions are evaluated on the cap
directions ``x = (cos phi, sin phi)`` with ``phi`` in
``[pi/2 - theta, pi/2 + theta]``; the polar volume is
``(1/2) int ell^3 / h^2 dphi``.

The stadium family scales a cap segment, a long rectangle and a small disk
into a needle of fixed width ``2 / lambda``.  The ellipse family cuts a
flattened ellipse (semi-axes ``1/b`` and ``b``) just below its centre.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cap_geometry as cg
from .functionals import vol_cap_hat
from .quadrature import arc_rule, gauss_legendre

__all__ = [
    "Example1Body",
    "Example2Body",
    "FamilyTable",
    "example1_body",
    "example1_support",
    "example1_capillary_support",
    "example1_volume",
    "example1_boundary",
    "example1_lower_region",
    "example1_rule",
    "example1_polar_volume",
    "example1_product",
    "example2_body",
    "example2_support",
    "example2_support_bound",
    "example2_area",
    "example2_polar_volume",
    "example2_product",
    "example2_g_derivative",
    "growth_exponent",
    "FAMILY_COLUMNS",
]

FAMILY_COLUMNS = ("param", "vol_hat", "vol_polar", "product")


def _obtuse(theta):
    angle = cg.as_angle(theta)
    angle.require_obtuse("these examples")
    return angle


def _directions(u):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 2:
        raise ValueError("the examples are planar")
    return u


@dataclass(frozen=True)
class Example1Body:
    """Stadium-like body ``K_lambda`` (the first family).

    Pieces: the cap region scaled by ``1/lambda`` below ``y = -cos/lambda``,
    the rectangle ``|x| <= 1/lambda``, ``-cos/lambda <= y <= lambda``, and the
    disk of radius ``1/lambda`` centred at ``(0, lambda)``.
    """

    lam: float
    angle: cg.ContactAngle

    @property
    def radius(self):
        return 1.0 / self.lam

    @property
    def lower_centre(self):
        return np.array([0.0, -self.angle.cos / self.lam])

    @property
    def upper_centre(self):
        return np.array([0.0, self.lam])


def example1_body(lam, theta):
    angle = _obtuse(theta)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if lam * lam < -angle.cos:
        # the rectangle would be empty and the pieces would not nest
        raise ValueError("need lambda^2 >= -cos(theta)")
    return Example1Body(float(lam), angle)


def example1_support(e, u):
    """Support function of ``K_lambda`` in arbitrary planar directions."""
    u = _directions(u)
    norm = np.linalg.norm(u, axis=-1)
    r = e.radius
    upper = u[..., 1] * e.upper_centre[1] + r * norm
    arc = u[..., 1] * e.lower_centre[1] + r * norm
    # below the cap directions the lower piece is supported at its corners on y = 0
    corner = np.abs(u[..., 0]) * e.angle.sin * r
    lower = np.where(u[..., 1] >= norm * e.angle.cos, arc, corner)
    return np.maximum(upper, lower)


def example1_capillary_support(e, p):
    """Capillary support function of the boundary curve at cap points.

    ``p`` is a :class:`CapPoint` or an array of sphere representatives ``x``
    with ``x_2 >= cos(theta)``.
    """
    x = _directions(getattr(p, "x", p))
    if np.any(x[..., 1] < e.angle.cos - 1e-12):
        raise ValueError("direction outside the cap")
    out = example1_support(e, x)
    return float(out) if np.ndim(out) == 0 else out


def example1_boundary(e, m=20000):
    """Dense sample of the boundary of ``K_lambda`` built from its three pieces."""
    c, s, r = e.angle.cos, e.angle.sin, e.radius
    # arcs of the lower piece from the corners on y = 0 up to the rectangle
    start = math.atan2(c, s)
    t = np.linspace(start, 0.0, m)
    arc = r * np.stack([np.cos(t), np.sin(t)], axis=-1)
    lower = e.lower_centre + np.concatenate([arc, arc * [-1.0, 1.0]])
    t = np.linspace(0.0, math.pi, m)
    upper = e.upper_centre + r * np.stack([np.cos(t), np.sin(t)], axis=-1)
    corners = np.array([[r, e.lower_centre[1]], [-r, e.lower_centre[1]], [r, e.lam], [-r, e.lam]])
    return np.concatenate([lower, upper, corners])


def example1_volume(e, dim=2):
    """Volume of the half body, planar (``dim=2``) or rotated about the y-axis (``dim=3``).

    The planar area is ``2 + (theta - sin cos + 2 cos) / lambda^2``: lower cap
    piece plus rectangle plus half disk.  The rotated body is a cylinder of
    height ``lambda + |cos|/lambda`` capped by a hemisphere and the scaled
    three-dimensional cap piece below the cylinder.
    """
    c, s, th, lam = e.angle.cos, e.angle.sin, e.angle.theta, e.lam
    r = 1.0 / lam
    if dim == 2:
        lower = (th - s * c - math.pi / 2) * r * r
        rect = 2 * r * (lam + c * r)
        return lower + rect + math.pi / 2 * r * r
    if dim == 3:
        lower = (vol_cap_hat(3, e.angle) - 2 * math.pi / 3) * r**3
        cyl = math.pi * r * r * (lam + c * r)
        return lower + cyl + 2 * math.pi / 3 * r**3
    raise ValueError("dim must be 2 or 3")


def example1_lower_region(theta):
    """Polar-angle intervals of the cap directions ``x_2 <= cos(theta) / 2``.

    These are the directions of the cap points ``zeta`` with
    ``zeta_2 <= -cos(theta) / 2``; there the capillary support function is
    ``ell / lambda``.
    """
    angle = _obtuse(theta)
    edge = math.asin(angle.cos / 2)
    lo, hi = math.pi / 2 - angle.theta, math.pi / 2 + angle.theta
    return ((lo, edge), (math.pi - edge, hi))


def example1_rule(theta, per_panel=32, lam_max=16.0):
    """Arc rule split where the support function changes formula.

    For upward directions near the horizontal the support ``lambda x_2 + 1/lambda``
    grows from ``1/lambda`` over an angular layer of width ``lambda^-2``, so the
    panels are graded geometrically towards ``phi = 0`` and ``phi = pi`` down to
    the layer of the largest ``lambda`` the rule will be used with.
    """
    angle = _obtuse(theta)
    (_, a), (b, _) = example1_lower_region(angle)
    breaks = [a, 0.0, math.pi, b, math.pi / 2]
    width = 0.25 / lam_max**2
    while width < math.pi / 2:
        breaks += [width, math.pi - width]
        width *= 4
    return arc_rule(angle, breaks, per_panel)


def example1_polar_volume(e, rule):
    x = rule.nodes
    h = example1_capillary_support(e, x)
    return 0.5 * float(rule.weights @ (cg.ell(x, e.angle) ** 3 / h**2))


@dataclass
class FamilyTable:
    """Rows of ``(param, vol_hat, vol_polar, product)`` for one family sweep."""

    param_name: str
    theta: float
    rows: list
    increasing: bool
    slope: float | None = None
    extra: dict | None = None

    def as_dict(self):
        return {
            "param_name": self.param_name,
            "theta": self.theta,
            "columns": list(FAMILY_COLUMNS),
            "rows": [list(r) for r in self.rows],
            "increasing": self.increasing,
            "slope": self.slope,
            "extra": self.extra or {},
        }

    @property
    def products(self):
        return np.array([r[3] for r in self.rows])

    @property
    def params(self):
        return np.array([r[0] for r in self.rows])


def _increasing(values):
    return bool(np.all(np.diff(values) > 0))


def growth_exponent(params, products):
    """Least-squares slope of ``log(product)`` against ``log(param)`` over the top decade."""
    params = np.asarray(params, dtype=float)
    products = np.asarray(products, dtype=float)
    keep = params >= params.max() / 10
    if keep.sum() < 2:
        raise ValueError("need at least two parameters within a decade of the largest")
    return float(np.polyfit(np.log(params[keep]), np.log(products[keep]), 1)[0])


def example1_product(lambdas, theta, rule=None):
    """Volume product along the stadium family.

    Each row also records the lower-region lower bound
    ``lambda^2 / (1 - cos)^2 * int_lower ell^3``.
    """
    angle = _obtuse(theta)
    rule = rule or example1_rule(angle, lam_max=max(lambdas))
    phi = rule.coords["phi"]
    (lo, a), (b, hi) = example1_lower_region(angle)
    in_lower = (phi < a) | (phi > b)
    l3 = cg.ell(rule.nodes, angle) ** 3
    lower_mass = float(rule.weights[in_lower] @ l3[in_lower])
    rows, lower_parts, bounds = [], [], []
    for lam in lambdas:
        e = example1_body(lam, angle)
        h = example1_capillary_support(e, rule.nodes)
        vol_polar = 0.5 * float(rule.weights @ (l3 / h**2))
        vol_hat = example1_volume(e)
        rows.append((float(lam), vol_hat, vol_polar, vol_hat * vol_polar))
        lower_parts.append(float(rule.weights[in_lower] @ (l3[in_lower] / h[in_lower] ** 2)))
        bounds.append(lam * lam / (1 - angle.cos) ** 2 * lower_mass)
    products = [r[3] for r in rows]
    return FamilyTable(
        "lambda", angle.theta, rows, _increasing(products),
        extra={"lower_region_integral": lower_parts, "lower_region_bound": bounds},
    )


@dataclass(frozen=True)
class Example2Body:
    """Ellipse ``x^2 / a^2 + (y - c)^2 / b^2 <= 1`` cut by ``y >= 0`` (the second family).

    ``a = 1/b`` and ``c = eta b`` with ``eta = b^2 / sqrt(b^4 + tan^2)`` fix the
    contact angle at ``theta``.
    """

    b: float
    angle: cg.ContactAngle

    @property
    def a(self):
        return 1.0 / self.b

    @property
    def tan2(self):
        return math.tan(self.angle.theta) ** 2

    @property
    def eta(self):
        return self.b**2 / math.sqrt(self.b**4 + self.tan2)

    @property
    def one_minus_eta2(self):
        """``1 - eta^2`` without cancellation."""
        return self.tan2 / (self.b**4 + self.tan2)

    @property
    def c(self):
        return self.eta * self.b

    @property
    def t_range(self):
        t0 = math.asin(self.eta)
        return -t0, math.pi + t0

    def contact_cos(self):
        """Contact angle cosine recomputed from the ellipse parameters.

        ``-a c / sqrt(b^4 + (a^2 - b^2) c^2)`` with ``b^4 - b^2 c^2`` written as
        ``b^4 (1 - eta^2)``, which would otherwise cancel for large ``b``.
        """
        a, b, c = self.a, self.b, self.c
        return -a * c / math.sqrt(b**4 * self.one_minus_eta2 + a * a * c * c)


def example2_body(b, theta):
    """Build the ellipse member for ``b >= 1`` and confirm its contact angle."""
    angle = _obtuse(theta)
    if not b >= 1:
        raise ValueError("need b >= 1")
    e = Example2Body(float(b), angle)
    if not (e.a > 0 and e.b > e.c > 0):
        raise ValueError("parameters must satisfy a > 0 and b > c > 0")
    if abs(e.contact_cos() - angle.cos) > 1e-10:
        raise AssertionError(f"recomputed cos(theta) {e.contact_cos()} != {angle.cos}")
    return e


def example2_support(e, psi_dir, check=True):
    """``c sin + sqrt(a^2 cos^2 + b^2 sin^2)`` at the direction angle ``psi_dir``.

    For downward directions the two terms nearly cancel; there the value is
    rewritten as ``(a^2 cos^2 + (b^2 - c^2) sin^2) / (sqrt(...) + c |sin|)``.
    """
    psi = np.asarray(psi_dir, dtype=float)
    th = e.angle.theta
    if check and np.any((psi < math.pi / 2 - th - 1e-12) | (psi > math.pi / 2 + th + 1e-12)):
        raise ValueError("psi_dir outside [pi/2 - theta, pi/2 + theta]")
    a, b, c = e.a, e.b, e.c
    sn, cs = np.sin(psi), np.cos(psi)
    root = np.sqrt(a * a * cs * cs + b * b * sn * sn)
    num = a * a * cs * cs + b * b * e.one_minus_eta2 * sn * sn
    out = np.where(sn >= 0, c * sn + root, num / (root - c * sn))
    return float(out) if out.ndim == 0 else out


def example2_support_bound(e, delta=None):
    """Upper bound on the support near the lowest cap direction.

    For ``psi_dir`` in ``[pi/2 - theta, pi/2 - theta + delta]`` (``delta = b^-3``)
    the support is at most
    ``(b^3 (cos (cos delta - 1) + sin sin delta) - sin tan / b) / sqrt(b^4 + tan^2)``.
    """
    b = e.b
    delta = b**-3 if delta is None else delta
    c, s, t = e.angle.cos, e.angle.sin, math.tan(e.angle.theta)
    return (b**3 * (c * (math.cos(delta) - 1) + s * math.sin(delta)) - s * t / b) / math.sqrt(b**4 + t * t)


def example2_g_derivative(e, alpha):
    """Derivative of ``g(alpha) = cos^2 / b^2 + b^2 sin^2``, equal to ``(b^2 - b^-2) sin(2 alpha)``."""
    return (e.b**2 - e.b**-2) * np.sin(2 * np.asarray(alpha, dtype=float))


def example2_area(e, m=64):
    """Area of the cut ellipse by Gauss-Legendre in the ellipse parameter.

    Along ``X(t) = (a cos t, b sin t + c)`` the shoelace integrand
    ``x y' - y x'`` equals ``ab + ac sin t``; the closing segment lies on
    ``y = 0`` and contributes nothing.
    """
    t, w = gauss_legendre(m, *e.t_range)
    return 0.5 * float(w @ (e.a * e.b + e.a * e.c * np.sin(t)))


def _example2_breaks(e):
    """Panel breakpoints graded from both sides towards ``psi_dir = 0``, where the
    support turns over, and towards the lowest cap direction, where it is of
    order ``b^-3``."""
    lo = math.pi / 2 - e.angle.theta
    width = 0.25 / e.b**2
    pts = {0.0, lo}
    while -width > lo:
        pts.update((-width, width))
        width *= 4
    width = 0.25 / e.b**3
    while lo + width < -0.25 / e.b**2:
        pts.add(lo + width)
        width *= 4
    return sorted(pts) + [math.pi / 2]


def example2_polar_volume(e, per_panel=32):
    """``(1/2) int ell^3 / h^2`` over the cap, using the mirror symmetry about ``pi/2``."""
    total = 0.0
    br = _example2_breaks(e)
    for a, b in zip(br[:-1], br[1:]):
        psi, w = gauss_legendre(per_panel, a, b)
        ell = 1 - e.angle.cos * np.sin(psi)
        total += float(w @ (ell**3 / example2_support(e, psi, check=False) ** 2))
    return total  # two mirror halves times 1/2


def example2_product(bs, theta, per_panel=32):
    """Volume product along the ellipse family with the fitted growth exponent."""
    angle = _obtuse(theta)
    rows = []
    for b in bs:
        e = example2_body(b, angle)
        vol_hat = example2_area(e)
        if vol_hat < math.pi / 2 - 1e-9:
            raise AssertionError(f"area {vol_hat} below pi/2 at b={b}")
        vol_polar = example2_polar_volume(e, per_panel)
        rows.append((float(b), vol_hat, vol_polar, vol_hat * vol_polar))
    products = [r[3] for r in rows]
    slope = growth_exponent([r[0] for r in rows], products) if len(rows) > 1 else None
    return FamilyTable("b", angle.theta, rows, _increasing(products), slope)
