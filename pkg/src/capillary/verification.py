"""Oracle-backed numerical checks of the cap potentials and the volume-product bound.

Every check returns a :class:`CheckResult`.  A check may bundle several
sub-tests with their own tolerances; ``worst_margin`` is then the smallest
sub-margin rescaled to the headline tolerance, so ``passed`` is always
``worst_margin >= -tolerance``.  The raw sub-margins are kept in ``details``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as spi

from . import bodies as bd
from . import cap_geometry as cg
from . import functionals as fn
from .fd import fd_gradient, fd_hessian
from .quadrature import gauss_legendre, orthant_mc, orthant_polar_rule, integrate, sphere_rule

__all__ = [
    "CheckResult",
    "check_lemma1",
    "check_lemma2",
    "check_lemma3",
    "check_two_concavity",
    "check_key_inequality",
    "check_theorem1",
    "key_integrals",
    "gaussian_moment",
    "monge_ampere_mass",
]


@dataclass
class CheckResult:
    name: str
    samples: int
    worst_margin: float
    tolerance: float
    passed: bool
    seed: int | None
    oracle: str = ""
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "name": self.name,
            "samples": self.samples,
            "worst_margin": self.worst_margin,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "seed": self.seed,
            "oracle": self.oracle,
            "details": self.details,
        }

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: margin={self.worst_margin:.3e} tol={self.tolerance:.1e}"


def _combine(name, parts, tolerance, samples, seed, oracle, extra=None):
    """``parts`` maps sub-test name -> (margin, tolerance)."""
    scaled = {k: m * tolerance / t for k, (m, t) in parts.items()}
    worst = min(scaled.values())
    details = {k: {"margin": float(m), "tolerance": float(t)} for k, (m, t) in parts.items()}
    details.update(extra or {})
    return CheckResult(name, int(samples), float(worst), float(tolerance),
                       bool(worst >= -tolerance), seed, oracle, details)


def _orthant_directions(rng, count, n, floor=0.1):
    """Unit vectors with all coordinates bounded below by ``floor / sqrt(n)``-ish."""
    x = rng.uniform(floor, 1.0, size=(count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _tag(angle, n):
    return f"n={n} theta={angle.theta:.6g}"


def check_lemma1(n, angle, samples=500, seed=0, assertion="concave"):
    """Concavity of ``x -> V(sqrt(x))`` on the orthant (convexity for obtuse angles).

    FD Hessians are taken at seeded unit-norm points; the Hessian of this
    one-homogeneous function scales like ``1/|x|``, so unit points carry the
    order-one tolerance.  The closed-form 2x2 reduction ``hess_v_2d`` is also
    compared with an FD Hessian of ``(s, t) -> V(sqrt(s/(n-1), ..., t))``.
    """
    angle = cg.as_angle(angle)
    if assertion not in ("concave", "convex"):
        raise ValueError("assertion must be 'concave' or 'convex'")
    tol, tol_2d = 1e-7, 1e-6
    rng = np.random.default_rng(seed)
    pts = _orthant_directions(rng, samples, n)

    def v_sqrt(q):
        return cg.V(np.sqrt(q), angle)

    extreme = []
    for x in pts:
        e = np.linalg.eigvalsh(fd_hessian(v_sqrt, x))
        extreme.append(e.max() if assertion == "concave" else -e.min())
    worst_eig = float(max(extreme))

    def reduced(q):
        s, t = q[..., 0], q[..., 1]
        x = np.concatenate(
            [np.repeat((s / (n - 1))[..., None], n - 1, axis=-1), t[..., None]], axis=-1
        )
        return cg.V(np.sqrt(x), angle)

    st_err = 0.0
    for x in pts[: min(samples, 50)]:
        st = np.array([x[:-1].sum(), x[-1]])
        st /= np.linalg.norm(st)
        # Richardson extrapolation: the reduced Hessian varies quickly at small t
        fd = (4 * fd_hessian(reduced, st, 1e-4) - fd_hessian(reduced, st, 2e-4)) / 3
        st_err = max(st_err, float(np.abs(fd - cg.hess_v_2d(*st, angle)).max()))
    return _combine(
        f"lemma1[{assertion}] {_tag(angle, n)}",
        {"hessian_sign": (-worst_eig, tol), "hess_v_2d": (tol_2d - st_err, tol_2d)},
        tol, samples, seed, "central-difference Hessian in extended precision",
        {"worst_eigenvalue": worst_eig if assertion == "concave" else -worst_eig,
         "hess_v_2d_max_abs_error": st_err},
    )


def _ratio_points(rng, count, n, lo, hi, sign=True):
    """Unit vectors with ``y_n / |y|`` uniform in ``(lo, hi)``."""
    r = rng.uniform(lo, hi, size=count)
    if sign:
        r = r * rng.choice([-1.0, 1.0], size=count)
    d = rng.standard_normal((count, n - 1))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return np.concatenate([d * np.sqrt(1 - r * r)[:, None], r[:, None]], axis=1)


def monge_ampere_mass(angle, lo, hi, m=2000):
    """Area of ``DVstar(box)`` for a planar box ``[lo, hi]`` in the spherical region.

    The image boundary is traced densely and its area taken with the shoelace
    formula; this never touches the determinant formula.
    """
    angle = cg.as_angle(angle)
    (x0, y0), (x1, y1) = lo, hi
    t = np.linspace(0.0, 1.0, m, endpoint=False)
    edges = [
        np.stack([x0 + (x1 - x0) * t, np.full(m, y0)], axis=1),
        np.stack([np.full(m, x1), y0 + (y1 - y0) * t], axis=1),
        np.stack([x1 - (x1 - x0) * t, np.full(m, y1)], axis=1),
        np.stack([np.full(m, x0), y1 - (y1 - y0) * t], axis=1),
    ]
    g = cg.grad_Vstar(np.concatenate(edges), angle)
    x, y = g[:, 0], g[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _det_integral(angle, lo, hi, m=40):
    xs, wx = gauss_legendre(m, lo[0], hi[0])
    ys, wy = gauss_legendre(m, lo[1], hi[1])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X, Y], axis=-1).reshape(-1, 2)
    return float(np.outer(wx, wy).ravel() @ cg.det_hess_Vstar(pts, angle))


def check_lemma2(n, angle, samples=200, seed=0):
    """Closed-form gradient and Hessian determinant of ``Vstar`` against FD oracles."""
    angle = cg.as_angle(angle)
    angle.require_not_obtuse("check_lemma2")
    rng = np.random.default_rng(seed)
    c, s = angle.cos, angle.sin
    parts = {}
    extra = {}

    def vstar(q):
        return cg.Vstar(q, angle)

    # spherical region, kept 0.05 (in y_n/|y|) off the critical cone
    lo = c + 0.05 * (1 - c)
    cap_pts = _ratio_points(rng, samples, n, lo, 1.0 - 1e-3)
    rel = 0.0
    grad_err = 0.0
    for y in cap_pts:
        det_fd = np.linalg.det(fd_hessian(vstar, y))
        det_cf = cg.det_hess_Vstar(y, angle)
        rel = max(rel, abs(det_fd - det_cf) / det_cf)
        grad_err = max(grad_err, float(np.abs(fd_gradient(vstar, y) - cg.grad_Vstar(y, angle)).max()))
    parts["det_relative"] = (1e-5 - rel, 1e-5)
    parts["grad_spherical"] = (1e-8 - grad_err, 1e-8)
    extra["det_max_relative_error"] = rel

    if angle.regime is cg.Regime.ACUTE:
        cyl_pts = _ratio_points(rng, samples, n, 0.0, 0.95 * c)
        formula = np.concatenate([s * s * cyl_pts[:, :-1], np.zeros((samples, 1))], axis=1)
        exact = float(np.abs(cg.grad_Vstar(cyl_pts, angle) - formula).max())
        fd = max(float(np.abs(fd_gradient(vstar, y) - f).max()) for y, f in zip(cyl_pts, formula))
        dets = cg.det_hess_Vstar(cyl_pts, angle)
        parts["grad_cylinder"] = (1e-8 - max(exact, fd), 1e-8)
        parts["det_cylinder_zero"] = (1e-12 - float(np.abs(dets).max()), 1e-12)
        extra["grad_cylinder_fd_error"] = fd

        # C^1 across the cone: approach a cone point from both sides
        eps = 1e-9
        jump = 0.0
        d = rng.standard_normal((samples, n - 1))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        for r in (c,):
            inner = np.concatenate([d * math.sqrt(1 - (r - eps) ** 2), np.full((samples, 1), r - eps)], 1)
            outer = np.concatenate([d * math.sqrt(1 - (r + eps) ** 2), np.full((samples, 1), r + eps)], 1)
            jump = float(np.abs(cg.grad_Vstar(inner, angle) - cg.grad_Vstar(outer, angle)).max())
        parts["c1_jump"] = (1e-5 - jump, 1e-5)
        extra["gradient_jump_across_cone"] = jump

    if n == 2:
        # a small box inside the spherical region of the first quadrant
        phi = math.acos(min(1.0, c + 0.5 * (1 - c)))
        centre = np.array([math.sin(phi), math.cos(phi)])
        lo_box, hi_box = centre - 0.02, centre + 0.02
        mass = monge_ampere_mass(angle, lo_box, hi_box)
        quad = _det_integral(angle, lo_box, hi_box)
        rel_ma = abs(mass - quad) / quad
        parts["monge_ampere_mass"] = (1e-4 - rel_ma, 1e-4)
        extra["monge_ampere"] = {"image_area": mass, "det_integral": quad}
    return _combine(f"lemma2 {_tag(angle, n)}", parts, 1e-5, samples, seed,
                    "central differences; shoelace area of the gradient image", extra)


def check_lemma3(n, angle, samples=200, seed=0):
    """``DV`` maps the orthant onto ``B``, inverts to ``DVstar``, and the determinants multiply to 1."""
    angle = cg.as_angle(angle)
    angle.require_not_obtuse("check_lemma3")
    rng = np.random.default_rng(seed)
    c, s = angle.cos, angle.sin
    xs = rng.uniform(0.1, 10.0, size=(samples, n))
    ys = cg.grad_V(xs, angle)
    norms = np.linalg.norm(ys, axis=1)
    in_b = float(np.min(np.minimum(ys.min(axis=1), ys[:, -1] - norms * c) / norms))
    roundtrip = float(np.abs(cg.grad_Vstar(ys, angle) - xs).max())
    worst_det = 0.0
    for x, y in zip(xs, ys):
        u, v = x / np.linalg.norm(x), y / np.linalg.norm(y)
        d1 = np.linalg.det(fd_hessian(lambda q: cg.V(q, angle), u))
        d2 = np.linalg.det(fd_hessian(lambda q: cg.Vstar(q, angle), v))
        worst_det = max(worst_det, abs(d1 * d2 - 1.0))
    parts = {
        "range_B": (in_b, 1e-12),
        "roundtrip": (1e-8 - roundtrip, 1e-8),
        "det_product": (1e-6 - worst_det, 1e-6),
    }
    extra = {"roundtrip_error": roundtrip, "det_product_error": worst_det}
    if angle.regime is cg.Regime.ACUTE:
        phi = np.linspace(1e-6, math.pi / 2 - 1e-6, 2001)
        f = s * np.sin(phi) / (c + np.cos(phi))
        mono = float(np.diff(f).min())
        # f(pi/2 - eps) - tan ~ -eps sin / cos^2, so the offset shrinks near pi/2
        eps = 1e-4 * min(1.0, 4 * c * c)
        near = s * math.sin(math.pi / 2 - eps) / (c + math.cos(math.pi / 2 - eps))
        parts["f_increasing"] = (mono, 1e-15)
        parts["f_limit_tan"] = (1e-3 - abs(near - math.tan(angle.theta)), 1e-3)
        extra["f_limit"] = near
        extra["f_limit_offset"] = eps
    return _combine(f"lemma3 {_tag(angle, n)}", parts, 1e-6, samples, seed,
                    "composition with DVstar; central-difference Hessians", extra)


def check_two_concavity(n, angle, samples=1000, seed=0, record_only=False):
    """``<a, DV(b)> >= 2 V(sqrt(ab))`` on random orthant pairs, with equality at ``a = b``.

    Obtuse angles are only accepted with ``record_only=True``; the gap is then
    reported but nothing is claimed about its sign.
    """
    angle = cg.as_angle(angle)
    if angle.regime is cg.Regime.OBTUSE and not record_only:
        raise cg.RegimeError("two-concavity is only asserted for acute or right angles")
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 10.0, size=(samples, n))
    b = rng.uniform(0.1, 10.0, size=(samples, n))
    gap = np.einsum("ij,ij->i", a, cg.grad_V(b, angle)) - 2 * cg.V(np.sqrt(a * b), angle)
    diag = np.einsum("ij,ij->i", a, cg.grad_V(a, angle)) - 2 * cg.V(a, angle)
    tol = 1e-10
    parts = {"gap": (float(gap.min()), tol), "equality": (tol - float(np.abs(diag).max()), tol)}
    res = _combine(f"two_concavity {_tag(angle, n)}", parts, tol, samples, seed,
                   "direct evaluation on seeded pairs",
                   {"min_gap": float(gap.min()), "asserted": not record_only})
    return res


def gaussian_moment(n):
    """``int_0^inf exp(-s^2/2) s^(n-1) ds`` by adaptive 1-D quadrature."""
    return spi.quad(lambda s: math.exp(-0.5 * s * s) * s ** (n - 1), 0, math.inf)[0]


def _radii(body):
    u = sphere_rule(body.dim, 128).nodes
    h = bd.support(body, u)
    return float(h.min()), float(h.max())


def key_integrals(body, angle, samples, seed):
    """Monte-Carlo estimates of the three orthant integrals of the key inequality.

    Returns a dict name -> (estimate, standard error) for
    ``I_body = int exp(-p_K^2/2)``,
    ``I_dual = int_{y_n > |y| cos} exp(-h_K^2/2) (1 - cos y_n/|y|)^{n+1}`` and
    ``I_cap = int exp(-V)``.  Each uses its own seed stream.
    """
    angle = cg.as_angle(angle)
    angle.require_not_obtuse("key_integrals")
    n, c = body.dim, angle.cos
    inr, circ = _radii(body)

    def f_body(x):
        return np.exp(-0.5 * bd.gauge(body, x) ** 2)

    def f_dual(y):
        norm = np.linalg.norm(y, axis=1)
        ratio = y[:, -1] / norm
        w = np.where(ratio > c, (1 - ratio * c) ** (n + 1), 0.0)
        return np.exp(-0.5 * bd.polar_gauge(body, y) ** 2) * w

    def f_cap(x):
        return np.exp(-cg.V(x, angle))

    return {
        "I_body": orthant_mc(n, f_body, samples, (seed, 0), scale=max(circ, 0.5)),
        "I_dual": orthant_mc(n, f_dual, samples, (seed, 1), scale=max(1.0 / inr, 0.5)),
        "I_cap": orthant_mc(n, f_cap, samples, (seed, 2), scale=1.0),
    }


def _grid_cross_check(body, angle, m_r=160, m_phi=80):
    """Deterministic polar-grid values of the three integrals for ``n = 2``."""
    c = angle.cos
    inr, circ = _radii(body)
    cone = math.acos(c) if c > 0 else math.pi / 2
    out = {}
    rules = {
        "I_body": orthant_polar_rule(10 * circ, m_r, m_phi),
        "I_dual": orthant_polar_rule(10 / inr, m_r, m_phi, breaks=(math.pi / 2 - cone,)),
        "I_cap": orthant_polar_rule(10.0, m_r, m_phi),
    }
    out["I_body"] = integrate(rules["I_body"], lambda x: np.exp(-0.5 * bd.gauge(body, x) ** 2))

    def f_dual(y):
        norm = np.linalg.norm(y, axis=1)
        ratio = y[:, -1] / norm
        return np.exp(-0.5 * bd.support(body, y) ** 2) * np.where(ratio > c, (1 - ratio * c) ** 3, 0.0)

    out["I_dual"] = integrate(rules["I_dual"], f_dual)
    out["I_cap"] = integrate(rules["I_cap"], lambda x: np.exp(-cg.V(x, angle)))
    return out


def check_key_inequality(body, angle, samples=None, seed=0, strict=False):
    """``I_body * I_dual <= I_cap^2`` within three combined standard errors.

    With ``strict=True`` the check instead demands ``I_cap^2 - I_body I_dual``
    exceed three standard errors.
    """
    angle = cg.as_angle(angle)
    angle.require_not_obtuse("check_key_inequality")
    if not bd.has_closed_form_polar(body):
        raise ValueError(f"{body.kind} bodies have no closed-form polar gauge")
    n = body.dim
    samples = samples or (1_000_000 if n == 2 else 4_000_000)
    est = key_integrals(body, angle, samples, seed)
    (i1, e1), (i2, e2), (i3, e3) = est["I_body"], est["I_dual"], est["I_cap"]
    lhs, rhs = i1 * i2, i3 * i3
    se = math.sqrt((i2 * e1) ** 2 + (i1 * e2) ** 2 + (2 * i3 * e3) ** 2)
    gm = gaussian_moment(n)
    closed = n * gm / 2 ** (n - 1) * fn.vol_cap_hat(n, angle)
    details = {
        "lhs": lhs, "rhs": rhs, "combined_se": se,
        "integrals": {k: {"estimate": v[0], "se": v[1]} for k, v in est.items()},
        "I_cap_closed_form": closed,
        "I_cap_z": (i3 - closed) / e3,
    }
    if n == 2:
        details["grid"] = _grid_cross_check(body, angle)
    margin = rhs - lhs
    name = f"key_inequality[{body.name}] {_tag(angle, n)}"
    if strict:
        margin = margin - 3 * se
        return CheckResult(name + " strict", samples, margin, 0.0, bool(margin > 0), seed,
                           "importance-sampled Monte Carlo", details)
    return CheckResult(name, samples, margin, 3 * se, bool(margin >= -3 * se), seed,
                       "importance-sampled Monte Carlo", details)


def check_theorem1(n, angle, bodies=None, resolution=None):
    """Volume-product bound over the catalog: margins nonnegative up to quadrature error.

    Also reports the strict gap for non-cap bodies.
    """
    angle = cg.as_angle(angle)
    bodies = bodies if bodies is not None else fn.catalog_bodies(n)
    reports = fn.sweep(bodies, [angle.theta], n, resolution)
    eps = 1e-6 if n == 2 else 1e-4
    worst = min(r.margin for r in reports)
    non_cap = [r.margin for b, r in zip(bodies, reports) if b.kind not in ("double_cap",)]
    strict = min(non_cap) if non_cap else math.inf
    parts = {"margin": (worst, eps)}
    if non_cap:
        parts["strict_non_cap"] = (strict - 1e-4, 1e-12)
    return _combine(
        f"theorem1_sweep {_tag(angle, n)}", parts, eps, len(reports),
        None, "cap quadrature",
        {"reports": [r.as_dict() for r in reports]},
    )
