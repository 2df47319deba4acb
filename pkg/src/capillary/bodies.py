"""Catalog of unconditional convex bodies.

A body is a :class:`BodySpec` value: a ``kind`` string, the dimension, a plain
``params`` dict and a display name.  The JSON form is exactly
``{"kind": ..., "dim": n, "params": {...}, "name": ...}``.

Kinds and their params:

``ball``            ``radius``
``box``             ``half_widths`` (a_1..a_n)
``ellipsoid``       ``semi_axes``
``lp_ball``         ``p`` (>= 1, ``"inf"`` allowed), ``scale``
``double_cap``      ``theta``, ``scale``
``diag_scaled_cap`` ``theta``, ``diag`` (the body is diag(a) C)
``custom_radial``   ``resolution`` and ``radii`` on the first-orthant mesh nodes
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from . import cap_geometry as cg
from .quadrature import sphere_rule

__all__ = [
    "BodySpec",
    "CapillaryBody",
    "ball",
    "box",
    "ellipsoid",
    "lp_ball",
    "double_cap",
    "diag_scaled_cap",
    "custom_radial",
    "support",
    "gauge",
    "volume",
    "polar_gauge",
    "has_closed_form_polar",
    "scaled",
    "capillary_support",
    "is_theta_capillary",
    "is_convex",
    "body_from_json",
    "KINDS",
]

KINDS = (
    "ball",
    "box",
    "ellipsoid",
    "lp_ball",
    "double_cap",
    "diag_scaled_cap",
    "custom_radial",
)


def _freeze(params):
    return json.dumps(params, sort_keys=True)


@dataclass(frozen=True)
class BodySpec:
    kind: str
    dim: int
    params: dict = field(hash=False, compare=False)
    name: str = ""
    _key: str = field(init=False, repr=False, default="")

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown body kind {self.kind!r}; expected one of {KINDS}")
        if int(self.dim) < 2:
            raise ValueError("bodies need dim >= 2")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "_key", _freeze(self.params))
        if not self.name:
            object.__setattr__(self, "name", self.kind)
        _validate(self)

    def __eq__(self, other):
        return (
            isinstance(other, BodySpec)
            and (self.kind, self.dim, self._key) == (other.kind, other.dim, other._key)
        )

    def __hash__(self):
        return hash((self.kind, self.dim, self._key))

    def to_json(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "params": self.params, "name": self.name}


@dataclass(frozen=True)
class CapillaryBody:
    """The upper half of an unconditional body, read through cap directions."""

    base: BodySpec
    angle: cg.ContactAngle

    def __post_init__(self):
        object.__setattr__(self, "angle", cg.as_angle(self.angle))


def _vector(params, key, dim):
    a = np.asarray(params[key], dtype=float)
    if a.shape != (dim,) or not np.all(a > 0):
        raise ValueError(f"{key} must be {dim} positive numbers")
    return a


def _p_value(p):
    return math.inf if p in ("inf", math.inf) else float(p)


def _validate(body):
    p, n = body.params, body.dim
    if body.kind == "ball":
        if not float(p["radius"]) > 0:
            raise ValueError("radius must be positive")
    elif body.kind == "box":
        _vector(p, "half_widths", n)
    elif body.kind == "ellipsoid":
        _vector(p, "semi_axes", n)
    elif body.kind == "lp_ball":
        if not _p_value(p["p"]) >= 1 or not float(p.get("scale", 1.0)) > 0:
            raise ValueError("lp_ball needs p >= 1 and scale > 0")
    elif body.kind == "double_cap":
        cg.ContactAngle(p["theta"]).require_not_obtuse("double_cap")
        if not float(p.get("scale", 1.0)) > 0:
            raise ValueError("scale must be positive")
    elif body.kind == "diag_scaled_cap":
        cg.ContactAngle(p["theta"]).require_not_obtuse("diag_scaled_cap")
        _vector(p, "diag", n)
    elif body.kind == "custom_radial":
        if n not in (2, 3):
            raise ValueError("custom_radial bodies exist for n in (2, 3)")
        radii = np.asarray(p["radii"], dtype=float)
        if radii.ndim != 1 or not np.all(radii > 0):
            raise ValueError("custom_radial radii must be strictly positive")
        mesh = _mesh(n, int(p["resolution"]))
        if radii.size != mesh.first.sum():
            raise ValueError(
                f"custom_radial needs {int(mesh.first.sum())} radii "
                f"(first-orthant mesh nodes), got {radii.size}"
            )


def ball(n, radius=1.0, name=None):
    return BodySpec("ball", n, {"radius": float(radius)}, name or f"ball(r={radius:g})")


def box(half_widths, name=None):
    a = [float(v) for v in half_widths]
    return BodySpec("box", len(a), {"half_widths": a}, name or f"box{tuple(a)}")


def ellipsoid(semi_axes, name=None):
    a = [float(v) for v in semi_axes]
    return BodySpec("ellipsoid", len(a), {"semi_axes": a}, name or f"ellipsoid{tuple(a)}")


def lp_ball(n, p, scale=1.0, name=None):
    pv = "inf" if _p_value(p) == math.inf else float(p)
    return BodySpec("lp_ball", n, {"p": pv, "scale": float(scale)}, name or f"l{pv}_ball")


def double_cap(n, theta, scale=1.0, name=None):
    return BodySpec(
        "double_cap", n, {"theta": float(theta), "scale": float(scale)},
        name or f"cap(theta={float(theta):.6g}, scale={scale:g})",
    )


def diag_scaled_cap(theta, diag, name=None):
    a = [float(v) for v in diag]
    return BodySpec(
        "diag_scaled_cap", len(a), {"theta": float(theta), "diag": a},
        name or f"diag{tuple(a)}*cap(theta={float(theta):.6g})",
    )


class _Mesh:
    """Full-sphere mesh with its grid layout and orthant mirror map.

    ``n = 2``: ``m`` nodes at uniform offset angles.  ``n = 3``: ``m // 2``
    rings of constant ``z`` (ascending) times ``m`` offset azimuths, node index
    ``ring * m + azimuth``.
    """

    def __init__(self, n, resolution):
        self.rule = sphere_rule(n, resolution)
        u = self.rule.nodes
        self.n = n
        self.m = m = resolution
        self.first = np.all(u > 0, axis=1)
        # index of the first-orthant node with the same |coordinates|
        k = np.arange(m) % (m // 2)
        az = np.where(k < m // 4, k, m // 2 - 1 - k)
        if n == 2:
            full = az
        else:
            nz = m // 2
            iz = np.arange(nz)
            iz = np.where(iz >= nz // 2, iz, nz - 1 - iz)
            full = ((iz[:, None]) * m + az[None, :]).ravel()
            self.z = u[::m, 2]
        first_idx = np.flatnonzero(self.first)
        position = np.full(u.shape[0], -1)
        position[first_idx] = np.arange(first_idx.size)
        self.mirror = position[full]
        assert np.all(self.mirror >= 0)
        self.neighbours = self._neighbours()

    def _neighbours(self):
        m = self.m
        j = np.arange(m)
        if self.n == 2:
            return np.stack([j, (j + 1) % m], axis=1)
        nz = m // 2
        i = np.arange(nz - 1)[:, None]
        a = (i * m + j).ravel()
        b = (i * m + (j + 1) % m).ravel()
        c = ((i + 1) * m + (j + 1) % m).ravel()
        d = ((i + 1) * m + j).ravel()
        return np.concatenate([np.stack(p, axis=1) for p in ((a, b), (a, d), (a, c), (b, d))])

    def azimuth_cell(self, y):
        """Index ``j`` with the azimuth of ``y`` between nodes ``j`` and ``j + 1``."""
        step = 2 * math.pi / self.m
        phi = np.mod(np.arctan2(y[..., 1], y[..., 0]), 2 * math.pi)
        return np.floor(phi / step - 0.5).astype(int) % self.m


@functools.lru_cache(maxsize=16)
def _mesh(n, resolution):
    return _Mesh(n, resolution)


def custom_radial(n, radial, resolution=64, name=None):
    """Star body with radial function ``radial`` sampled on a full-sphere mesh.

    ``radial`` is a callable on unit vectors of shape ``(m, n)``; it is only
    evaluated on first-orthant nodes and mirrored, so the body is unconditional
    by construction.  Alternatively pass the array of first-orthant radii.
    """
    mesh = _mesh(n, int(resolution))
    u_first = mesh.rule.nodes[mesh.first]
    radii = radial(u_first) if callable(radial) else radial
    radii = [float(r) for r in np.asarray(radii, dtype=float)]
    return BodySpec(
        "custom_radial", n, {"resolution": int(resolution), "radii": radii},
        name or "custom_radial",
    )


def _radial_data(body):
    mesh = _mesh(body.dim, int(body.params["resolution"]))
    rho = np.asarray(body.params["radii"], dtype=float)[mesh.mirror]
    return mesh, rho


def _plane(P):
    """Rows ``w`` with ``<w, P_k> = 1`` for the vertices ``P_k`` of each simplex."""
    return np.linalg.solve(P, np.ones(P.shape[:-1])[..., None])[..., 0]


@functools.lru_cache(maxsize=32)
def _radial_surface(body):
    """Planes of the polyhedral surface through the scaled mesh points.

    In the plane this is the polygon joining consecutive points.  In space,
    points in convex position use their convex hull.  Otherwise each lat-lon
    quad carries both diagonal splits and the gauge takes the outer one, which
    keeps the surface invariant under coordinate reflections; the rings
    nearest the poles are closed by a fan to an apex on the axis, placed where
    the axis leaves the convex hull of the ring.
    """
    mesh, rho = _radial_data(body)
    P = mesh.rule.nodes * rho[:, None]
    m = mesh.m
    j = np.arange(m)
    if mesh.n == 2:
        return {"edges": _plane(np.stack([P[j], P[(j + 1) % m]], axis=1))}
    eq = ConvexHull(P).equations
    hull = eq[:, :-1] / (-eq[:, -1:])
    if np.all((P @ hull.T).max(axis=1) >= 1 - 1e-10):
        return {"hull": hull}
    nz = m // 2
    i = np.arange(nz - 1)[:, None]
    A = P[(i * m + j)]
    B = P[(i * m + (j + 1) % m)]
    C = P[((i + 1) * m + (j + 1) % m)]
    D = P[((i + 1) * m + j)]
    splits = [_plane(np.stack(t, axis=-2)) for t in ((A, B, C), (A, C, D), (A, B, D), (B, C, D))]
    ring = P[(nz - 1) * m + j]
    low = np.array([[0.0, 0.0, ring[:, 2].min() - 1.0]])
    eq = ConvexHull(np.concatenate([ring, low])).equations
    up = eq[:, 2] > 1e-12
    height = float(np.min(-eq[up, 3] / eq[up, 2]))
    apex = np.broadcast_to([0.0, 0.0, height], ring.shape)
    top = _plane(np.stack([apex, ring, ring[(j + 1) % m]], axis=1))
    bottom = top * [1.0, 1.0, -1.0]
    return {"quads": np.stack(splits), "top": top, "bottom": bottom}


def _custom_gauge(body, y):
    mesh = _mesh(body.dim, int(body.params["resolution"]))
    surf = _radial_surface(body)
    y = np.asarray(y, dtype=float)
    if "hull" in surf:
        return np.maximum((y @ surf["hull"].T).max(axis=-1), 0.0)
    j = mesh.azimuth_cell(y)
    if mesh.n == 2:
        return np.einsum("...i,...i->...", surf["edges"][j], y)
    norm = np.linalg.norm(y, axis=-1)
    z = y[..., 2] / np.where(norm > 0, norm, 1.0)
    ring = np.searchsorted(mesh.z, z) - 1
    nz = mesh.z.size
    inner = np.clip(ring, 0, nz - 2)
    w = surf["quads"][:, inner, j]
    g = np.einsum("k...i,...i->k...", w, y)
    out = np.minimum(np.maximum(g[0], g[1]), np.maximum(g[2], g[3]))
    out = np.where(ring >= nz - 1, np.einsum("...i,...i->...", surf["top"][j], y), out)
    out = np.where(ring < 0, np.einsum("...i,...i->...", surf["bottom"][j], y), out)
    return np.where(norm > 0, out, 0.0)


def _dual_exponent(p):
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1)


def _pnorm(y, p):
    y = np.abs(y)
    if p == math.inf:
        return y.max(axis=-1)
    if p == 1:
        return y.sum(axis=-1)
    return (y**p).sum(axis=-1) ** (1.0 / p)


def _out(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def support(body, y):
    """Support function ``h_K(y) = max_{z in K} <z, y>``.

    ``custom_radial`` bodies return the exact support of the polytope spanned
    by the mesh points, a lower bound that is first-order accurate in the mesh
    size.
    """
    y = np.asarray(y, dtype=float)
    p, k = body.params, body.kind
    if k == "ball":
        return _out(p["radius"] * np.linalg.norm(y, axis=-1))
    if k == "box":
        return _out(np.abs(y) @ np.asarray(p["half_widths"]))
    if k == "ellipsoid":
        return _out(np.linalg.norm(y * np.asarray(p["semi_axes"]), axis=-1))
    if k == "lp_ball":
        return _out(p["scale"] * _pnorm(y, _dual_exponent(_p_value(p["p"]))))
    if k == "double_cap":
        return _out(p["scale"] * cg.support_C(y, p["theta"]))
    if k == "diag_scaled_cap":
        return _out(cg.support_C(y * np.asarray(p["diag"]), p["theta"]))
    mesh, rho = _radial_data(body)
    pts = mesh.rule.nodes * rho[:, None]
    return _out(np.max(y @ pts.T, axis=-1))


def gauge(body, y):
    """Minkowski functional ``p_K(y) = inf{t > 0 : y in t K}``."""
    y = np.asarray(y, dtype=float)
    p, k = body.params, body.kind
    if k == "ball":
        return _out(np.linalg.norm(y, axis=-1) / p["radius"])
    if k == "box":
        return _out(np.max(np.abs(y) / np.asarray(p["half_widths"]), axis=-1))
    if k == "ellipsoid":
        return _out(np.linalg.norm(y / np.asarray(p["semi_axes"]), axis=-1))
    if k == "lp_ball":
        return _out(_pnorm(y, _p_value(p["p"])) / p["scale"])
    if k == "double_cap":
        return _out(cg.gauge_C(y, p["theta"]) / p["scale"])
    if k == "diag_scaled_cap":
        return _out(cg.gauge_C(y / np.asarray(p["diag"]), p["theta"]))
    return _out(_custom_gauge(body, y))


def has_closed_form_polar(body) -> bool:
    return body.kind != "custom_radial"


def polar_gauge(body, y):
    """Gauge of the polar body, ``p_{K polar} = h_K``; catalog kinds only."""
    if not has_closed_form_polar(body):
        raise ValueError(f"{body.kind} bodies have no closed-form polar gauge")
    return support(body, y)


def _kappa(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def volume(body) -> float:
    """Lebesgue volume, in closed form for catalog kinds."""
    from .functionals import vol_cap_hat

    p, k, n = body.params, body.kind, body.dim
    if k == "ball":
        return _kappa(n) * p["radius"] ** n
    if k == "box":
        return 2.0**n * float(np.prod(p["half_widths"]))
    if k == "ellipsoid":
        return _kappa(n) * float(np.prod(p["semi_axes"]))
    if k == "lp_ball":
        q = _p_value(p["p"])
        unit = 2.0**n if q == math.inf else (2 * math.gamma(1 + 1 / q)) ** n / math.gamma(1 + n / q)
        return unit * p["scale"] ** n
    if k == "double_cap":
        return 2.0 * vol_cap_hat(n, p["theta"]) * p["scale"] ** n
    if k == "diag_scaled_cap":
        return 2.0 * vol_cap_hat(n, p["theta"]) * float(np.prod(p["diag"]))
    mesh, rho = _radial_data(body)
    return float(mesh.rule.weights @ rho**n) / n


def scaled(body, lam):
    """The dilate ``lam * K``."""
    lam = float(lam)
    if not lam > 0:
        raise ValueError("scale factor must be positive")
    p = dict(body.params)
    k = body.kind
    if k == "ball":
        p["radius"] *= lam
    elif k == "box":
        p["half_widths"] = [a * lam for a in p["half_widths"]]
    elif k == "ellipsoid":
        p["semi_axes"] = [a * lam for a in p["semi_axes"]]
    elif k in ("lp_ball", "double_cap"):
        p["scale"] = p.get("scale", 1.0) * lam
    elif k == "diag_scaled_cap":
        p["diag"] = [a * lam for a in p["diag"]]
    else:
        p["radii"] = [r * lam for r in p["radii"]]
    return BodySpec(k, body.dim, p, f"{lam:g}*{body.name}")


def capillary_support(cb, p):
    """``s(zeta) = h_K(zeta + cos(theta) E_n)`` for cap point(s) ``p``."""
    x = np.asarray(getattr(p, "x", p), dtype=float)
    return support(cb.base, x)


def is_theta_capillary(diag, angle, tol=1e-12):
    """Does ``diag(a) C_theta`` still meet the hyperplane at angle ``theta``?

    The boundary point ``sin(theta) E_i + cos(theta) E_n`` of the dilated cap
    has normal making angle ``theta`` with ``E_n`` iff
    ``cos^2 + (a_n / a_i)^2 sin^2 - 1`` vanishes.

    Returns
    -------
    (bool, ndarray)
        The verdict and the per-axis defects for ``i = 1..n-1``.
    """
    angle = cg.as_angle(angle)
    angle.require_not_obtuse("is_theta_capillary")
    a = np.asarray(diag, dtype=float)
    if not np.all(a > 0):
        raise ValueError("diagonal entries must be strictly positive")
    c, s = angle.cos, angle.sin
    defects = c * c + (a[-1] / a[:-1]) ** 2 * s * s - 1.0
    return bool(np.all(np.abs(defects) <= tol)), defects


def is_convex(body, pairs=2000, seed=0, tol=1e-9):
    """Midpoint convexity of the gauge on seeded direction pairs.

    Catalog kinds are convex by construction.
    """
    if body.kind != "custom_radial":
        return True
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((pairs, body.dim))
    z = rng.standard_normal((pairs, body.dim))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    # also pair each mesh vertex with its neighbours' directions, where a dent shows first
    mesh = _mesh(body.dim, int(body.params["resolution"]))
    u = mesh.rule.nodes
    pairs = mesh.neighbours
    y = np.concatenate([y, u[pairs[:, 0]]])
    z = np.concatenate([z, u[pairs[:, 1]]])
    lhs = gauge(body, 0.5 * (y + z))
    rhs = 0.5 * (gauge(body, y) + gauge(body, z))
    return bool(np.all(lhs <= rhs + tol))


_BUILDERS = {
    "ball": lambda n, p: ball(n, p.get("radius", 1.0)),
    "box": lambda n, p: box(p.get("half_widths", [1.0] * n)),
    "ellipsoid": lambda n, p: ellipsoid(p.get("semi_axes", [1.0] * n)),
    "lp_ball": lambda n, p: lp_ball(n, p.get("p", 2.0), p.get("scale", 1.0)),
    "double_cap": lambda n, p: double_cap(n, p["theta"], p.get("scale", 1.0)),
    "diag_scaled_cap": lambda n, p: diag_scaled_cap(p["theta"], p["diag"]),
}


def body_from_json(data, dim=None, theta=None):
    """Build a body from its JSON form or a bare kind name.

    Missing params fall back to unit defaults; cap kinds take ``theta`` from
    the argument when the params omit it.
    """
    if isinstance(data, str):
        text = data.strip()
        data = json.loads(text) if text.startswith("{") else {"kind": text}
    data = dict(data)
    kind = data.get("kind")
    n = int(data.get("dim", dim or 2))
    params = dict(data.get("params", {}))
    if kind in ("double_cap", "diag_scaled_cap") and "theta" not in params:
        if theta is None:
            raise ValueError(f"{kind} needs a theta")
        params["theta"] = float(theta)
    if kind == "diag_scaled_cap" and "diag" not in params:
        params["diag"] = [1.0] * n
    if kind == "custom_radial":
        body = BodySpec(kind, n, params, data.get("name", ""))
    elif kind in _BUILDERS:
        body = _BUILDERS[kind](n, params)
        if body.dim != n:
            raise ValueError(f"{kind} params describe dim {body.dim}, not {n}")
    else:
        raise ValueError(f"unknown body kind {kind!r}")
    if data.get("name"):
        body = BodySpec(body.kind, body.dim, body.params, data["name"])
    return body
