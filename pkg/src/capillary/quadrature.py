"""Deterministic quadrature on the cap, the sphere and the positive orthant.

Cap rules place Gauss-Legendre nodes strictly inside every panel, so no node
ever sits on the cap boundary ``x_n = cos(theta)`` (which is also where the
branches of the double-cap support function meet).  By default the panels are
split along the coordinate hyperplanes ``x_i = 0``: support functions of
unconditional polytopes have kinks exactly there, and Gauss-Legendre is
spectrally accurate on each smooth piece.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cap_geometry import as_angle
from .errors import NonFiniteIntegrandError

__all__ = [
    "QuadratureRule",
    "cap_rule",
    "arc_rule",
    "sphere_rule",
    "orthant_polar_rule",
    "integrate",
    "orthant_mc",
    "gauss_legendre",
    "cap_measure",
]

# Rate guaranteed for integrands whose derivative jumps somewhere off the panel
# breakpoints; smooth integrands converge spectrally.
DECLARED_ORDER = 2
MC_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    domain: str
    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    declared_order: int
    theta: float | None = None
    resolution: tuple = ()
    coords: dict = field(default_factory=dict)

    def __len__(self):
        return self.weights.size

    @property
    def measure(self) -> float:
        return float(self.weights.sum())


def gauss_legendre(m, a, b):
    """``m`` Gauss-Legendre nodes and weights on ``[a, b]``."""
    t, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * t, half * w


def _panels(m, breaks):
    nodes, weights = [], []
    per = m // (len(breaks) - 1)
    for a, b in zip(breaks[:-1], breaks[1:]):
        t, w = gauss_legendre(per, a, b)
        nodes.append(t)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def cap_measure(n, angle):
    """Closed-form ``(n-1)``-measure of the cap ``S^{n-1}_theta``."""
    angle = as_angle(angle)
    if n == 2:
        return 2.0 * angle.theta
    if n == 3:
        return 2.0 * math.pi * (1.0 - angle.cos)
    raise ValueError(f"cap rules exist for n in (2, 3), got n={n}")


def arc_rule(angle, breaks, per_panel):
    """Composite Gauss-Legendre rule on the 2-D cap arc with explicit breakpoints.

    ``breaks`` are polar angles ``phi`` (``x = (cos phi, sin phi)``) inside
    ``[pi/2 - theta, pi/2 + theta]``; the endpoints are added automatically.
    """
    angle = as_angle(angle)
    lo, hi = math.pi / 2 - angle.theta, math.pi / 2 + angle.theta
    pts = sorted({lo, hi, *(b for b in breaks if lo < b < hi)})
    phi, w = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        t, wt = gauss_legendre(per_panel, a, b)
        phi.append(t)
        w.append(wt)
    phi = np.concatenate(phi)
    w = np.concatenate(w)
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return QuadratureRule(
        "cap", 2, nodes, w, DECLARED_ORDER, angle.theta, (phi.size,), {"phi": phi}
    )


def cap_rule(n, angle, resolution, split_axes=True):
    """Quadrature on the cap ``{x in S^{n-1} : x_n >= cos(theta)}``.

    Parameters
    ----------
    n : int
        Ambient dimension, 2 or 3.
    angle : ContactAngle or float
        Any regime is accepted; obtuse caps are larger than a hemisphere.
    resolution : int or (int, int)
        ``n = 2``: number of arc nodes.  ``n = 3``: ``(polar, azimuth)`` node
        counts; a bare int ``r`` means ``(r, 2 r)``.
    split_axes : bool
        Split panels at the coordinate hyperplanes.  When False the ``n = 2``
        rule is a single Gauss-Legendre panel and the ``n = 3`` azimuth is the
        uniform (periodic trapezoid) grid; the spectral differentiation in
        :mod:`capillary.linearized` needs that layout.

    Returns
    -------
    QuadratureRule
        Nodes are the sphere representatives ``x``.  ``coords`` carries the
        parameter grids (``phi`` for ``n = 2``; ``alpha``, ``azimuth`` and the
        tensor ``shape`` for ``n = 3``).
    """
    angle = as_angle(angle)
    theta = angle.theta
    if n == 2:
        m = int(resolution if np.isscalar(resolution) else resolution[0])
        if m < 4:
            raise ValueError("cap_rule resolution must be >= 4")
        lo, hi = math.pi / 2 - theta, math.pi / 2 + theta
        if split_axes:
            if m % 2:
                raise ValueError("split cap rules need an even number of nodes")
            phi, w = _panels(m, [lo, math.pi / 2, hi])
        else:
            phi, w = gauss_legendre(m, lo, hi)
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        coords = {"phi": phi}
        res = (m,)
    elif n == 3:
        if np.isscalar(resolution):
            na, nz = int(resolution), 2 * int(resolution)
        else:
            na, nz = (int(r) for r in resolution)
        if na < 4 or nz < 4:
            raise ValueError("cap_rule resolution must be >= 4")
        if nz % 4:
            raise ValueError("azimuth node count must be a multiple of 4 for mirror symmetry")
        alpha, wa = gauss_legendre(na, 0.0, theta)
        wa = wa * np.sin(alpha)
        if split_axes:
            az, wz = _panels(nz, [k * math.pi / 2 for k in range(5)])
        else:
            az = (np.arange(nz) + 0.5) * (2 * math.pi / nz)
            wz = np.full(nz, 2 * math.pi / nz)
        A, Z = np.meshgrid(alpha, az, indexing="ij")
        nodes = np.stack(
            [np.sin(A) * np.cos(Z), np.sin(A) * np.sin(Z), np.cos(A)], axis=-1
        ).reshape(-1, 3)
        w = np.outer(wa, wz).ravel()
        coords = {"alpha": alpha, "azimuth": az, "shape": (na, nz), "split": split_axes}
        res = (na, nz)
    else:
        raise ValueError(f"cap rules exist for n in (2, 3), got n={n}")
    if np.any(nodes[:, -1] <= angle.cos):
        raise AssertionError("cap node placed on or below the cap boundary")
    return QuadratureRule("cap", n, nodes, w, DECLARED_ORDER, theta, res, coords)


def sphere_rule(n, resolution):
    """Full-sphere rule whose node set is invariant under all coordinate sign flips.

    ``n = 2``: uniform offset angles ``(k + 1/2) 2 pi / m`` (periodic
    trapezoid).  ``n = 3``: Gauss-Legendre in ``cos(polar)`` times uniform offset
    azimuth.  ``resolution`` must be a multiple of 4.
    """
    m = int(resolution)
    if m < 8 or m % 4:
        raise ValueError("sphere_rule resolution must be a multiple of 4 and >= 8")
    if n == 2:
        phi = (np.arange(m) + 0.5) * (2 * math.pi / m)
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        w = np.full(m, 2 * math.pi / m)
        return QuadratureRule("sphere", 2, nodes, w, DECLARED_ORDER, None, (m,), {"phi": phi})
    if n == 3:
        z, wz = np.polynomial.legendre.leggauss(m // 2)
        az = (np.arange(m) + 0.5) * (2 * math.pi / m)
        Z, A = np.meshgrid(z, az, indexing="ij")
        r = np.sqrt(1 - Z * Z)
        nodes = np.stack([r * np.cos(A), r * np.sin(A), Z], axis=-1).reshape(-1, 3)
        w = np.outer(wz, np.full(m, 2 * math.pi / m)).ravel()
        return QuadratureRule(
            "sphere", 3, nodes, w, DECLARED_ORDER, None, (m // 2, m), {"shape": (m // 2, m)}
        )
    raise ValueError(f"sphere rules exist for n in (2, 3), got n={n}")


def orthant_polar_rule(radius, m_r, m_phi, breaks=()):
    """Tensor rule on the truncated quadrant ``{0 < |x| < radius}`` of the plane.

    Gauss-Legendre in the radius times composite Gauss-Legendre in the polar
    angle, split at ``breaks`` (angles in ``(0, pi/2)`` where the integrand
    jumps).  Used as a deterministic cross-check of :func:`orthant_mc`.
    """
    pts = sorted({0.0, math.pi / 2, *(b for b in breaks if 0 < b < math.pi / 2)})
    phi, wphi = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        t, w = gauss_legendre(m_phi, a, b)
        phi.append(t)
        wphi.append(w)
    phi = np.concatenate(phi)
    wphi = np.concatenate(wphi)
    r, wr = gauss_legendre(m_r, 0.0, radius)
    R, P = np.meshgrid(r, phi, indexing="ij")
    nodes = np.stack([R * np.cos(P), R * np.sin(P)], axis=-1).reshape(-1, 2)
    w = (np.outer(wr * r, wphi)).ravel()
    return QuadratureRule("orthant", 2, nodes, w, DECLARED_ORDER, None, (m_r, phi.size),
                          {"radius": radius})


def integrate(rule, f):
    """``sum_i w_i f(node_i)``.

    ``f`` is a vectorized callable on the ``(N, n)`` node array, or an array of
    precomputed node values.  A non-finite value aborts with the offending node.
    """
    values = f(rule.nodes) if callable(f) else f
    values = np.broadcast_to(np.asarray(values, dtype=float), rule.weights.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteIntegrandError(i, rule.nodes[i].tolist(), float(values[i]))
    return float(rule.weights @ values)


def orthant_mc(n, integrand, samples, seed, scale=1.0):
    """Importance-sampled Monte Carlo over ``(0, inf)^n``.

    The proposal is a product of half-normals with standard deviation
    ``scale``; choose ``scale`` at least the radius over which the integrand
    decays like ``exp(-|x|^2 / 2)`` so the weights stay bounded.  Samples are
    drawn in fixed-size chunks, chunk ``k`` from ``default_rng([*seed, k])``
    (``seed`` is an int or a tuple of ints), so
    the estimate depends only on ``(samples, seed)``.

    Returns
    -------
    (estimate, standard_error)
    """
    if samples < 10_000:
        raise ValueError("orthant_mc needs at least 1e4 samples")
    if seed is None:
        raise ValueError("orthant_mc requires an explicit seed")
    key = [int(v) for v in np.atleast_1d(seed)]
    log_norm = n * math.log(2.0 / (scale * math.sqrt(2 * math.pi)))
    total = 0.0
    total_sq = 0.0
    done = 0
    k = 0
    while done < samples:
        m = min(MC_CHUNK, samples - done)
        rng = np.random.default_rng([*key, k])
        z = np.abs(rng.standard_normal((m, n))) * scale
        log_q = log_norm - 0.5 * np.einsum("ij,ij->i", z, z) / (scale * scale)
        vals = np.asarray(integrand(z), dtype=float) * np.exp(-log_q)
        total += float(vals.sum())
        total_sq += float(np.dot(vals, vals))
        done += m
        k += 1
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / (samples - 1))
