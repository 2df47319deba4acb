"""Linearization of the volume product at the cap.

Functions on the cap are sampled on single-panel cap rules (``split_axes=False``):
for ``n = 2`` a Gauss-Legendre grid in the polar angle ``phi``, for ``n = 3`` a
Gauss-Legendre grid in the angle ``alpha`` from the pole times a uniform
azimuth grid.  Derivatives in the Gauss-Legendre directions come from the
interpolating polynomial (Legendre coefficients recovered exactly by the rule);
azimuth derivatives are trigonometric (FFT).

The centro-affine Laplacian is defined by
``Delta_C f + (n-1) f = Lap(f ell) + (n-1) f ell`` with ``Lap`` the round
Laplacian, and the cone-volume measure is ``ell / n`` times surface measure.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as L

from . import cap_geometry as cg
from .errors import ConvexityError
from .quadrature import QuadratureRule, cap_rule, gauss_legendre
from .verification import CheckResult

__all__ = [
    "CapFunction",
    "NeumannCosineSeries",
    "BoundaryConditionError",
    "linearized_rule",
    "round_laplacian",
    "centroaffine_laplacian",
    "theorem2_margin",
    "second_variation",
    "fd_cross_check",
    "product_curve",
    "random_series",
    "check_theorem2",
    "check_second_variation",
    "MIN_RESOLUTION",
]

MIN_RESOLUTION = 8
NEUMANN_ABORT = 1e-4
_LD = np.longdouble


class BoundaryConditionError(ValueError):
    """A cap function violates its boundary condition beyond tolerance."""


def linearized_rule(n, angle, resolution=64):
    """Single-panel cap rule used by this module (``resolution >= 8``)."""
    angle = cg.as_angle(angle)
    m = resolution if np.isscalar(resolution) else resolution[0]
    if m < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}")
    return cap_rule(n, angle, resolution, split_axes=False)


@functools.lru_cache(maxsize=32)
def _legendre_ops(m):
    """Matrices on ``m`` reference Gauss-Legendre nodes.

    Returns ``(D1, D2, B1, B0)``: first and second derivative at the nodes, and
    the first derivative and the value at the endpoints ``-1, 1`` (shape
    ``(2, m)``), all for the degree ``m - 1`` interpolant.  Built from the
    barycentric form, whose node weights for Gauss-Legendre points are
    ``(-1)^j sqrt((1 - t_j^2) w_j)``; diagonals use the negative-sum trick.
    Everything stays in extended precision: entries of the second-derivative
    matrix reach ``m^4``, so applying it in double precision costs about
    eight digits.
    """
    t, w = (np.asarray(v, dtype=_LD) for v in L.leggauss(m))
    bw = (-1.0) ** np.arange(m) * np.sqrt((1 - t * t) * w)
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    D1 = (bw[None, :] / bw[:, None]) / diff
    np.fill_diagonal(D1, 0.0)
    np.fill_diagonal(D1, -D1.sum(axis=1))
    D2 = 2 * D1 * (np.diag(D1)[:, None] - 1.0 / diff)
    np.fill_diagonal(D2, 0.0)
    np.fill_diagonal(D2, -D2.sum(axis=1))
    ends = np.array([-1.0, 1.0], dtype=_LD)
    q = bw[None, :] / (ends[:, None] - t[None, :])
    S = q.sum(axis=1, keepdims=True)
    dq = -q / (ends[:, None] - t[None, :])
    dS = dq.sum(axis=1, keepdims=True)
    B0 = q / S
    B1 = (dq * S - q * dS) / S**2
    return D1, D2, B1, B0


def _gl_ops(m, a, b):
    D1, D2, B1, _ = _legendre_ops(m)
    s = _LD(2) / (_LD(b) - _LD(a))
    return D1 * s, D2 * s * s, B1 * s


def _apply(op, values):
    return (op @ np.asarray(values, dtype=_LD)).astype(float)


def _fourier_derivative(values, order, axis=-1):
    m = values.shape[axis]
    k = np.fft.fftfreq(m, d=1.0 / m)
    if order % 2 and m % 2 == 0:
        k[m // 2] = 0.0
    factor = (1j * k) ** order
    shape = [1] * values.ndim
    shape[axis] = m
    spec = np.fft.fft(values, axis=axis) * factor.reshape(shape)
    return np.real(np.fft.ifft(spec, axis=axis))


@dataclass(frozen=True, eq=False)
class CapFunction:
    """Node values of a function on the cap.

    ``source`` optionally keeps an analytic description (a
    :class:`NeumannCosineSeries`) for checks that need values off the grid.
    """

    rule: QuadratureRule
    values: np.ndarray
    source: object | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.rule),):
            raise ValueError("one value per node is required")
        if self.rule.coords.get("split", False) or (self.rule.dim == 2 and len(self.rule.coords["phi"]) != len(self.rule)):
            raise ValueError("CapFunction needs a single-panel cap rule")
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.rule.dim

    @property
    def angle(self):
        return cg.as_angle(self.rule.theta)

    def like(self, values):
        return CapFunction(self.rule, values)

    @classmethod
    def from_callable(cls, rule, f):
        return cls(rule, np.asarray(f(rule.nodes), dtype=float))

    def grid(self):
        """Values reshaped to the tensor grid (``n = 3``) or as-is (``n = 2``)."""
        if self.n == 3:
            return self.values.reshape(self.rule.coords["shape"])
        return self.values

    def mirror_defect(self):
        """Largest change under the sign flips of the horizontal coordinates."""
        if self.n == 2:
            return float(np.abs(self.values - self.values[::-1]).max())
        g = self.grid()
        nz = g.shape[1]
        flip2 = g[:, ::-1]  # azimuth -> -azimuth
        flip1 = np.roll(g[:, ::-1], nz // 2, axis=1)  # azimuth -> pi - azimuth
        return float(max(np.abs(g - flip1).max(), np.abs(g - flip2).max()))

    def boundary_derivative(self):
        """Outward conormal derivative at the cap boundary (one value per boundary point).

        ``n = 2``: ``-d/dphi`` at ``phi = pi/2 - theta`` and ``+d/dphi`` at
        ``phi = pi/2 + theta``.  ``n = 3``: ``d/dalpha`` at ``alpha = theta`` for each
        azimuth.
        """
        th = self.angle.theta
        if self.n == 2:
            _, _, B1 = _gl_ops(len(self.rule), math.pi / 2 - th, math.pi / 2 + th)
            d = _apply(B1, self.values)
            return np.array([-d[0], d[1]])
        g = self.grid()
        _, _, B1 = _gl_ops(g.shape[0], 0.0, th)
        return _apply(B1[1], g)

    def neumann_defect(self):
        return float(np.abs(self.boundary_derivative()).max())


def round_laplacian(g: CapFunction) -> CapFunction:
    """Laplace-Beltrami operator of the unit sphere applied to node values.

    ``n = 2``: ``d^2/dphi^2``.  ``n = 3``:
    ``g_aa + cot(a) g_a + g_zz / sin(a)^2`` in (polar angle, azimuth).
    """
    rule = g.rule
    th = g.angle.theta
    if g.n == 2:
        m = len(rule)
        if m < MIN_RESOLUTION:
            raise ValueError(f"resolution must be >= {MIN_RESOLUTION}")
        _, D2, _ = _gl_ops(m, math.pi / 2 - th, math.pi / 2 + th)
        return g.like(_apply(D2, g.values))
    grid = g.grid()
    na, nz = grid.shape
    if min(na, nz) < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}")
    D1, D2, _ = _gl_ops(na, 0.0, th)
    a = rule.coords["alpha"][:, None]
    out = _apply(D2, grid) + (np.cos(a) / np.sin(a)) * _apply(D1, grid)
    out = out + _fourier_derivative(grid, 2, axis=1) / np.sin(a) ** 2
    return g.like(out.ravel())


def centroaffine_laplacian(f: CapFunction, angle=None) -> CapFunction:
    """``Lap(f ell) + (n - 1) f (ell - 1)`` at the nodes."""
    angle = cg.as_angle(angle if angle is not None else f.angle)
    ell = cg.ell(f.rule.nodes, angle)
    lap = round_laplacian(f.like(f.values * ell))
    return f.like(lap.values + (f.n - 1) * f.values * (ell - 1))


def _integrate(f: CapFunction, values):
    return float(f.rule.weights @ values)


def theorem2_margin(f: CapFunction, angle=None, tol=1e-10) -> float:
    """``2n (int f dV)^2 / int dV - int f (Delta_C f + 2n f) dV`` with ``dV = ell dsigma / n``.

    ``f`` must be unconditional and satisfy the Neumann condition; a conormal
    derivative above ``1e-4`` aborts.
    """
    angle = cg.as_angle(angle if angle is not None else f.angle)
    n = f.n
    scale = max(1.0, float(np.abs(f.values).max()))
    if f.mirror_defect() > tol * scale:
        raise ValueError(f"f is not unconditional (defect {f.mirror_defect():.3e})")
    defect = f.neumann_defect()
    if defect > NEUMANN_ABORT * scale:
        raise BoundaryConditionError(f"Neumann condition violated: conormal derivative {defect:.3e}")
    dv = cg.ell(f.rule.nodes, angle) / n
    lap = centroaffine_laplacian(f, angle).values
    lhs = _integrate(f, f.values * (lap + 2 * n * f.values) * dv)
    mean = _integrate(f, f.values * dv)
    total = _integrate(f, dv)
    return 2 * n * mean * mean / total - lhs


def capillary_defect(psi: CapFunction, angle=None):
    """``d_mu psi - cot(theta) psi`` at the boundary points."""
    angle = cg.as_angle(angle if angle is not None else psi.angle)
    return psi.boundary_derivative() - _boundary_values(psi) * angle.cos / angle.sin


def _boundary_values(g: CapFunction):
    """Interpolated values at the boundary points, ordered as in ``boundary_derivative``."""
    if g.n == 2:
        return _apply(_legendre_ops(len(g.rule))[3], g.values)
    grid = g.grid()
    return _apply(_legendre_ops(grid.shape[0])[3][1], grid)


def second_variation(psi: CapFunction, angle=None, tol=1e-5) -> float:
    """Second derivative at ``t = 0`` of the volume product for ``h = ell + t psi``.

    Evaluates ``[int psi (Lap psi + (n-1) psi) int ell - 2n (int psi)^2
    + (n+1) int ell int psi^2 / ell] / n`` with surface-measure integrals.
    ``psi`` must satisfy ``d_mu psi = cot(theta) psi`` at the boundary.
    """
    angle = cg.as_angle(angle if angle is not None else psi.angle)
    n = psi.n
    scale = max(1.0, float(np.abs(psi.values).max()))
    defect = float(np.abs(capillary_defect(psi, angle)).max())
    if defect > tol * scale:
        raise BoundaryConditionError(f"capillary boundary condition violated by {defect:.3e}")
    ell = cg.ell(psi.rule.nodes, angle)
    lap = round_laplacian(psi).values
    p = psi.values
    total = (
        _integrate(psi, p * (lap + (n - 1) * p)) * _integrate(psi, ell)
        - 2 * n * _integrate(psi, p) ** 2
        + (n + 1) * _integrate(psi, ell) * _integrate(psi, p * p / ell)
    )
    return total / n


@dataclass(frozen=True)
class NeumannCosineSeries:
    """``f = sum_k coef[k] cos(k pi u)`` with ``u = (phi - pi/2) / theta`` on the 2-D cap arc.

    Every term is even about ``phi = pi/2`` and has zero derivative at both
    ends of the arc, so ``f`` is unconditional and satisfies the Neumann
    condition exactly.  ``psi = f ell`` then satisfies the capillary condition.
    """

    coef: tuple
    theta: float

    def _u(self, phi):
        return (np.asarray(phi, dtype=float) - math.pi / 2) / self.theta

    def derivatives(self, phi):
        """``(f, f', f'')`` with respect to ``phi``."""
        u = self._u(phi)
        k = np.arange(len(self.coef))
        c = np.asarray(self.coef, dtype=float)
        arg = np.pi * np.multiply.outer(u, k)
        om = np.pi * k / self.theta
        f = np.cos(arg) @ c
        f1 = -np.sin(arg) @ (c * om)
        f2 = -np.cos(arg) @ (c * om * om)
        return f, f1, f2

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.derivatives(np.arctan2(x[..., 1], x[..., 0]) % (2 * math.pi))[0]

    def on(self, rule) -> CapFunction:
        return CapFunction(rule, self.derivatives(rule.coords["phi"])[0], self)

    def psi_on(self, rule) -> CapFunction:
        """``f ell`` at the nodes, remembering the series."""
        ell = cg.ell(rule.nodes, self.theta)
        return CapFunction(rule, self.derivatives(rule.coords["phi"])[0] * ell, self)


def random_series(theta, modes, seed, decay=2.0, base=1.0):
    """Seeded admissible series ``base + sum_{k>=1} N(0,1) / (1 + k)^decay cos(k pi u)``."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    coef = rng.standard_normal(modes) / (1.0 + k) ** decay
    return NeumannCosineSeries((float(base), *map(float, coef)), float(cg.as_angle(theta).theta))


def _support_with_derivatives(series, angle, t, phi):
    """``h = ell (1 + t f)`` and its first two ``phi`` derivatives."""
    c = angle.cos
    ell = 1 - c * np.sin(phi)
    ell1 = -c * np.cos(phi)
    ell2 = c * np.sin(phi)
    if series is None:
        f, f1, f2 = np.ones_like(phi), np.zeros_like(phi), np.zeros_like(phi)
    else:
        f, f1, f2 = series.derivatives(phi)
    g, g1, g2 = 1 + t * f, t * f1, t * f2
    return ell * g, ell1 * g + ell * g1, ell2 * g + 2 * ell1 * g1 + ell * g2


def product_curve(series, angle, t, per_panel=96, check_points=4001):
    """``(vol_hat, vol_polar)`` of the planar body with support ``ell (1 + t f)`` on the cap.

    The boundary is ``X = h x + h' x_perp``; the closing segment lies on
    ``y = 0`` because ``h`` keeps the capillary condition.  The area is the
    shoelace integral ``(1/2) int X x X'`` taken with Gauss-Legendre in ``phi``,
    and ``X x X' = h (h + h'')``.  ``series=None`` means ``f = 1``.
    """
    angle = cg.as_angle(angle)
    lo, hi = math.pi / 2 - angle.theta, math.pi / 2 + angle.theta
    dense = np.linspace(lo, hi, check_points)
    h, _, h2 = _support_with_derivatives(series, angle, t, dense)
    if np.any(h + h2 <= 0) or np.any(h <= 0):
        raise ConvexityError(f"h + h'' <= 0 at t={t}; the perturbation is too large")
    # two panels keep the rule symmetric about pi/2
    area = polar = 0.0
    for a, b in ((lo, math.pi / 2), (math.pi / 2, hi)):
        phi, w = gauss_legendre(per_panel, a, b)
        h, h1, h2 = _support_with_derivatives(series, angle, t, phi)
        x = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        X = h[:, None] * x + h1[:, None] * np.stack([-x[:, 1], x[:, 0]], axis=-1)
        dX = (h + h2)[:, None] * np.stack([-x[:, 1], x[:, 0]], axis=-1)
        area += 0.5 * float(w @ (X[:, 0] * dX[:, 1] - X[:, 1] * dX[:, 0]))
        ell = 1 - angle.cos * x[:, 1]
        polar += 0.5 * float(w @ (ell**3 / h**2))
    return area, polar


def fd_cross_check(psi, angle=None, t_step=1e-3, per_panel=96):
    """Five-point second difference of the volume product along ``h = ell + t psi``.

    ``psi`` is a :class:`CapFunction` built from a :class:`NeumannCosineSeries`
    (as ``f ell``), or the series itself; ``n = 2`` only.  Returns
    ``(second_difference, first_difference)``.
    """
    series = psi.source if isinstance(psi, CapFunction) else psi
    if isinstance(psi, CapFunction) and psi.n != 2:
        raise ValueError("the finite-difference cross-check is planar")
    if not isinstance(series, NeumannCosineSeries):
        raise ValueError("fd_cross_check needs the analytic series behind psi")
    angle = cg.as_angle(angle if angle is not None else series.theta)
    P = {}
    for k in (-2, -1, 0, 1, 2):
        vol, pol = product_curve(series, angle, k * t_step, per_panel)
        P[k] = vol * pol
    second = (-P[2] + 16 * P[1] - 30 * P[0] + 16 * P[-1] - P[-2]) / (12 * t_step**2)
    first = (P[-2] - 8 * P[-1] + 8 * P[1] - P[2]) / (12 * t_step)
    return second, first


def check_theorem2(theta, seeds=range(20), resolution=64, modes=8, tol=1e-7):
    """Linearized-inequality margins for seeded admissible ``f`` plus equality at constants."""
    angle = cg.as_angle(theta)
    rule = linearized_rule(2, angle, resolution)
    margins = [theorem2_margin(random_series(angle, modes, s).on(rule), angle) for s in seeds]
    const = [abs(theorem2_margin(CapFunction(rule, np.full(len(rule), c)), angle)) for c in (1.0, 5.0)]
    # constants must give equality to 1e-10; rescaled to the headline tolerance
    worst = min(min(margins), (1e-10 - max(const)) * tol / 1e-10)
    return CheckResult(
        f"theorem2 n=2 theta={angle.theta:.6g}", len(margins), float(worst), tol,
        bool(worst >= -tol), int(min(seeds)) if len(seeds) else None, "spectral cap Laplacian",
        {"margins": margins, "constant_margins": const, "modes": modes, "resolution": resolution},
    )


def check_second_variation(theta, seeds=range(5), t_step=1e-3, resolution=64, modes=4):
    """Formula against the finite-difference second derivative, and the scaling direction."""
    angle = cg.as_angle(theta)
    rule = linearized_rule(2, angle, resolution)
    tol = max(1e-4, 10 * t_step**2)
    rows = []
    for s in seeds:
        series = random_series(angle, modes, s, base=0.0)
        psi = series.psi_on(rule)
        formula = second_variation(psi, angle)
        fd, first = fd_cross_check(psi, angle, t_step)
        rows.append({"seed": int(s), "formula": formula, "fd": fd, "first_difference": first})
    scaling = NeumannCosineSeries((1.0,), angle.theta)
    f0 = second_variation(scaling.psi_on(rule), angle)
    fd0, _ = fd_cross_check(scaling, angle, t_step)
    gap = max(abs(r["formula"] - r["fd"]) for r in rows)
    worst = min(tol - gap, (1e-8 - max(abs(f0), abs(fd0))) * tol / 1e-8)
    return CheckResult(
        f"second_variation n=2 theta={angle.theta:.6g}", len(rows), float(worst), tol,
        bool(worst >= -tol), int(min(seeds)), "five-point difference of the planar volume product",
        {"rows": rows, "scaling": {"formula": f0, "fd": fd0}, "t_step": t_step},
    )
