"""Closed-form geometry of the capillary spherical cap.

Conventions
-----------
Points are numpy arrays whose last axis holds the ``n`` coordinates, so
every function below accepts either a single vector of shape ``(n,)`` or a
stack of vectors of shape ``(..., n)``.  The last coordinate is the height
``x_n`` above the supporting hyperplane; ``x'`` denotes the first ``n - 1``
coordinates.

The double cap ``C`` is the cap region together with its mirror image across
``x_n = 0``.  Its support function ``h_C`` and gauge ``p_C`` generate the
two quadratic potentials used throughout::

    V  = p_C**2 / 2        Vstar = h_C**2 / 2

which form a Legendre pair.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchError, RegimeError

__all__ = [
    "Regime",
    "ContactAngle",
    "CapPoint",
    "OrthantPoint",
    "ell",
    "support_C",
    "gauge_C",
    "V",
    "Vstar",
    "grad_V",
    "grad_Vstar",
    "det_hess_Vstar",
    "v_st",
    "hess_v_2d",
    "forward_map",
    "in_range_B",
]

_RIGHT_TOL = 8 * np.finfo(float).eps
CONE_TOL = 1e-12


class Regime(str, enum.Enum):
    ACUTE = "acute"
    RIGHT = "right"
    OBTUSE = "obtuse"


@dataclass(frozen=True)
class ContactAngle:
    """Contact angle ``theta`` in radians, ``0 < theta < pi``.

    ``cos`` is exactly zero for the right angle so that ``ell`` is
    identically one there (``math.cos(math.pi / 2)`` is ``6e-17``).
    """

    theta: float

    def __post_init__(self):
        theta = float(self.theta)
        if not (0.0 < theta < math.pi) or not math.isfinite(theta):
            raise ValueError(f"contact angle must lie in (0, pi), got {self.theta!r}")
        object.__setattr__(self, "theta", theta)

    @property
    def regime(self) -> Regime:
        if abs(self.theta - math.pi / 2) <= _RIGHT_TOL:
            return Regime.RIGHT
        return Regime.ACUTE if self.theta < math.pi / 2 else Regime.OBTUSE

    @property
    def cos(self) -> float:
        return 0.0 if self.regime is Regime.RIGHT else math.cos(self.theta)

    @property
    def sin(self) -> float:
        return 1.0 if self.regime is Regime.RIGHT else math.sin(self.theta)

    def require_not_obtuse(self, what: str = "this formula") -> None:
        if self.regime is Regime.OBTUSE:
            raise RegimeError(
                f"{what} requires an acute or right contact angle; "
                f"theta={self.theta!r} is obtuse"
            )

    def require_obtuse(self, what: str = "this construction") -> None:
        if self.regime is not Regime.OBTUSE:
            raise RegimeError(
                f"{what} requires an obtuse contact angle; theta={self.theta!r} "
                f"is {self.regime.value}"
            )


def as_angle(angle) -> ContactAngle:
    return angle if isinstance(angle, ContactAngle) else ContactAngle(float(angle))


@dataclass(frozen=True)
class CapPoint:
    """A point of the cap, stored both as ``zeta`` and ``x = zeta + cos(theta) E_n``.

    ``x`` lies on the unit sphere with ``x_n >= cos(theta)``.
    """

    x: np.ndarray
    zeta: np.ndarray
    angle: ContactAngle

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        zeta = np.asarray(self.zeta, dtype=float)
        if x.ndim != 1 or x.shape[0] < 2 or zeta.shape != x.shape:
            raise ValueError("CapPoint needs matching vectors of length n >= 2")
        c = self.angle.cos
        if abs(np.linalg.norm(x) - 1.0) > CONE_TOL:
            raise ValueError(f"x is not a unit vector: |x| = {np.linalg.norm(x)!r}")
        if x[-1] < c - CONE_TOL:
            raise ValueError(f"x_n = {x[-1]!r} lies below cos(theta) = {c!r}")
        shifted = zeta.copy()
        shifted[-1] += c
        if abs(np.linalg.norm(shifted) - 1.0) > CONE_TOL:
            raise ValueError("zeta + cos(theta) E_n is not a unit vector")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "zeta", zeta)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    @classmethod
    def from_x(cls, x, angle) -> "CapPoint":
        angle = as_angle(angle)
        x = np.asarray(x, dtype=float)
        zeta = x.copy()
        zeta[-1] -= angle.cos
        return cls(x, zeta, angle)

    @classmethod
    def from_zeta(cls, zeta, angle) -> "CapPoint":
        angle = as_angle(angle)
        zeta = np.asarray(zeta, dtype=float)
        x = zeta.copy()
        x[-1] += angle.cos
        return cls(x, zeta, angle)


@dataclass(frozen=True)
class OrthantPoint:
    """A point of the open positive orthant ``(0, inf)^n``."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or not np.all(y > 0):
            raise ValueError("orthant points need strictly positive coordinates")
        object.__setattr__(self, "y", y)


def _vec(y):
    y = np.asarray(getattr(y, "x", getattr(y, "y", y)))
    if y.dtype != np.longdouble:
        # extended precision passes through for the finite-difference oracles
        y = y.astype(float)
    if y.ndim == 0 or y.shape[-1] < 2:
        raise ValueError("expected vectors of dimension n >= 2 along the last axis")
    return y


def _split(y):
    """Return ``(|y|, |y'|, |y_n|)`` for a stack of vectors."""
    norm = np.linalg.norm(y, axis=-1)
    tang = np.linalg.norm(y[..., :-1], axis=-1)
    return norm, tang, np.abs(y[..., -1])


def ell(p, angle) -> np.ndarray | float:
    """Capillary support function of the cap itself, ``1 - cos(theta) x_n``.

    Parameters
    ----------
    p : CapPoint or array_like, shape (..., n)
        Sphere representative(s) ``x``.
    angle : ContactAngle or float

    Returns
    -------
    float or ndarray
    """
    angle = as_angle(angle)
    x = _vec(p)
    out = 1.0 - angle.cos * x[..., -1]
    return float(out) if np.ndim(out) == 0 else out


def support_C(y, angle):
    """Support function of the double cap ``C``.

    ``|y'| sin(theta)`` on the cylinder region ``|y_n| <= |y| cos(theta)`` and
    ``|y| - |y_n| cos(theta)`` elsewhere.  One-homogeneous and continuous across
    the cone separating the branches.
    """
    angle = as_angle(angle)
    angle.require_not_obtuse("support_C")
    y = _vec(y)
    c, s = angle.cos, angle.sin
    norm, tang, yn = _split(y)
    out = np.where(yn <= norm * c, tang * s, norm - yn * c)
    return float(out) if out.ndim == 0 else out


def _gauge_formula(y, c, s):
    _, tang, yn = _split(y)
    return (c * yn + np.sqrt(yn * yn + (s * tang) ** 2)) / (s * s)


def gauge_C(y, angle):
    """Minkowski functional of the double cap ``C``."""
    angle = as_angle(angle)
    angle.require_not_obtuse("gauge_C")
    out = _gauge_formula(_vec(y), angle.cos, angle.sin)
    return float(out) if out.ndim == 0 else out


def V(y, angle):
    """``p_C**2 / 2``.  Obtuse angles are accepted (same algebraic formula)."""
    angle = as_angle(angle)
    out = 0.5 * _gauge_formula(_vec(y), angle.cos, angle.sin) ** 2
    return float(out) if out.ndim == 0 else out


def Vstar(y, angle):
    """``h_C**2 / 2``, the Legendre transform of :func:`V`."""
    out = 0.5 * np.square(support_C(y, angle))
    return float(out) if np.ndim(out) == 0 else out


def grad_V(x, angle):
    """Gradient of ``V`` on the open orthant, in the ``(r, phi)`` parametrization.

    With ``r = sqrt(x_n**2 + |x'|**2 sin(theta)**2)`` and ``phi`` defined by
    ``cos(phi) = x_n / r``, ``sin(phi) = sin(theta) |x'| / r``::

        y_n  = r / sin^4 (1 + cos(theta) cos(phi)) (cos(theta) + cos(phi))
        |y'| = r / sin^3 (1 + cos(theta) cos(phi)) sin(phi)

    and ``y'`` points along ``x'``.
    """
    angle = as_angle(angle)
    x = _vec(x)
    if not np.all(x > 0):
        raise ValueError("grad_V is defined on the open orthant; got a nonpositive coordinate")
    c, s = angle.cos, angle.sin
    xp = x[..., :-1]
    xn = x[..., -1]
    tang = np.linalg.norm(xp, axis=-1)
    r = np.sqrt(xn * xn + (tang * s) ** 2)
    cos_phi = xn / r
    sin_phi = s * tang / r
    common = r * (1.0 + c * cos_phi)
    yn = common * (c + cos_phi) / s**4
    yt = common * sin_phi / s**3
    out = np.empty_like(x)
    out[..., :-1] = (yt / tang)[..., None] * xp
    out[..., -1] = yn
    return out


def grad_Vstar(y, angle):
    """Gradient of ``Vstar``; ``sin(theta)**2 (y', 0)`` on the cylinder region."""
    angle = as_angle(angle)
    angle.require_not_obtuse("grad_Vstar")
    y = _vec(y)
    c, s = angle.cos, angle.sin
    norm, _, yn = _split(y)
    cyl = yn <= norm * c
    out = np.zeros_like(y)
    out[..., :-1] = s * s * y[..., :-1]
    safe = np.where(norm > 0, norm, 1.0)
    h = norm - yn * c
    cap = h[..., None] * (y / safe[..., None])
    cap[..., -1] -= h * c * np.sign(y[..., -1])
    out = np.where(cyl[..., None], out, cap)
    out = np.where((norm > 0)[..., None], out, 0.0)
    return out


def det_hess_Vstar(y, angle):
    """Determinant of the Hessian of ``Vstar`` away from the critical cone.

    Zero on the cylinder region, ``(1 - cos(theta) |y_n| / |y|)**(n + 1)`` on the
    spherical region.  Raises :class:`BranchError` for points on the cone, where
    ``Vstar`` is only C^1.
    """
    angle = as_angle(angle)
    angle.require_not_obtuse("det_hess_Vstar")
    y = _vec(y)
    n = y.shape[-1]
    norm, _, yn = _split(y)
    if np.any(norm == 0):
        raise ValueError("det_hess_Vstar is undefined at the origin")
    ratio = yn / norm
    c = angle.cos
    if np.any(np.abs(ratio - c) <= CONE_TOL):
        raise BranchError("point lies on the critical cone |y_n| = |y| cos(theta)")
    out = np.where(ratio > c, (1.0 - ratio * c) ** (n + 1), 0.0)
    return float(out) if out.ndim == 0 else out


def v_st(s, t, angle):
    """Reduced potential ``v(s, t) = V(sqrt(x))`` with ``s = x_1 + ... + x_{n-1}``, ``t = x_n``."""
    angle = as_angle(angle)
    c, sn = angle.cos, angle.sin
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return ((1 + c * c) * t + sn * sn * s + 2 * c * np.sqrt(t * t + s * t * sn * sn)) / (2 * sn**4)


def hess_v_2d(s, t, angle):
    """Closed-form Hessian of ``v(s, t)``; rank one, sign opposite to ``cos(theta)``."""
    angle = as_angle(angle)
    if not (s > 0 and t > 0):
        raise ValueError("hess_v_2d needs s > 0 and t > 0")
    c, sn = angle.cos, angle.sin
    pref = -c / (4.0 * (t * t + s * t * sn * sn) ** 1.5)
    return pref * np.array([[t * t, -s * t], [-s * t, s * s]])


def in_range_B(y, angle, tol=0.0):
    """Membership in ``B = {y > 0 : y_n > |y| cos(theta)}`` up to ``tol``."""
    angle = as_angle(angle)
    y = _vec(y)
    norm = np.linalg.norm(y, axis=-1)
    return np.all(y > -tol, axis=-1) & (y[..., -1] - norm * angle.cos > -tol)


def forward_map(x, angle):
    """The diffeomorphism ``DV`` from the orthant onto ``B``."""
    angle = as_angle(angle)
    angle.require_not_obtuse("forward_map")
    y = grad_V(x, angle)
    if not np.all(in_range_B(y, angle, tol=1e-10)):
        raise RuntimeError("DV(x) left the range B; closed-form gradient is inconsistent")
    return y
