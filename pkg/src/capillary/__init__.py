"""Capillary convex geometry: cap potentials, polar volumes and the volume product."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .cap_geometry import CapPoint, ContactAngle, OrthantPoint, Regime, as_angle
from .bodies import BodySpec, CapillaryBody
from .quadrature import QuadratureRule, cap_rule, integrate
from .functionals import volume_product, vol_cap_hat

__all__ = [
    "__version__",
    "CapPoint",
    "ContactAngle",
    "OrthantPoint",
    "Regime",
    "as_angle",
    "BodySpec",
    "CapillaryBody",
    "QuadratureRule",
    "cap_rule",
    "integrate",
    "volume_product",
    "vol_cap_hat",
]
