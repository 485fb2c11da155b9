"""Contour dynamics for 2D Euler vortex patches in a disk."""

__version__ = "0.1.0"

from .geometry import (ClosedCurve, DiskDomain, GeometryError, curvature,
                       invert_point, min_distance, resample_constant_speed,
                       signed_area)
from .kernel import (DomainError, KernelError, NearSingularError, Patch,
                     PatchSet, QuadratureSpec, VelocityJet, free_velocity,
                     image_velocity, log_lipschitz_check, oracle_velocity_area,
                     total_velocity, velocity_gradient, velocity_hessian)

__all__ = [
    "ClosedCurve", "DiskDomain", "GeometryError", "curvature", "invert_point",
    "min_distance", "resample_constant_speed", "signed_area",
    "DomainError", "KernelError", "NearSingularError", "Patch", "PatchSet",
    "QuadratureSpec", "VelocityJet", "free_velocity", "image_velocity",
    "log_lipschitz_check", "oracle_velocity_area", "total_velocity",
    "velocity_gradient", "velocity_hessian",
]
