"""Flat Lagrangian H-umbilical immersions into H^n and their numerical verification."""

from .quat import HVector, Quaternion, StructureAxis, apply_structure, qmul, real_inner
from .functions import ScalarFunction
from .legendre import (
    CurveState,
    LegendreCoefficients,
    constraint_defect,
    integrate_curve,
    special_legendre_rhs,
    specialness_defect,
    standard_initial_frame,
)
from .builders import (
    TwistProfile,
    build_cone,
    build_cylinder,
    build_from_profile,
    build_surface_legendre,
    build_twisted_legendre,
    reparametrize_profile,
)

__all__ = [
    "CurveState",
    "HVector",
    "LegendreCoefficients",
    "Quaternion",
    "ScalarFunction",
    "StructureAxis",
    "TwistProfile",
    "apply_structure",
    "build_cone",
    "build_cylinder",
    "build_from_profile",
    "build_surface_legendre",
    "build_twisted_legendre",
    "constraint_defect",
    "integrate_curve",
    "qmul",
    "real_inner",
    "reparametrize_profile",
    "special_legendre_rhs",
    "specialness_defect",
    "standard_initial_frame",
]

__version__ = "0.1.0"
