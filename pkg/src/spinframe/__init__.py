"""Spin fields over Cl(1,9) and the submanifold immersions they generate."""

__version__ = "0.1.0"

from .clifford import R19, Multivector, Signature, basis_vector, blade, exp_even, geometric_product, reverse, sandwich
from .spin_field import (
    Constant,
    FDConfig,
    PaperExample,
    Product,
    Rotation,
    TypeA,
    TypeB,
    check_spin,
    evaluate,
    killing_extract,
    partial,
)
from .geometry import ConnectionAtPoint, CurvatureAtPoint, connection_field, curvature, frame, gcr_residuals, split_connection

__all__ = [
    "R19",
    "Multivector",
    "Signature",
    "basis_vector",
    "blade",
    "exp_even",
    "geometric_product",
    "reverse",
    "sandwich",
    "Constant",
    "FDConfig",
    "PaperExample",
    "Product",
    "Rotation",
    "TypeA",
    "TypeB",
    "check_spin",
    "evaluate",
    "killing_extract",
    "partial",
    "ConnectionAtPoint",
    "CurvatureAtPoint",
    "connection_field",
    "curvature",
    "frame",
    "gcr_residuals",
    "split_connection",
]
