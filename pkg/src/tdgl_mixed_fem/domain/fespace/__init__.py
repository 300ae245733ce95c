"""Finite element spaces: Lagrange, Raviart-Thomas, Nedelec and discontinuous."""

from tdgl_mixed_fem.domain.fespace.elements import BasisTable, CellGeometry, compute_geometry, tabulate
from tdgl_mixed_fem.domain.fespace.function_space import evaluate, interpolate, make_space
from tdgl_mixed_fem.domain.fespace.space_models import (
    DofMap,
    ElementFamily,
    FeFunction,
    SpaceDescriptor,
    ValueKind,
)

__all__ = [
    "BasisTable",
    "CellGeometry",
    "DofMap",
    "ElementFamily",
    "FeFunction",
    "SpaceDescriptor",
    "ValueKind",
    "compute_geometry",
    "evaluate",
    "interpolate",
    "make_space",
    "tabulate",
]
