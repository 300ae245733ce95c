"""Quadrature rules on simplices."""

from tdgl_mixed_fem.domain.quadrature.quadrature_rules import (
    CellType,
    QuadratureRule,
    interval_rule,
    quadrature_rule,
    simplex_rule,
)

__all__ = ["CellType", "QuadratureRule", "interval_rule", "quadrature_rule", "simplex_rule"]
