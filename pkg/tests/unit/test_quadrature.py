"""Tests for the quadrature rules."""

import math

import numpy as np
import pytest

from tdgl_mixed_fem.domain.quadrature.quadrature_rules import (
    CellType,
    interval_rule,
    quadrature_rule,
    simplex_rule,
)


def _monomial_integral(exponents: tuple[int, ...]) -> float:
    """Exact integral of prod x_i^a_i over the reference simplex."""
    d = len(exponents)
    return math.prod(math.factorial(a) for a in exponents) / math.factorial(sum(exponents) + d)


class TestSimplexRules:
    """Tests for triangle and tetrahedron rules."""

    @pytest.mark.parametrize("degree", range(0, 9))
    def test_triangle_exactness(self, degree: int) -> None:
        """Test exact integration of all monomials up to the rule's degree."""
        rule = simplex_rule(2, degree)
        x, y = rule.points[:, 0], rule.points[:, 1]
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                approx = float(rule.weights @ (x**a * y**b))
                assert approx == pytest.approx(_monomial_integral((a, b)), rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("degree", range(0, 7))
    def test_tetrahedron_exactness(self, degree: int) -> None:
        """Test exact integration of all monomials up to the rule's degree."""
        rule = simplex_rule(3, degree)
        x, y, z = rule.points.T
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                for c in range(degree + 1 - a - b):
                    approx = float(rule.weights @ (x**a * y**b * z**c))
                    assert approx == pytest.approx(_monomial_integral((a, b, c)), rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("dimension,degree", [(2, 8), (3, 6), (2, 2), (3, 2)])
    def test_points_strictly_inside(self, dimension: int, degree: int) -> None:
        """Test positive weights and points away from vertices and facets."""
        rule = simplex_rule(dimension, degree)
        assert np.all(rule.weights > 0)
        assert np.all(rule.barycentric > 0)

    def test_negative_degree_rejected(self) -> None:
        """Test that negative degrees are rejected."""
        with pytest.raises(ValueError):
            simplex_rule(2, -1)


class TestQuadratureRule:
    """Tests for the cell-type front end."""

    def test_max_degree(self) -> None:
        """Test the highest supported degrees."""
        assert quadrature_rule(CellType.TRIANGLE, 8).degree == 8
        assert quadrature_rule(CellType.TETRAHEDRON, 6).degree == 6

    def test_unsupported_degree(self) -> None:
        """Test that degrees above the limit are rejected."""
        with pytest.raises(ValueError, match="Unsupported quadrature degree"):
            quadrature_rule(CellType.TRIANGLE, 9)
        with pytest.raises(ValueError, match="Unsupported quadrature degree"):
            quadrature_rule(CellType.TETRAHEDRON, 7)

    def test_cell_type_for_dimension(self) -> None:
        """Test cell type lookup."""
        assert CellType.for_dimension(2) is CellType.TRIANGLE
        assert CellType.for_dimension(3) is CellType.TETRAHEDRON


class TestIntervalRule:
    """Tests for the Gauss-Legendre rule on [0, 1]."""

    @pytest.mark.parametrize("degree", [1, 3, 5, 7])
    def test_exactness(self, degree: int) -> None:
        """Test exact integration of s^k."""
        rule = interval_rule(degree)
        s = rule.points[:, 0]
        for k in range(degree + 1):
            assert float(rule.weights @ s**k) == pytest.approx(1.0 / (k + 1), rel=1e-13)
