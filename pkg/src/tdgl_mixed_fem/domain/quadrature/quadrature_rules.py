"""Quadrature rules on reference simplices and the reference interval.

Reference triangle: (0,0), (1,0), (0,1). Reference tetrahedron: (0,0,0), (1,0,0),
(0,1,0), (0,0,1). Weights sum to the reference volume (1/2 or 1/6).
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference element.

    Attributes:
        points: Reference coordinates, shape (nq, d).
        weights: Weights, shape (nq,).
        degree: Polynomial degree integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def num_points(self) -> int:
        """Number of quadrature points."""
        return int(self.weights.shape[0])

    @property
    def barycentric(self) -> np.ndarray:
        """Barycentric coordinates of the points, shape (nq, d + 1)."""
        return np.column_stack((1.0 - self.points.sum(axis=1), self.points))


def _interval_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _jacobi_rule(n: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Jacobi for weight (1 - s)^alpha on [0, 1].
    x, w = roots_jacobi(n, alpha, 0.0)
    return 0.5 * (x + 1.0), w / 2.0 ** (alpha + 1)


def _collapsed_triangle(degree: int) -> tuple[np.ndarray, np.ndarray]:
    n = math.ceil((degree + 1) / 2)
    u, wu = _interval_rule(n)
    v, wv = _jacobi_rule(n, 1)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    points = np.column_stack(((uu * (1.0 - vv)).ravel(), vv.ravel()))
    weights = np.outer(wu, wv).ravel()
    return points, weights


def _collapsed_tetrahedron(degree: int) -> tuple[np.ndarray, np.ndarray]:
    n = math.ceil((degree + 1) / 2)
    u, wu = _interval_rule(n)
    v, wv = _jacobi_rule(n, 1)
    w, ww = _jacobi_rule(n, 2)
    uu, vv, zz = np.meshgrid(u, v, w, indexing="ij")
    points = np.column_stack(
        (
            (uu * (1.0 - vv) * (1.0 - zz)).ravel(),
            (vv * (1.0 - zz)).ravel(),
            zz.ravel(),
        )
    )
    weights = np.einsum("i,j,k->ijk", wu, wv, ww).ravel()
    return points, weights


@lru_cache(maxsize=64)
def simplex_rule(dimension: int, degree: int) -> QuadratureRule:
    """Return a rule exact for polynomials of total degree `degree` on the reference simplex.

    Args:
        dimension: 2 (triangle) or 3 (tetrahedron).
        degree: Required polynomial exactness, at least 0.

    Returns:
        The cached quadrature rule.

    Raises:
        ValueError: If the dimension is unsupported or the degree is negative.
    """
    if dimension not in (2, 3):
        raise ValueError(f"Unsupported simplex dimension: {dimension}")
    if degree < 0:
        raise ValueError(f"Quadrature degree must be non-negative, got {degree}")
    volume = 1.0 / math.factorial(dimension)
    if degree <= 1:
        points = np.full((1, dimension), 1.0 / (dimension + 1))
        weights = np.array([volume])
    elif degree == 2 and dimension == 2:
        points = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        weights = np.full(3, 1 / 6)
    elif degree == 2:
        a, b = 0.5854101966249685, 0.1381966011250105
        points = np.array([[b, b, b], [a, b, b], [b, a, b], [b, b, a]])
        weights = np.full(4, 1 / 24)
    elif dimension == 2:
        points, weights = _collapsed_triangle(degree)
    else:
        points, weights = _collapsed_tetrahedron(degree)
    for array in (points, weights):
        array.setflags(write=False)
    return QuadratureRule(points=points, weights=weights, degree=degree)


@lru_cache(maxsize=32)
def interval_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact to the given degree."""
    if degree < 0:
        raise ValueError(f"Quadrature degree must be non-negative, got {degree}")
    x, w = _interval_rule(max(1, math.ceil((degree + 1) / 2)))
    points = x[:, None]
    points.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(points=points, weights=w, degree=degree)


class CellType(str, Enum):
    """Reference cell types."""

    TRIANGLE = "triangle"
    TETRAHEDRON = "tetrahedron"

    @property
    def dimension(self) -> int:
        """Topological dimension."""
        return 2 if self is CellType.TRIANGLE else 3

    @property
    def max_degree(self) -> int:
        """Highest supported quadrature degree."""
        return 8 if self is CellType.TRIANGLE else 6

    @classmethod
    def for_dimension(cls, dimension: int) -> "CellType":
        """Cell type of a simplicial mesh of the given dimension."""
        return cls.TRIANGLE if dimension == 2 else cls.TETRAHEDRON


def quadrature_rule(cell_type: CellType, degree: int) -> QuadratureRule:
    """Return the quadrature rule of a cell type exact to ``degree``.

    Args:
        cell_type: Triangle or tetrahedron.
        degree: Required exactness, at most 8 on triangles and 6 on tetrahedra.

    Returns:
        The rule. No point lies on a vertex of the reference cell.

    Raises:
        ValueError: If the degree is unsupported.
    """
    if not 0 <= degree <= cell_type.max_degree:
        raise ValueError(
            f"Unsupported quadrature degree {degree} on {cell_type.value} "
            f"(max {cell_type.max_degree})"
        )
    return simplex_rule(cell_type.dimension, degree)
