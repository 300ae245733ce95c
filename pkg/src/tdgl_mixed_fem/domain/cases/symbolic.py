"""Symbolic derivation of manufactured forcing terms.

Exact fields are written as sympy expressions either in Cartesian coordinates or
in polar coordinates (r, theta). Spatial derivatives are always Cartesian; in
polar coordinates they are taken through the chain rule. The forcing terms are
the residuals of the strong equations

    eta psi_t - i eta kappa (div A) psi + (i/kappa grad + A)^2 psi + (|psi|^2 - 1) psi = g
    A_t - grad div A + curl curl A - (1/kappa) Im(conj(psi) grad psi) + |psi|^2 A
        = curl H_e + f

with the 2D curl of a scalar u read as the rotated gradient (du/dy, -du/dx).
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import sympy as sp

t = sp.Symbol("t", real=True)


class CoordinateSystem:
    """Spatial coordinates in which exact fields are written."""

    dimension: int
    symbols: tuple[sp.Symbol, ...]

    def derivative(self, expr: sp.Expr, axis: int) -> sp.Expr:
        """Cartesian partial derivative along ``axis``."""
        raise NotImplementedError

    def coordinates(self, points: np.ndarray) -> tuple[np.ndarray, ...]:
        """Numeric values of the coordinate symbols at Cartesian points (..., d)."""
        raise NotImplementedError


class CartesianCoordinates(CoordinateSystem):
    """x, y (and z) coordinates."""

    def __init__(self, dimension: int) -> None:
        """Create Cartesian coordinates of the given dimension."""
        self.dimension = dimension
        self.symbols = sp.symbols("x y z", real=True)[:dimension]

    def derivative(self, expr: sp.Expr, axis: int) -> sp.Expr:
        """Cartesian partial derivative along ``axis``."""
        return sp.diff(expr, self.symbols[axis])

    def coordinates(self, points: np.ndarray) -> tuple[np.ndarray, ...]:
        """Split points into their components."""
        return tuple(points[..., i] for i in range(self.dimension))


class PolarCoordinates(CoordinateSystem):
    """Polar coordinates with the angle on the branch [0, 2*pi).

    On the L-shape this is the branch continuous across the negative x-axis:
    the domain spans angles in (0, 3*pi/2).
    """

    def __init__(self) -> None:
        """Create the (r, theta) coordinate symbols."""
        self.dimension = 2
        self.r = sp.Symbol("r", positive=True)
        self.theta = sp.Symbol("theta", real=True)
        self.symbols = (self.r, self.theta)

    def derivative(self, expr: sp.Expr, axis: int) -> sp.Expr:
        """Chain rule: d/dx = cos d/dr - sin/r d/dtheta, d/dy = sin d/dr + cos/r d/dtheta."""
        dr = sp.diff(expr, self.r)
        dtheta = sp.diff(expr, self.theta)
        if axis == 0:
            return sp.cos(self.theta) * dr - sp.sin(self.theta) / self.r * dtheta
        return sp.sin(self.theta) * dr + sp.cos(self.theta) / self.r * dtheta

    def coordinates(self, points: np.ndarray) -> tuple[np.ndarray, ...]:
        """Radius and angle remapped from atan2's (-pi, pi] to [0, 2*pi)."""
        x = points[..., 0]
        y = points[..., 1]
        theta = np.arctan2(y, x)
        theta = np.where(theta < 0.0, theta + 2.0 * np.pi, theta)
        return np.hypot(x, y), theta


@dataclass(frozen=True)
class DerivedFields:
    """Exact fields and forcing of one manufactured solution, as sympy expressions.

    Attributes:
        psi: Order parameter (complex).
        grad_psi: Its gradient.
        A: Magnetic potential components.
        div_A: Divergence of A.
        sigma: curl A (scalar in 2D, vector in 3D).
        H_e: Applied field as used on the boundary.
        curl_H_e: Rotated gradient (2D) or curl (3D) of H_e.
        f: Vector forcing of the A equation.
        g: Scalar forcing of the psi equation.
    """

    psi: sp.Expr
    grad_psi: tuple[sp.Expr, ...]
    A: tuple[sp.Expr, ...]
    div_A: sp.Expr
    sigma: sp.Expr | tuple[sp.Expr, ...]
    H_e: sp.Expr | tuple[sp.Expr, ...]
    curl_H_e: tuple[sp.Expr, ...]
    f: tuple[sp.Expr, ...]
    g: sp.Expr

    def as_dict(self) -> dict[str, sp.Expr | tuple[sp.Expr, ...]]:
        """Field name to expression."""
        return {
            "psi": self.psi,
            "grad_psi": self.grad_psi,
            "A": self.A,
            "div_A": self.div_A,
            "sigma": self.sigma,
            "H_e": self.H_e,
            "curl_H_e": self.curl_H_e,
            "f": self.f,
            "g": self.g,
        }


def _curl3(coords: CoordinateSystem, v: Sequence[sp.Expr]) -> tuple[sp.Expr, ...]:
    D = coords.derivative
    return (
        D(v[2], 1) - D(v[1], 2),
        D(v[0], 2) - D(v[2], 0),
        D(v[1], 0) - D(v[0], 1),
    )


def derive_fields(
    coords: CoordinateSystem,
    psi_re: sp.Expr,
    psi_im: sp.Expr,
    A: Sequence[sp.Expr],
    H_e: sp.Expr | Sequence[sp.Expr],
    kappa: float,
    eta: float = 1.0,
) -> DerivedFields:
    """Derive every field the solver and the error measurement need.

    Args:
        coords: Coordinate system of the expressions.
        psi_re: Real part of psi.
        psi_im: Imaginary part of psi.
        A: Components of A.
        H_e: Applied field (scalar in 2D, three components in 3D).
        kappa: Ginzburg-Landau parameter.
        eta: Time relaxation constant.

    Returns:
        The derived expressions.
    """
    D = coords.derivative
    d = coords.dimension
    k = sp.nsimplify(kappa)
    e = sp.nsimplify(eta)
    A = tuple(sp.sympify(a) for a in A)

    psi = psi_re + sp.I * psi_im
    grad_re = tuple(D(psi_re, i) for i in range(d))
    grad_im = tuple(D(psi_im, i) for i in range(d))
    grad_psi = tuple(gr + sp.I * gi for gr, gi in zip(grad_re, grad_im, strict=True))
    laplace_psi = sum(D(grad_re[i], i) + sp.I * D(grad_im[i], i) for i in range(d))

    div_A = sp.expand(sum(D(A[i], i) for i in range(d)))
    grad_div = tuple(D(div_A, i) for i in range(d))
    if d == 2:
        sigma: sp.Expr | tuple[sp.Expr, ...] = sp.expand(D(A[1], 0) - D(A[0], 1))
        curl_sigma = (D(sigma, 1), -D(sigma, 0))
        H = sp.sympify(H_e)
        curl_H_e = (D(H, 1), -D(H, 0))
        H_field: sp.Expr | tuple[sp.Expr, ...] = H
    else:
        sigma = tuple(sp.expand(c) for c in _curl3(coords, A))
        curl_sigma = _curl3(coords, sigma)
        H_field = tuple(sp.sympify(h) for h in H_e)
        curl_H_e = _curl3(coords, H_field)

    density = psi_re**2 + psi_im**2
    a_squared = sum(a**2 for a in A)
    a_dot_grad = sum(A[i] * grad_psi[i] for i in range(d))
    g = (
        e * sp.diff(psi, t)
        - sp.I * e * k * div_A * psi
        - laplace_psi / k**2
        + 2 * sp.I / k * a_dot_grad
        + sp.I / k * div_A * psi
        + a_squared * psi
        + (density - 1) * psi
    )
    f = tuple(
        sp.diff(A[i], t)
        - grad_div[i]
        + curl_sigma[i]
        - (psi_re * grad_im[i] - psi_im * grad_re[i]) / k
        + density * A[i]
        - curl_H_e[i]
        for i in range(d)
    )
    return DerivedFields(
        psi=psi,
        grad_psi=grad_psi,
        A=A,
        div_A=div_A,
        sigma=sigma,
        H_e=H_field,
        curl_H_e=curl_H_e,
        f=f,
        g=g,
    )


SpaceTimeField = Callable[[np.ndarray, float], np.ndarray]


def compile_expression(
    coords: CoordinateSystem, expr: sp.Expr | Sequence[sp.Expr]
) -> Callable[[tuple[np.ndarray, ...], float], np.ndarray]:
    """Lambdify a scalar or vector expression in the coordinate symbols and time.

    Args:
        coords: Coordinate system.
        expr: A scalar expression or a sequence of components.

    Returns:
        Function of the coordinate arrays and time returning values (...,) or (..., n).
    """
    args = (*coords.symbols, t)
    is_vector = isinstance(expr, (tuple, list))
    components = list(expr) if is_vector else [expr]
    functions = [sp.lambdify(args, c, modules="numpy", cse=True) for c in components]
    complex_valued = any(sp.sympify(c).has(sp.I) for c in components)

    def evaluate(values: tuple[np.ndarray, ...], time: float) -> np.ndarray:
        shape = np.shape(values[0])
        dtype = np.complex128 if complex_valued else np.float64
        parts = [np.broadcast_to(np.asarray(fn(*values, time), dtype=dtype), shape) for fn in functions]
        if is_vector:
            return np.stack(parts, axis=-1)
        return np.array(parts[0])

    return evaluate
