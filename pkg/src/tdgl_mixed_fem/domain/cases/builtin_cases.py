"""Built-in manufactured cases: unit square, L-shape, unit cube and zero data."""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from tdgl_mixed_fem.domain.cases.case_models import (
    CaseName,
    FieldName,
    ManufacturedCase,
    SpaceTimeField,
)
from tdgl_mixed_fem.domain.cases.symbolic import (
    CartesianCoordinates,
    CoordinateSystem,
    DerivedFields,
    PolarCoordinates,
    compile_expression,
    derive_fields,
    t,
)
from tdgl_mixed_fem.domain.mesh.mesh_models import DomainKind

logger = logging.getLogger(__name__)

CUTOFF_INNER = sp.Rational(1, 10)
CUTOFF_OUTER = sp.Rational(2, 5)


@dataclass(frozen=True)
class SepticCutoff:
    """The cut-off Phi and its degree-7 transition polynomial Upsilon.

    Attributes:
        coefficients: Exact coefficients of Upsilon in ascending powers of s.
        symbol: The polynomial variable.
    """

    coefficients: tuple[sp.Rational, ...]
    symbol: sp.Symbol

    @property
    def upsilon(self) -> sp.Expr:
        """Upsilon as a sympy polynomial expression."""
        return sum(c * self.symbol**k for k, c in enumerate(self.coefficients))

    def piecewise(self) -> sp.Piecewise:
        """Phi as a sympy Piecewise in ``symbol``."""
        s = self.symbol
        return sp.Piecewise(
            (CUTOFF_INNER, s < CUTOFF_INNER),
            (self.upsilon, s <= CUTOFF_OUTER),
            (0, True),
        )

    def phi(self, s: np.ndarray, derivative: int = 0) -> np.ndarray:
        """Evaluate Phi or one of its derivatives numerically.

        Args:
            s: Evaluation points.
            derivative: Derivative order, 0 to 7.

        Returns:
            Values of the requested derivative.
        """
        s = np.asarray(s, dtype=np.float64)
        poly = np.polynomial.Polynomial([float(c) for c in self.coefficients])
        inner = 0.1 if derivative == 0 else 0.0
        transition = poly.deriv(derivative)(s) if derivative else poly(s)
        return np.where(s < 0.1, inner, np.where(s <= 0.4, transition, 0.0))


def septic_cutoff() -> SepticCutoff:
    """Solve the eight Hermite conditions for the transition polynomial.

    Upsilon(0.1) = 0.1, Upsilon(0.4) = 0 and the first three derivatives vanish
    at both ends.

    Returns:
        The cut-off with exact rational coefficients.
    """
    s = sp.Symbol("s", real=True)
    coeffs = sp.symbols("c0:8")
    poly = sum(c * s**k for k, c in enumerate(coeffs))
    conditions = [
        poly.subs(s, CUTOFF_INNER) - CUTOFF_INNER,
        poly.subs(s, CUTOFF_OUTER),
    ]
    for order in (1, 2, 3):
        derivative = sp.diff(poly, s, order)
        conditions.append(derivative.subs(s, CUTOFF_INNER))
        conditions.append(derivative.subs(s, CUTOFF_OUTER))
    matrix, rhs = sp.linear_eq_to_matrix(conditions, coeffs)
    solution = matrix.LUsolve(rhs)
    return SepticCutoff(coefficients=tuple(sp.nsimplify(v) for v in solution), symbol=s)


def _cartesian_fields(coords: CoordinateSystem, derived: DerivedFields) -> dict[FieldName, SpaceTimeField]:
    fields: dict[FieldName, SpaceTimeField] = {}
    for key, expr in derived.as_dict().items():
        compiled = compile_expression(coords, expr)

        def field(points: np.ndarray, time: float, _compiled=compiled) -> np.ndarray:
            return _compiled(coords.coordinates(points), time)

        fields[FieldName(key)] = field
    return fields


def _radial_piecewise_fields(
    coords: PolarCoordinates,
    inner: DerivedFields,
    transition: DerivedFields,
) -> dict[FieldName, SpaceTimeField]:
    """Fields that follow the three pieces of the cut-off; zero beyond the outer radius."""
    inner_exprs = inner.as_dict()
    transition_exprs = transition.as_dict()
    fields: dict[FieldName, SpaceTimeField] = {}
    for key in inner_exprs:
        compiled_inner = compile_expression(coords, inner_exprs[key])
        compiled_mid = compile_expression(coords, transition_exprs[key])
        vector = isinstance(inner_exprs[key], tuple)
        complex_valued = key in ("psi", "grad_psi", "g")

        def field(
            points: np.ndarray,
            time: float,
            _inner=compiled_inner,
            _mid=compiled_mid,
            _vector=vector,
            _complex=complex_valued,
        ) -> np.ndarray:
            r, theta = coords.coordinates(points)
            shape = r.shape + ((2,) if _vector else ())
            out = np.zeros(shape, dtype=np.complex128 if _complex else np.float64)
            near = r < 0.1
            mid = (r >= 0.1) & (r <= 0.4)
            if np.any(near):
                out[near] = _inner((r[near], theta[near]), time)
            if np.any(mid):
                out[mid] = _mid((r[mid], theta[mid]), time)
            return out

        fields[FieldName(key)] = field
    return fields


@lru_cache(maxsize=8)
def square2d_case(eta: float = 1.0, kappa: float = 1.0) -> ManufacturedCase:
    """Smooth solution on the unit square, kappa = 1 unless overridden.

    psi = exp(-t) (cos(pi x) + i cos(pi y)), A = (exp(y - t) sin(pi x), exp(x - t) sin(pi y)),
    H_e = exp(x - t) sin(pi y) - exp(y - t) sin(pi x), T = 1.
    """
    coords = CartesianCoordinates(2)
    x, y = coords.symbols
    derived = derive_fields(
        coords,
        psi_re=sp.exp(-t) * sp.cos(sp.pi * x),
        psi_im=sp.exp(-t) * sp.cos(sp.pi * y),
        A=(sp.exp(y - t) * sp.sin(sp.pi * x), sp.exp(x - t) * sp.sin(sp.pi * y)),
        H_e=sp.exp(x - t) * sp.sin(sp.pi * y) - sp.exp(y - t) * sp.sin(sp.pi * x),
        kappa=kappa,
        eta=eta,
    )
    logger.debug("Derived forcing for the unit square case")
    return ManufacturedCase(
        name=CaseName.SQUARE2D,
        dimension=2,
        domain=DomainKind.UNIT_SQUARE,
        kappa=kappa,
        eta=eta,
        final_time=1.0,
        fields=_cartesian_fields(coords, derived),
    )


def _lshape_fields(
    coords: PolarCoordinates, phi: sp.Expr, eta: float, kappa: float
) -> DerivedFields:
    r, theta = coords.r, coords.theta
    dphi = sp.diff(phi, r)
    profile = sp.Rational(4, 3) * t**2 * phi * r ** sp.Rational(-1, 3) + t**2 * dphi * r ** sp.Rational(2, 3)
    A = (profile * sp.cos(theta / 3), profile * sp.sin(theta / 3))
    sigma = sp.expand(coords.derivative(A[1], 0) - coords.derivative(A[0], 1))
    return derive_fields(
        coords,
        psi_re=t**2 * phi * r ** sp.Rational(2, 3) * sp.cos(2 * theta / 3),
        psi_im=sp.Integer(0),
        A=A,
        H_e=sigma,
        kappa=kappa,
        eta=eta,
    )


@lru_cache(maxsize=8)
def lshape2d_case(eta: float = 1.0, kappa: float = 10.0) -> ManufacturedCase:
    """Singular solution on the L-shape, kappa = 10 unless overridden.

    psi = t^2 Phi(r) r^(2/3) cos(2 theta / 3) and A has the radial profile
    (4/3) t^2 Phi r^(-1/3) + t^2 Phi' r^(2/3) with angular factors cos(theta/3),
    sin(theta/3). H_e is curl A. Every field vanishes for r > 0.4.
    """
    coords = PolarCoordinates()
    cutoff = septic_cutoff()
    upsilon = cutoff.upsilon.subs(cutoff.symbol, coords.r)
    inner = _lshape_fields(coords, CUTOFF_INNER, eta, kappa)
    transition = _lshape_fields(coords, upsilon, eta, kappa)
    logger.debug("Derived forcing for the L-shape case")
    return ManufacturedCase(
        name=CaseName.LSHAPE2D,
        dimension=2,
        domain=DomainKind.LSHAPE,
        kappa=kappa,
        eta=eta,
        final_time=1.0,
        fields=_radial_piecewise_fields(coords, inner, transition),
    )


@lru_cache(maxsize=8)
def cube3d_case(eta: float = 1.0, kappa: float = 1.0) -> ManufacturedCase:
    """Smooth solution on the unit cube (kappa = 1 by default), growing exponentially in time."""
    coords = CartesianCoordinates(3)
    x, y, z = coords.symbols
    two_pi = 2 * sp.pi
    derived = derive_fields(
        coords,
        psi_re=sp.exp(t) * sp.cos(sp.pi * x) * sp.cos(sp.pi * z),
        psi_im=sp.exp(t) * sp.cos(sp.pi * y) * sp.cos(sp.pi * z),
        A=(
            sp.exp(t) * sp.sin(two_pi * x) * sp.sin(two_pi * y),
            sp.exp(t) * sp.sin(two_pi * y) * sp.sin(two_pi * z),
            sp.exp(t) * sp.sin(two_pi * z),
        ),
        H_e=(
            -two_pi * sp.exp(t) * sp.sin(two_pi * y) * sp.cos(two_pi * z),
            sp.Integer(0),
            -two_pi * sp.exp(t) * sp.sin(two_pi * x) * sp.cos(two_pi * y),
        ),
        kappa=kappa,
        eta=eta,
    )
    logger.debug("Derived forcing for the unit cube case")
    return ManufacturedCase(
        name=CaseName.CUBE3D,
        dimension=3,
        domain=DomainKind.UNIT_CUBE,
        kappa=kappa,
        eta=eta,
        final_time=1.0,
        fields=_cartesian_fields(coords, derived),
    )


@lru_cache(maxsize=8)
def zero_case(dimension: int = 2, eta: float = 1.0, kappa: float = 1.0) -> ManufacturedCase:
    """Zero initial data, zero applied field and zero forcing.

    The exact solution is psi = 0, A = 0. Used for the
    zero-data invariants of both schemes.
    """
    coords = CartesianCoordinates(dimension)
    zero = sp.Integer(0)
    derived = derive_fields(
        coords,
        psi_re=zero,
        psi_im=zero,
        A=(zero,) * dimension,
        H_e=zero if dimension == 2 else (zero,) * 3,
        kappa=kappa,
        eta=eta,
    )
    return ManufacturedCase(
        name=CaseName.ZERO2D if dimension == 2 else CaseName.ZERO3D,
        dimension=dimension,
        domain=DomainKind.UNIT_SQUARE if dimension == 2 else DomainKind.UNIT_CUBE,
        kappa=kappa,
        eta=eta,
        final_time=1.0,
        fields=_cartesian_fields(coords, derived),
    )


DEFAULT_KAPPA: dict[CaseName, float] = {
    CaseName.SQUARE2D: 1.0,
    CaseName.LSHAPE2D: 10.0,
    CaseName.CUBE3D: 1.0,
    CaseName.ZERO2D: 1.0,
    CaseName.ZERO3D: 1.0,
}


def get_case(name: CaseName | str, eta: float = 1.0, kappa: float | None = None) -> ManufacturedCase:
    """Look up a built-in case by name.

    Args:
        name: Case name.
        eta: Time relaxation constant the forcing is derived with.
        kappa: Ginzburg-Landau parameter; the case default when omitted.

    Returns:
        The manufactured case.
    """
    case = CaseName(name)
    k = DEFAULT_KAPPA[case] if kappa is None else float(kappa)
    if case is CaseName.SQUARE2D:
        return square2d_case(eta, k)
    if case is CaseName.LSHAPE2D:
        return lshape2d_case(eta, k)
    if case is CaseName.CUBE3D:
        return cube3d_case(eta, k)
    return zero_case(2 if case is CaseName.ZERO2D else 3, eta, k)
