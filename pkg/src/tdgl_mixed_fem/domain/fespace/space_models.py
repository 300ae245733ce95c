"""Finite element space descriptors, dof maps and discrete functions."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from tdgl_mixed_fem.domain.mesh.mesh_models import Mesh


class ElementFamily(str, Enum):
    """Supported element families."""

    LAGRANGE = "lagrange"
    RAVIART_THOMAS = "raviart_thomas"
    NEDELEC_FIRST_KIND = "nedelec_first_kind"
    DISCONTINUOUS_LAGRANGE = "discontinuous_lagrange"


class ValueKind(str, Enum):
    """Value type carried by the coefficients of a space."""

    SCALAR_REAL = "scalar_real"
    SCALAR_COMPLEX = "scalar_complex"
    VECTOR_REAL = "vector_real"

    @property
    def dtype(self) -> type:
        """Numpy dtype of the coefficient vector."""
        return np.complex128 if self is ValueKind.SCALAR_COMPLEX else np.float64


# (family, degree, dimension) -> value kinds the element can carry.
SUPPORTED_ELEMENTS: dict[tuple[ElementFamily, int, int], tuple[ValueKind, ...]] = {
    (ElementFamily.LAGRANGE, 1, 2): (
        ValueKind.SCALAR_REAL,
        ValueKind.SCALAR_COMPLEX,
        ValueKind.VECTOR_REAL,
    ),
    (ElementFamily.LAGRANGE, 1, 3): (ValueKind.SCALAR_REAL, ValueKind.SCALAR_COMPLEX),
    (ElementFamily.LAGRANGE, 2, 2): (ValueKind.SCALAR_REAL, ValueKind.SCALAR_COMPLEX),
    (ElementFamily.LAGRANGE, 2, 3): (ValueKind.SCALAR_REAL, ValueKind.SCALAR_COMPLEX),
    (ElementFamily.RAVIART_THOMAS, 0, 2): (ValueKind.VECTOR_REAL,),
    (ElementFamily.RAVIART_THOMAS, 1, 2): (ValueKind.VECTOR_REAL,),
    (ElementFamily.RAVIART_THOMAS, 0, 3): (ValueKind.VECTOR_REAL,),
    (ElementFamily.NEDELEC_FIRST_KIND, 1, 3): (ValueKind.VECTOR_REAL,),
    (ElementFamily.DISCONTINUOUS_LAGRANGE, 0, 2): (ValueKind.SCALAR_REAL,),
    (ElementFamily.DISCONTINUOUS_LAGRANGE, 1, 2): (ValueKind.SCALAR_REAL,),
    (ElementFamily.DISCONTINUOUS_LAGRANGE, 0, 3): (ValueKind.SCALAR_REAL,),
    (ElementFamily.DISCONTINUOUS_LAGRANGE, 1, 3): (ValueKind.SCALAR_REAL,),
}


@dataclass(frozen=True)
class SpaceDescriptor:
    """Description of a finite element space.

    Attributes:
        family: Element family.
        degree: Polynomial degree in the family's own convention (RT_0 is lowest order,
            first-kind Nedelec starts at 1).
        value_kind: Scalar real, scalar complex or vector real.
        essential_boundary: Whether the boundary dofs carry an essential condition
            (normal trace for RT, tangential trace for Nedelec, point values for Lagrange).
    """

    family: ElementFamily
    degree: int
    value_kind: ValueKind = ValueKind.SCALAR_REAL
    essential_boundary: bool = False

    def validate(self, dimension: int) -> None:
        """Check the family/degree/value combination against the mesh dimension.

        Args:
            dimension: Mesh dimension.

        Raises:
            ValueError: If the combination is not supported.
        """
        kinds = SUPPORTED_ELEMENTS.get((self.family, self.degree, dimension))
        if kinds is None:
            raise ValueError(
                f"Unsupported element {self.family.value} of degree {self.degree} "
                f"in {dimension}D"
            )
        if self.value_kind not in kinds:
            raise ValueError(
                f"Element {self.family.value}{self.degree} cannot carry "
                f"{self.value_kind.value} values in {dimension}D"
            )

    @property
    def is_vector(self) -> bool:
        """Whether basis functions are vector valued."""
        return self.value_kind is ValueKind.VECTOR_REAL

    @property
    def polynomial_degree(self) -> int:
        """Highest total degree of the basis polynomials."""
        if self.family is ElementFamily.RAVIART_THOMAS:
            return self.degree + 1
        return self.degree

    @property
    def label(self) -> str:
        """Short human readable name, e.g. ``RT1`` or ``P2``."""
        prefix = {
            ElementFamily.LAGRANGE: "P",
            ElementFamily.RAVIART_THOMAS: "RT",
            ElementFamily.NEDELEC_FIRST_KIND: "N1_",
            ElementFamily.DISCONTINUOUS_LAGRANGE: "DG",
        }[self.family]
        suffix = "^d" if self.is_vector and self.family is ElementFamily.LAGRANGE else ""
        return f"{prefix}{self.degree}{suffix}"


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering of the degrees of freedom of a space on a mesh.

    Attributes:
        space: The space descriptor.
        mesh: The mesh the space lives on.
        num_global_dofs: Number of global degrees of freedom.
        cell_dofs: Global dof index per local dof, shape (nc, n_local).
        cell_signs: Orientation sign (+1/-1) per local dof, shape (nc, n_local).
        boundary_dofs: Sorted global indices carrying the essential condition.
    """

    space: SpaceDescriptor
    mesh: Mesh
    num_global_dofs: int
    cell_dofs: np.ndarray
    cell_signs: np.ndarray
    boundary_dofs: np.ndarray

    @property
    def num_local_dofs(self) -> int:
        """Number of dofs per cell."""
        return int(self.cell_dofs.shape[1])

    @property
    def interior_dofs(self) -> np.ndarray:
        """Global indices without an essential condition."""
        mask = np.ones(self.num_global_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.flatnonzero(mask)

    def same_mesh(self, other: "DofMap") -> bool:
        """Whether both dof maps are defined on the same mesh object."""
        return self.mesh is other.mesh


@dataclass(frozen=True, eq=False)
class FeFunction:
    """A discrete function: coefficients over a dof map.

    Attributes:
        dofmap: The dof map the coefficients refer to.
        coefficients: Coefficient vector of length ``dofmap.num_global_dofs``.
    """

    dofmap: DofMap
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        """Validate length and value kind of the coefficients."""
        if self.coefficients.shape != (self.dofmap.num_global_dofs,):
            raise ValueError(
                f"Expected {self.dofmap.num_global_dofs} coefficients, "
                f"got shape {self.coefficients.shape}"
            )
        complex_space = self.dofmap.space.value_kind is ValueKind.SCALAR_COMPLEX
        if np.iscomplexobj(self.coefficients) and not complex_space:
            raise ValueError(f"Complex coefficients given for real space {self.space.label}")
        coefficients = np.array(self.coefficients, dtype=self.dofmap.space.value_kind.dtype)
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def space(self) -> SpaceDescriptor:
        """Descriptor of the underlying space."""
        return self.dofmap.space

    @property
    def mesh(self) -> Mesh:
        """Mesh of the underlying space."""
        return self.dofmap.mesh

    @classmethod
    def zeros(cls, dofmap: DofMap) -> "FeFunction":
        """Create the zero function on a dof map."""
        return cls(dofmap, np.zeros(dofmap.num_global_dofs, dtype=dofmap.space.value_kind.dtype))
