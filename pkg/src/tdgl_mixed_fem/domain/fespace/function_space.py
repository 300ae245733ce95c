"""Dof map construction, interpolation and point evaluation."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from tdgl_mixed_fem.domain.fespace.elements import compute_geometry, tabulate
from tdgl_mixed_fem.domain.fespace.space_models import (
    DofMap,
    ElementFamily,
    FeFunction,
    SpaceDescriptor,
    ValueKind,
)
from tdgl_mixed_fem.domain.mesh.mesh_models import Mesh
from tdgl_mixed_fem.domain.quadrature.quadrature_rules import interval_rule, simplex_rule

logger = logging.getLogger(__name__)

FieldCallback = Callable[[np.ndarray], np.ndarray]

# Unit normals closer than this to a coordinate axis count as axis aligned.
AXIS_TOLERANCE = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


def _axis_aligned_boundary_dofs(mesh: Mesh) -> np.ndarray:
    """Component dofs zeroed by A.n = 0 on an axis-aligned 2D boundary."""
    normals = mesh.facet_normals()[mesh.boundary_facets]
    edges = mesh.edges[mesh.boundary_facets]
    axis = np.argmax(np.abs(normals), axis=1)
    if np.any(np.abs(np.abs(normals[np.arange(len(axis)), axis]) - 1.0) > AXIS_TOLERANCE):
        raise ValueError("Component-wise A.n = 0 requires an axis-aligned boundary")
    dofs = axis[:, None] * mesh.num_vertices + edges
    return np.unique(dofs.ravel())


def make_space(mesh: Mesh, desc: SpaceDescriptor) -> DofMap:
    """Number the degrees of freedom of a space on a mesh.

    Args:
        mesh: The mesh.
        desc: The space descriptor.

    Returns:
        The dof map.

    Raises:
        ValueError: If the element is unsupported in the mesh dimension.
    """
    desc.validate(mesh.dimension)
    d = mesh.dimension
    nv = mesh.num_vertices
    nc = mesh.num_cells
    boundary = np.zeros(0, dtype=np.int64)

    if desc.family is ElementFamily.LAGRANGE and desc.is_vector:
        cell_dofs = np.concatenate((mesh.cells, nv + mesh.cells), axis=1)
        num_dofs = 2 * nv
        signs = np.ones_like(cell_dofs, dtype=np.int8)
        if desc.essential_boundary:
            boundary = _axis_aligned_boundary_dofs(mesh)
    elif desc.family is ElementFamily.LAGRANGE:
        if desc.degree == 1:
            cell_dofs = mesh.cells
            num_dofs = nv
        else:
            cell_dofs = np.concatenate((mesh.cells, nv + mesh.cell_edges), axis=1)
            num_dofs = nv + mesh.num_edges
        signs = np.ones_like(cell_dofs, dtype=np.int8)
        if desc.essential_boundary:
            boundary = np.flatnonzero(mesh.boundary_vertices)
            if desc.degree == 2:
                boundary = np.concatenate((boundary, nv + np.flatnonzero(mesh.boundary_edges)))
    elif desc.family is ElementFamily.RAVIART_THOMAS and desc.degree == 0:
        cell_dofs = mesh.cell_facets
        num_dofs = mesh.num_facets
        signs = mesh.cell_facet_signs
        if desc.essential_boundary:
            boundary = np.flatnonzero(mesh.boundary_facets)
    elif desc.family is ElementFamily.RAVIART_THOMAS:
        ne = mesh.num_edges
        edge_part = np.stack((2 * mesh.cell_edges, 2 * mesh.cell_edges + 1), axis=2).reshape(nc, 6)
        interior = 2 * ne + 2 * np.arange(nc)[:, None] + np.array([0, 1])[None, :]
        cell_dofs = np.concatenate((edge_part, interior), axis=1)
        num_dofs = 2 * ne + 2 * nc
        normal_sign = mesh.cell_facet_signs.astype(np.int8)
        moment_sign = (mesh.cell_facet_signs * mesh.cell_edge_signs).astype(np.int8)
        edge_signs = np.stack((normal_sign, moment_sign), axis=2).reshape(nc, 6)
        signs = np.concatenate((edge_signs, np.ones((nc, 2), dtype=np.int8)), axis=1)
        if desc.essential_boundary:
            bedges = np.flatnonzero(mesh.boundary_edges)
            boundary = np.sort(np.concatenate((2 * bedges, 2 * bedges + 1)))
    elif desc.family is ElementFamily.NEDELEC_FIRST_KIND:
        cell_dofs = mesh.cell_edges
        num_dofs = mesh.num_edges
        signs = mesh.cell_edge_signs
        if desc.essential_boundary:
            boundary = np.flatnonzero(mesh.boundary_edges)
    else:
        per_cell = 1 if desc.degree == 0 else d + 1
        cell_dofs = np.arange(nc * per_cell).reshape(nc, per_cell)
        num_dofs = nc * per_cell
        signs = np.ones_like(cell_dofs, dtype=np.int8)

    dofmap = DofMap(
        space=desc,
        mesh=mesh,
        num_global_dofs=int(num_dofs),
        cell_dofs=_frozen(cell_dofs.astype(np.int64)),
        cell_signs=_frozen(signs.astype(np.int8)),
        boundary_dofs=_frozen(np.sort(boundary).astype(np.int64)),
    )
    logger.debug(
        f"Space {desc.label} on {mesh.domain.value} M={mesh.mesh_density}: "
        f"{dofmap.num_global_dofs} dofs, {len(dofmap.boundary_dofs)} essential"
    )
    return dofmap


def evaluate_field(field: FieldCallback, points: np.ndarray) -> np.ndarray:
    """Evaluate a field callback and reject non-finite results.

    Args:
        field: Callback mapping points (..., d) to values.
        points: Evaluation points.

    Returns:
        The field values.

    Raises:
        ValueError: If the field is not evaluable at some point.
    """
    with np.errstate(all="ignore"):
        values = np.asarray(field(points))
    finite = np.isfinite(values)
    if not np.all(finite):
        bad = np.argwhere(~finite)[0]
        raise ValueError(f"Field not evaluable at point index {tuple(int(i) for i in bad)}")
    return values


def _facet_points(mesh: Mesh, degree: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature points on every facet with weights scaled by the facet measure."""
    x = mesh.vertices
    facets = mesh.facets
    if mesh.dimension == 2:
        rule = interval_rule(degree)
        s = rule.points[:, 0]
        pts = x[facets[:, None, 0]] + s[None, :, None] * (x[facets[:, None, 1]] - x[facets[:, None, 0]])
        return pts, rule.weights[None, :] * mesh.facet_measures()[:, None], s
    rule = simplex_rule(2, degree)
    a = x[facets[:, 0]]
    pts = (
        a[:, None, :]
        + rule.points[None, :, 0, None] * (x[facets[:, 1]] - a)[:, None, :]
        + rule.points[None, :, 1, None] * (x[facets[:, 2]] - a)[:, None, :]
    )
    return pts, 2.0 * rule.weights[None, :] * mesh.facet_measures()[:, None], rule.points[:, 0]


def interpolate(dofmap: DofMap, field: FieldCallback, quad_degree: int = 6) -> FeFunction:
    """Apply the canonical interpolation operator of a space to a field.

    Lagrange spaces use point values at the nodes; Raviart-Thomas spaces use facet
    normal moments (and cell means for RT1); Nedelec spaces use edge tangential
    moments. Moments are integrated with Gauss rules on the entities.

    Args:
        dofmap: Target space.
        field: Callback mapping points (..., d) to scalar or vector values.
        quad_degree: Exactness of the entity quadrature used for moments.

    Returns:
        The interpolant.

    Raises:
        ValueError: If the field is not evaluable at a required point.
    """
    mesh = dofmap.mesh
    space = dofmap.space
    x = mesh.vertices
    dtype = space.value_kind.dtype
    coefficients = np.zeros(dofmap.num_global_dofs, dtype=dtype)

    if space.family is ElementFamily.LAGRANGE:
        nodes = x
        if space.degree == 2:
            nodes = np.concatenate((x, 0.5 * (x[mesh.edges[:, 0]] + x[mesh.edges[:, 1]])))
        values = evaluate_field(field, nodes)
        if space.is_vector:
            coefficients[:] = values.T.ravel()
        else:
            coefficients[:] = values if dtype is np.complex128 else np.real(values)
    elif space.family is ElementFamily.RAVIART_THOMAS:
        normals = mesh.facet_normals()
        pts, weights, s = _facet_points(mesh, quad_degree + space.degree)
        flux = np.einsum("fqi,fi->fq", evaluate_field(field, pts), normals)
        if space.degree == 0:
            coefficients[:] = np.einsum("fq,fq->f", weights, flux)
        else:
            ne = mesh.num_edges
            coefficients[0 : 2 * ne : 2] = np.einsum("fq,fq->f", weights, flux)
            coefficients[1 : 2 * ne : 2] = np.einsum("fq,q,fq->f", weights, 2.0 * s - 1.0, flux)
            rule = simplex_rule(2, quad_degree)
            geometry = compute_geometry(mesh)
            cell_pts = geometry.map_points(rule.points)
            means = 2.0 * np.einsum("q,cqi->ci", rule.weights, evaluate_field(field, cell_pts))
            coefficients[2 * ne :] = means.ravel()
    elif space.family is ElementFamily.NEDELEC_FIRST_KIND:
        rule = interval_rule(quad_degree)
        s = rule.points[:, 0]
        tangent = x[mesh.edges[:, 1]] - x[mesh.edges[:, 0]]
        pts = x[mesh.edges[:, None, 0]] + s[None, :, None] * tangent[:, None, :]
        values = evaluate_field(field, pts)
        coefficients[:] = np.einsum("q,eqi,ei->e", rule.weights, values, tangent)
    else:
        geometry = compute_geometry(mesh)
        if space.degree == 0:
            rule = simplex_rule(mesh.dimension, quad_degree)
            values = evaluate_field(field, geometry.map_points(rule.points))
            volume = rule.weights.sum()
            coefficients[:] = np.einsum("q,cq->c", rule.weights, values) / volume
        else:
            coefficients[:] = evaluate_field(field, geometry.vertices).ravel()
    return FeFunction(dofmap, coefficients)


@dataclass(frozen=True)
class PointValue:
    """Value and first derivatives of a discrete function at one point.

    Attributes:
        value: Scalar or vector value.
        grad: Gradient for scalar spaces.
        div: Divergence for vector spaces.
        curl: Curl for vector spaces (scalar in 2D, vector in 3D).
    """

    value: complex | float | np.ndarray
    grad: np.ndarray | None = None
    div: float | None = None
    curl: float | np.ndarray | None = None


def evaluate(f: FeFunction, cell: int, ref_point: np.ndarray) -> PointValue:
    """Evaluate a discrete function at a point given in barycentric coordinates.

    Args:
        f: The discrete function.
        cell: Cell index.
        ref_point: Barycentric coordinates (d + 1 entries summing to one).

    Returns:
        The value and the derivatives available for the space.
    """
    mesh = f.mesh
    if not 0 <= cell < mesh.num_cells:
        raise ValueError(f"Cell index {cell} out of range")
    bary = np.asarray(ref_point, dtype=np.float64)
    table = tabulate(f.dofmap, bary[None, 1:], cells=np.array([cell]))

    def pick(name: str) -> np.ndarray | None:
        if getattr(table, name) is None:
            return None
        return table.combine(f.coefficients, name)[0, 0]

    value = pick("values")
    grad = pick("grads")
    div = pick("div")
    curl = pick("curl")
    return PointValue(
        value=value.item() if value is not None and value.ndim == 0 else value,
        grad=grad,
        div=None if div is None else float(div),
        curl=curl.item() if curl is not None and curl.ndim == 0 else curl,
    )
