"""Reference element tabulation on physical cells.

Basis functions are evaluated directly on the physical cells from barycentric
coordinates and their gradients, which makes the affine, covariant and
contravariant Piola maps implicit. Tabulated values already include the
orientation signs of the dof map, so a table row is the restriction of a
global basis function to the cell.
"""

from dataclasses import dataclass

import numpy as np

from tdgl_mixed_fem.domain.fespace.space_models import DofMap, ElementFamily, ValueKind
from tdgl_mixed_fem.domain.mesh.mesh_models import LOCAL_EDGES, Mesh
from tdgl_mixed_fem.domain.quadrature.quadrature_rules import (
    QuadratureRule,
    interval_rule,
    simplex_rule,
)


@dataclass(frozen=True)
class CellGeometry:
    """Affine geometry of a block of cells.

    Attributes:
        cells: Global cell indices of the block.
        origin: First vertex of every cell, shape (nc, d).
        jacobian: Columns x_i - x_0, shape (nc, d, d).
        det: Positive Jacobian determinants, shape (nc,).
        grad_lambda: Gradients of the barycentric coordinates, shape (nc, d + 1, d).
        vertices: Cell vertex coordinates, shape (nc, d + 1, d).
    """

    cells: np.ndarray
    origin: np.ndarray
    jacobian: np.ndarray
    det: np.ndarray
    grad_lambda: np.ndarray
    vertices: np.ndarray

    @property
    def volume(self) -> np.ndarray:
        """Cell volumes."""
        d = self.origin.shape[1]
        return self.det / (1.0 if d == 1 else (2.0 if d == 2 else 6.0))

    def map_points(self, ref_points: np.ndarray) -> np.ndarray:
        """Map reference points (nq, d) to physical points (nc, nq, d)."""
        return self.origin[:, None, :] + np.einsum("cij,qj->cqi", self.jacobian, ref_points)


def compute_geometry(mesh: Mesh, cells: np.ndarray | None = None) -> CellGeometry:
    """Compute the affine maps of the given cells.

    Args:
        mesh: The mesh.
        cells: Cell indices; all cells when omitted.

    Returns:
        The cell geometry of the block.
    """
    index = np.arange(mesh.num_cells) if cells is None else np.asarray(cells)
    x = mesh.vertices[mesh.cells[index]]
    jacobian = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))
    det = np.linalg.det(jacobian)
    if np.any(det <= 0.0):
        raise ValueError("Degenerate or negatively oriented cell encountered")
    inverse = np.linalg.inv(jacobian)
    grad_rest = inverse
    grad_first = -grad_rest.sum(axis=1, keepdims=True)
    grad_lambda = np.concatenate((grad_first, grad_rest), axis=1)
    return CellGeometry(
        cells=index,
        origin=x[:, 0, :],
        jacobian=jacobian,
        det=det,
        grad_lambda=grad_lambda,
        vertices=x,
    )


@dataclass(frozen=True)
class BasisTable:
    """Global basis functions tabulated at points of a block of cells.

    Attributes:
        dofs: Global dof indices, shape (nc, nb).
        points: Physical evaluation points, shape (nc, nq, d).
        weights: Quadrature weights times |det J|, shape (nc, nq); ones if no rule.
        values: Shape (nc, nq, nb) for scalars, (nc, nq, nb, d) for vectors.
        grads: Scalar gradients, shape (nc, nq, nb, d); None for vector spaces.
        div: Divergence for vector spaces, shape (nc, nq, nb).
        curl: Curl for vector spaces: (nc, nq, nb) in 2D, (nc, nq, nb, 3) in 3D.
    """

    dofs: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    grads: np.ndarray | None = None
    div: np.ndarray | None = None
    curl: np.ndarray | None = None

    @property
    def rot(self) -> np.ndarray:
        """Rotated gradient (d/dy, -d/dx) of 2D scalar basis functions."""
        if self.grads is None or self.grads.shape[-1] != 2:
            raise ValueError("Rotated gradient is only defined for 2D scalar spaces")
        return np.stack((self.grads[..., 1], -self.grads[..., 0]), axis=-1)

    def combine(self, coefficients: np.ndarray, field: str = "values") -> np.ndarray:
        """Evaluate a coefficient vector through one of the tabulated quantities.

        Args:
            coefficients: Global coefficient vector.
            field: One of ``values``, ``grads``, ``div``, ``curl`` or ``rot``.

        Returns:
            The discrete field at the points, shape (nc, nq, ...).
        """
        table = getattr(self, field)
        if table is None:
            raise ValueError(f"Quantity {field!r} is not tabulated for this space")
        local = coefficients[self.dofs]
        return np.einsum("cb,cqb...->cq...", local, table)


def _lagrange_scalar(
    degree: int, lam: np.ndarray, geometry: CellGeometry
) -> tuple[np.ndarray, np.ndarray]:
    nc = geometry.det.shape[0]
    nq = lam.shape[0]
    gl = geometry.grad_lambda
    d = gl.shape[2]
    if degree == 1:
        values = np.broadcast_to(lam[None, :, :], (nc, nq, d + 1))
        grads = np.broadcast_to(gl[:, None, :, :], (nc, nq, d + 1, d))
        return np.array(values), np.array(grads)
    edges = LOCAL_EDGES[d]
    a = np.array([e[0] for e in edges])
    b = np.array([e[1] for e in edges])
    vertex_values = lam * (2.0 * lam - 1.0)
    edge_values = 4.0 * lam[:, a] * lam[:, b]
    values = np.concatenate((vertex_values, edge_values), axis=1)
    vertex_grads = (4.0 * lam - 1.0)[None, :, :, None] * gl[:, None, :, :]
    edge_grads = 4.0 * (
        lam[None, :, b, None] * gl[:, None, a, :] + lam[None, :, a, None] * gl[:, None, b, :]
    )
    grads = np.concatenate((vertex_grads, edge_grads), axis=2)
    return np.broadcast_to(values[None], (nc, nq, values.shape[1])).copy(), grads


def _lagrange_vector(lam: np.ndarray, geometry: CellGeometry) -> dict[str, np.ndarray]:
    # Local dof c*3 + i is vertex i, Cartesian component c.
    nc = geometry.det.shape[0]
    nq = lam.shape[0]
    gl = geometry.grad_lambda
    values = np.zeros((nc, nq, 6, 2))
    values[:, :, 0:3, 0] = lam[None]
    values[:, :, 3:6, 1] = lam[None]
    div = np.concatenate((gl[:, :, 0], gl[:, :, 1]), axis=1)
    curl = np.concatenate((-gl[:, :, 1], gl[:, :, 0]), axis=1)
    return {
        "values": values,
        "div": np.broadcast_to(div[:, None, :], (nc, nq, 6)).copy(),
        "curl": np.broadcast_to(curl[:, None, :], (nc, nq, 6)).copy(),
    }


def _raviart_thomas_lowest(points: np.ndarray, geometry: CellGeometry) -> dict[str, np.ndarray]:
    # phi_k = (x - x_k) / (d |K|): unit outward flux through the facet opposite vertex k.
    d = points.shape[2]
    scale = 1.0 / (d * geometry.volume)
    values = (points[:, :, None, :] - geometry.vertices[:, None, :, :]) * scale[:, None, None, None]
    nq = points.shape[1]
    div = np.broadcast_to((1.0 / geometry.volume)[:, None, None], (len(scale), nq, d + 1)).copy()
    return {"values": values, "div": div}


def _nedelec_lowest(lam: np.ndarray, geometry: CellGeometry) -> dict[str, np.ndarray]:
    # Whitney forms lambda_i grad lambda_j - lambda_j grad lambda_i on edges (i, j), i < j.
    gl = geometry.grad_lambda
    edges = LOCAL_EDGES[3]
    a = np.array([e[0] for e in edges])
    b = np.array([e[1] for e in edges])
    values = (
        lam[None, :, a, None] * gl[:, None, b, :] - lam[None, :, b, None] * gl[:, None, a, :]
    )
    curl = 2.0 * np.cross(gl[:, a, :], gl[:, b, :])
    nq = lam.shape[0]
    return {"values": values, "curl": np.broadcast_to(curl[:, None], (len(gl), nq, 6, 3)).copy()}


def _rt1_scaling(geometry: CellGeometry) -> tuple[np.ndarray, np.ndarray]:
    centroid = geometry.vertices.mean(axis=1)
    h = np.sqrt(2.0 * geometry.volume)
    return centroid, h


def _rt1_prime_basis(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Monomial RT1 basis in scaled coordinates.

    Args:
        xi: Scaled points, shape (..., 2).

    Returns:
        Values of shape (..., 8, 2) and scaled divergences of shape (..., 8).
    """
    x1 = xi[..., 0]
    x2 = xi[..., 1]
    one = np.ones_like(x1)
    zero = np.zeros_like(x1)
    values = np.stack(
        (
            np.stack((one, zero), axis=-1),
            np.stack((x1, zero), axis=-1),
            np.stack((x2, zero), axis=-1),
            np.stack((zero, one), axis=-1),
            np.stack((zero, x1), axis=-1),
            np.stack((zero, x2), axis=-1),
            np.stack((x1 * x1, x1 * x2), axis=-1),
            np.stack((x1 * x2, x2 * x2), axis=-1),
        ),
        axis=-2,
    )
    div = np.stack((zero, one, zero, zero, zero, one, 3.0 * x1, 3.0 * x2), axis=-1)
    return values, div


def _outward_edge_normals(geometry: CellGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normals and lengths of the local edges of triangles."""
    x = geometry.vertices
    normals = []
    lengths = []
    for k, (a, b) in enumerate(LOCAL_EDGES[2]):
        t = x[:, b, :] - x[:, a, :]
        length = np.linalg.norm(t, axis=1)
        n = np.stack((t[:, 1], -t[:, 0]), axis=1) / length[:, None]
        flip = np.einsum("ci,ci->c", n, x[:, a, :] - x[:, k, :]) < 0.0
        n[flip] *= -1.0
        normals.append(n)
        lengths.append(length)
    return np.stack(normals, axis=1), np.stack(lengths, axis=1)


def rt1_functional_matrix(geometry: CellGeometry) -> np.ndarray:
    """Apply the local RT1 dof functionals to the prime basis.

    Rows are functionals (edge k: moment against 1 then against 2s - 1 with s running
    from the lower to the higher local vertex; then the cell means of u_x and u_y);
    columns are prime basis functions.

    Args:
        geometry: Geometry of triangles.

    Returns:
        Matrix of shape (nc, 8, 8).
    """
    centroid, h = _rt1_scaling(geometry)
    normals, lengths = _outward_edge_normals(geometry)
    edge_rule = interval_rule(3)
    s = edge_rule.points[:, 0]
    nc = geometry.det.shape[0]
    matrix = np.zeros((nc, 8, 8))
    x = geometry.vertices
    for k, (a, b) in enumerate(LOCAL_EDGES[2]):
        pts = x[:, None, a, :] + s[None, :, None] * (x[:, None, b, :] - x[:, None, a, :])
        values, _ = _rt1_prime_basis((pts - centroid[:, None, :]) / h[:, None, None])
        flux = np.einsum("cqmi,ci->cqm", values, normals[:, k, :])
        weights = edge_rule.weights[None, :] * lengths[:, k, None]
        matrix[:, 2 * k, :] = np.einsum("cq,cqm->cm", weights, flux)
        matrix[:, 2 * k + 1, :] = np.einsum("cq,q,cqm->cm", weights, 2.0 * s - 1.0, flux)
    cell_rule = simplex_rule(2, 2)
    pts = geometry.map_points(cell_rule.points)
    values, _ = _rt1_prime_basis((pts - centroid[:, None, :]) / h[:, None, None])
    means = np.einsum("q,cqmi->cim", cell_rule.weights, values) * 2.0
    matrix[:, 6, :] = means[:, 0, :]
    matrix[:, 7, :] = means[:, 1, :]
    return matrix


def _raviart_thomas_first(points: np.ndarray, geometry: CellGeometry) -> dict[str, np.ndarray]:
    centroid, h = _rt1_scaling(geometry)
    coefficients = np.linalg.inv(rt1_functional_matrix(geometry))
    xi = (points - centroid[:, None, :]) / h[:, None, None]
    prime_values, prime_div = _rt1_prime_basis(xi)
    values = np.einsum("cqmi,cmj->cqji", prime_values, coefficients)
    div = np.einsum("cqm,cmj->cqj", prime_div, coefficients) / h[:, None, None]
    return {"values": values, "div": div}


def _discontinuous(degree: int, lam: np.ndarray, geometry: CellGeometry) -> tuple[np.ndarray, np.ndarray]:
    nc = geometry.det.shape[0]
    nq, nv = lam.shape
    d = nv - 1
    if degree == 0:
        return np.ones((nc, nq, 1)), np.zeros((nc, nq, 1, d))
    return _lagrange_scalar(1, lam, geometry)


def tabulate(
    dofmap: DofMap,
    ref_points: np.ndarray,
    cells: np.ndarray | None = None,
    ref_weights: np.ndarray | None = None,
    geometry: CellGeometry | None = None,
) -> BasisTable:
    """Tabulate the global basis of a space at reference points of a block of cells.

    Args:
        dofmap: The space.
        ref_points: Reference coordinates, shape (nq, d).
        cells: Cell indices; all cells when omitted.
        ref_weights: Reference quadrature weights; the table weights become
            ``ref_weights * det J``. Unit weights when omitted.
        geometry: Precomputed geometry of the same cells.

    Returns:
        The basis table.
    """
    mesh = dofmap.mesh
    space = dofmap.space
    geometry = geometry if geometry is not None else compute_geometry(mesh, cells)
    index = geometry.cells
    ref_points = np.atleast_2d(np.asarray(ref_points, dtype=np.float64))
    lam = np.column_stack((1.0 - ref_points.sum(axis=1), ref_points))
    points = geometry.map_points(ref_points)
    if ref_weights is None:
        weights = np.ones(points.shape[:2])
    else:
        weights = geometry.det[:, None] * np.asarray(ref_weights)[None, :]

    signs = dofmap.cell_signs[index].astype(np.float64)
    fields: dict[str, np.ndarray] = {}
    if space.family is ElementFamily.LAGRANGE and space.value_kind is ValueKind.VECTOR_REAL:
        fields = _lagrange_vector(lam, geometry)
    elif space.family is ElementFamily.LAGRANGE:
        fields["values"], fields["grads"] = _lagrange_scalar(space.degree, lam, geometry)
    elif space.family is ElementFamily.DISCONTINUOUS_LAGRANGE:
        fields["values"], fields["grads"] = _discontinuous(space.degree, lam, geometry)
    elif space.family is ElementFamily.RAVIART_THOMAS and space.degree == 0:
        fields = _raviart_thomas_lowest(points, geometry)
    elif space.family is ElementFamily.RAVIART_THOMAS:
        fields = _raviart_thomas_first(points, geometry)
    else:
        fields = _nedelec_lowest(lam, geometry)

    signed: dict[str, np.ndarray] = {}
    for name, table in fields.items():
        shape = signs.shape[:1] + (1,) + signs.shape[1:] + (1,) * (table.ndim - 3)
        signed[name] = table * signs.reshape(shape)
    return BasisTable(
        dofs=dofmap.cell_dofs[index],
        points=points,
        weights=weights,
        values=signed["values"],
        grads=signed.get("grads"),
        div=signed.get("div"),
        curl=signed.get("curl"),
    )


def tabulate_rule(
    dofmap: DofMap,
    rule: QuadratureRule,
    cells: np.ndarray | None = None,
    geometry: CellGeometry | None = None,
) -> BasisTable:
    """Tabulate a space at the points of a quadrature rule."""
    return tabulate(dofmap, rule.points, cells, ref_weights=rule.weights, geometry=geometry)
