"""Simplicial mesh models and the uniform mesh builders.

This module provides the three computational domains used by the solver:
- the unit square (0,1)^2 split by lower-left to upper-right diagonals,
- the L-shape (-1,1)^2 minus [0,1]x[-1,0] with the reentrant corner at the origin,
- the unit cube (0,1)^3 split by the Kuhn (Freudenthal) subdivision.

Edges and faces are oriented canonically by ascending global vertex index.
Every cell stores, per local edge and per local facet, the sign relating its
own orientation to the canonical one.
"""

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

# Local edges as (i, j) pairs of local vertex indices with i < j.
# In 2D, local edge k is opposite local vertex k.
LOCAL_EDGES: dict[int, tuple[tuple[int, int], ...]] = {
    2: ((1, 2), (0, 2), (0, 1)),
    3: ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
}

# Local facets, facet k opposite local vertex k, vertices in ascending local order.
LOCAL_FACETS: dict[int, tuple[tuple[int, ...], ...]] = {
    2: ((1, 2), (0, 2), (0, 1)),
    3: ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)),
}


class DomainKind(str, Enum):
    """Computational domains supported by the builders."""

    UNIT_SQUARE = "unit_square"
    LSHAPE = "lshape"
    UNIT_CUBE = "unit_cube"


DOMAIN_MEASURE: dict[DomainKind, float] = {
    DomainKind.UNIT_SQUARE: 1.0,
    DomainKind.LSHAPE: 3.0,
    DomainKind.UNIT_CUBE: 1.0,
}


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Mesh:
    """Immutable simplicial mesh with full entity connectivity.

    Attributes:
        dimension: Spatial dimension (2 or 3).
        vertices: Vertex coordinates, shape (nv, dimension).
        cells: Cell vertex indices, shape (nc, dimension + 1), positive orientation.
        edges: Edge vertex pairs sorted ascending, shape (ne, 2).
        faces: Face vertex triples sorted ascending, shape (nf, 3); empty in 2D.
        cell_edges: Global edge index of every local edge, shape (nc, n_local_edges).
        cell_edge_signs: +1 where the local edge direction (low to high local index)
            matches the canonical direction, -1 otherwise.
        cell_facets: Global facet index (edge in 2D, face in 3D) of the facet opposite
            each local vertex, shape (nc, dimension + 1).
        cell_facet_signs: +1 where the outward normal of the cell agrees with the
            canonical facet normal, -1 otherwise.
        facet_cells: The one or two cells sharing each facet; -1 marks a boundary side.
        boundary_vertices: Boolean mask over vertices.
        boundary_edges: Boolean mask over edges.
        boundary_facets: Boolean mask over facets.
        domain: Which builder produced the mesh.
        mesh_density: The M the mesh was built with.
    """

    dimension: int
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    cell_edges: np.ndarray
    cell_edge_signs: np.ndarray
    cell_facets: np.ndarray
    cell_facet_signs: np.ndarray
    facet_cells: np.ndarray
    boundary_vertices: np.ndarray
    boundary_edges: np.ndarray
    boundary_facets: np.ndarray
    domain: DomainKind
    mesh_density: int

    @property
    def num_vertices(self) -> int:
        """Number of vertices."""
        return int(self.vertices.shape[0])

    @property
    def num_cells(self) -> int:
        """Number of cells."""
        return int(self.cells.shape[0])

    @property
    def num_edges(self) -> int:
        """Number of edges."""
        return int(self.edges.shape[0])

    @property
    def num_faces(self) -> int:
        """Number of faces (zero in 2D)."""
        return int(self.faces.shape[0])

    @property
    def facets(self) -> np.ndarray:
        """Codimension-one entities: edges in 2D, faces in 3D."""
        return self.edges if self.dimension == 2 else self.faces

    @property
    def num_facets(self) -> int:
        """Number of facets."""
        return int(self.facets.shape[0])

    @property
    def h(self) -> float:
        """Mesh size: diameter of the (congruent) cells."""
        return math.sqrt(self.dimension) / self.mesh_density

    def cell_vertices(self, cells: np.ndarray | slice | None = None) -> np.ndarray:
        """Vertex coordinates per cell, shape (nc, dimension + 1, dimension)."""
        index = slice(None) if cells is None else cells
        return self.vertices[self.cells[index]]

    def signed_volumes(self) -> np.ndarray:
        """Signed cell volumes under the stored vertex order."""
        x = self.cell_vertices()
        jac = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))
        return np.linalg.det(jac) / math.factorial(self.dimension)

    def facet_normals(self) -> np.ndarray:
        """Canonical unit normals of the facets.

        In 2D the normal of edge (a, b) is the clockwise rotation of b - a; in 3D it is
        (x_b - x_a) x (x_c - x_a) for the ascending triple (a, b, c).
        """
        facets = self.facets
        x = self.vertices
        if self.dimension == 2:
            t = x[facets[:, 1]] - x[facets[:, 0]]
            n = np.column_stack((t[:, 1], -t[:, 0]))
        else:
            n = np.cross(x[facets[:, 1]] - x[facets[:, 0]], x[facets[:, 2]] - x[facets[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    def facet_measures(self) -> np.ndarray:
        """Length (2D) or area (3D) of every facet."""
        facets = self.facets
        x = self.vertices
        if self.dimension == 2:
            return np.linalg.norm(x[facets[:, 1]] - x[facets[:, 0]], axis=1)
        cross = np.cross(x[facets[:, 1]] - x[facets[:, 0]], x[facets[:, 2]] - x[facets[:, 0]])
        return 0.5 * np.linalg.norm(cross, axis=1)


def _unique_entities(local: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deduplicate per-cell entities given as sorted vertex tuples.

    Args:
        local: Array of shape (nc, n_local, k) with ascending vertex tuples.

    Returns:
        The unique entities (lexicographically ordered) and the per-cell index map.
    """
    nc, n_local, k = local.shape
    flat = local.reshape(-1, k)
    entities, inverse = np.unique(flat, axis=0, return_inverse=True)
    return entities, np.asarray(inverse).reshape(nc, n_local)


def _facet_cells(cell_facets: np.ndarray, num_facets: int) -> np.ndarray:
    nc, n_local = cell_facets.shape
    flat = cell_facets.ravel()
    owners = np.repeat(np.arange(nc), n_local)
    order = np.argsort(flat, kind="stable")
    sorted_facets = flat[order]
    sorted_owners = owners[order]
    starts = np.searchsorted(sorted_facets, np.arange(num_facets), side="left")
    counts = np.bincount(flat, minlength=num_facets)
    if counts.max() > 2:
        raise ValueError("Non-manifold mesh: a facet is shared by more than two cells")
    result = -np.ones((num_facets, 2), dtype=np.int64)
    result[:, 0] = sorted_owners[starts]
    two = counts == 2
    result[two, 1] = sorted_owners[starts[two] + 1]
    return result


def build_mesh(
    vertices: np.ndarray,
    cells: np.ndarray,
    domain: DomainKind,
    mesh_density: int,
) -> Mesh:
    """Build the full connectivity of a simplicial mesh.

    Args:
        vertices: Vertex coordinates, shape (nv, d).
        cells: Positively oriented cell vertex indices, shape (nc, d + 1).
        domain: Domain the mesh covers.
        mesh_density: The M parameter of the builder.

    Returns:
        The immutable Mesh.
    """
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    dim = vertices.shape[1]
    if dim not in (2, 3) or cells.shape[1] != dim + 1:
        raise ValueError(f"Unsupported simplicial mesh with vertex dim {dim}, cell size {cells.shape[1]}")

    local_edges = np.array(LOCAL_EDGES[dim])
    edge_vertices = cells[:, local_edges]
    cell_edge_signs = np.where(edge_vertices[:, :, 0] < edge_vertices[:, :, 1], 1, -1)
    edges, cell_edges = _unique_entities(np.sort(edge_vertices, axis=2))

    if dim == 3:
        face_vertices = np.sort(cells[:, np.array(LOCAL_FACETS[3])], axis=2)
        faces, cell_faces = _unique_entities(face_vertices)
        cell_facets = cell_faces
        facets = faces
    else:
        faces = np.zeros((0, 3), dtype=np.int64)
        cell_facets = cell_edges
        facets = edges

    # Outward sign: canonical normal points away from the opposite vertex.
    if dim == 2:
        t = vertices[facets[:, 1]] - vertices[facets[:, 0]]
        normals = np.column_stack((t[:, 1], -t[:, 0]))
    else:
        normals = np.cross(
            vertices[facets[:, 1]] - vertices[facets[:, 0]],
            vertices[facets[:, 2]] - vertices[facets[:, 0]],
        )
    anchor = vertices[facets[cell_facets, 0]]
    opposite = vertices[cells]
    dots = np.einsum("ckd,ckd->ck", normals[cell_facets], anchor - opposite)
    cell_facet_signs = np.where(dots > 0, 1, -1)

    facet_cells = _facet_cells(cell_facets, facets.shape[0])
    boundary_facets = facet_cells[:, 1] < 0

    boundary_vertices = np.zeros(vertices.shape[0], dtype=bool)
    boundary_vertices[facets[boundary_facets].ravel()] = True
    if dim == 2:
        boundary_edges = boundary_facets.copy()
    else:
        bface = faces[boundary_facets]
        bface_edges = np.sort(bface[:, [[0, 1], [0, 2], [1, 2]]].reshape(-1, 2), axis=1)
        edge_keys = edges[:, 0] * vertices.shape[0] + edges[:, 1]
        bkeys = np.unique(bface_edges[:, 0] * vertices.shape[0] + bface_edges[:, 1])
        boundary_edges = np.isin(edge_keys, bkeys)

    return Mesh(
        dimension=dim,
        vertices=_frozen(vertices),
        cells=_frozen(cells),
        edges=_frozen(edges.astype(np.int64)),
        faces=_frozen(faces.astype(np.int64)),
        cell_edges=_frozen(cell_edges.astype(np.int64)),
        cell_edge_signs=_frozen(cell_edge_signs.astype(np.int8)),
        cell_facets=_frozen(cell_facets.astype(np.int64)),
        cell_facet_signs=_frozen(cell_facet_signs.astype(np.int8)),
        facet_cells=_frozen(facet_cells),
        boundary_vertices=_frozen(boundary_vertices),
        boundary_edges=_frozen(boundary_edges),
        boundary_facets=_frozen(boundary_facets),
        domain=domain,
        mesh_density=mesh_density,
    )


def _check_density(M: int) -> None:
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise ValueError(f"Mesh density M must be a positive integer, got {M!r}")


def _split_squares(lower_left: np.ndarray, row_stride: np.ndarray) -> np.ndarray:
    """Split grid squares into two counterclockwise triangles along the (0,0)-(1,1) diagonal."""
    v00 = lower_left
    v10 = lower_left + 1
    v01 = lower_left + row_stride
    v11 = v01 + 1
    lower = np.column_stack((v00, v10, v11))
    upper = np.column_stack((v00, v11, v01))
    return np.stack((lower, upper), axis=1).reshape(-1, 3)


def build_unit_square_mesh(M: int) -> Mesh:
    """Uniform triangulation of (0,1)^2 with M cells per direction.

    Args:
        M: Number of grid intervals per direction.

    Returns:
        Mesh with (M+1)^2 vertices and 2M^2 triangles, h = sqrt(2)/M.
    """
    _check_density(M)
    n = M + 1
    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    vertices = np.column_stack((i.ravel() / M, j.ravel() / M))
    sj, si = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    lower_left = (sj * n + si).ravel()
    cells = _split_squares(lower_left, np.full(lower_left.shape, n))
    return build_mesh(vertices, cells, DomainKind.UNIT_SQUARE, M)


def build_lshape_mesh(M: int) -> Mesh:
    """Uniform triangulation of (-1,1)^2 minus [0,1]x[-1,0].

    The reentrant corner sits at the origin and the domain spans polar angles
    in (0, 3*pi/2). Cells have legs of length 1/M.

    Args:
        M: Number of cells per unit length.

    Returns:
        Mesh with 6M^2 triangles.
    """
    _check_density(M)
    n = 2 * M + 1
    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    # The removed quadrant is x > 0, y < 0 (grid indices i > M, j < M).
    keep = ~((i > M) & (j < M))
    numbering = -np.ones((n, n), dtype=np.int64)
    numbering[keep] = np.arange(int(keep.sum()))
    vertices = np.column_stack((-1.0 + i[keep] / M, -1.0 + j[keep] / M))

    sj, si = np.meshgrid(np.arange(2 * M), np.arange(2 * M), indexing="ij")
    keep_square = ~((si >= M) & (sj < M))
    si, sj = si[keep_square], sj[keep_square]
    v00 = numbering[sj, si]
    v10 = numbering[sj, si + 1]
    v01 = numbering[sj + 1, si]
    v11 = numbering[sj + 1, si + 1]
    lower = np.column_stack((v00, v10, v11))
    upper = np.column_stack((v00, v11, v01))
    cells = np.stack((lower, upper), axis=1).reshape(-1, 3)
    return build_mesh(vertices, cells, DomainKind.LSHAPE, M)


def _kuhn_tetrahedra() -> list[tuple[int, int, int, int]]:
    """Local corner indices (bit pattern x + 2y + 4z) of the six Kuhn tetrahedra."""
    tets = []
    for perm in itertools.permutations(range(3)):
        corner = 0
        path = [corner]
        for axis in perm:
            corner += 1 << axis
            path.append(corner)
        inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        if inversions % 2 == 1:
            path[2], path[3] = path[3], path[2]
        tets.append(tuple(path))
    return tets


def build_unit_cube_mesh(M: int) -> Mesh:
    """Uniform Kuhn tetrahedralization of (0,1)^3.

    Args:
        M: Number of grid intervals per direction.

    Returns:
        Mesh with (M+1)^3 vertices and 6M^3 tetrahedra, h = sqrt(3)/M.
    """
    _check_density(M)
    n = M + 1
    k, j, i = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    vertices = np.column_stack((i.ravel() / M, j.ravel() / M, k.ravel() / M))

    ck, cj, ci = np.meshgrid(np.arange(M), np.arange(M), np.arange(M), indexing="ij")
    base = ((ck * n + cj) * n + ci).ravel()
    offsets = np.array([(b & 1) + ((b >> 1) & 1) * n + ((b >> 2) & 1) * n * n for b in range(8)])
    local = np.array(_kuhn_tetrahedra())
    cells = (base[:, None, None] + offsets[local][None, :, :]).reshape(-1, 4)
    return build_mesh(vertices, cells, DomainKind.UNIT_CUBE, M)


MESH_BUILDERS = {
    DomainKind.UNIT_SQUARE: build_unit_square_mesh,
    DomainKind.LSHAPE: build_lshape_mesh,
    DomainKind.UNIT_CUBE: build_unit_cube_mesh,
}


def build_domain_mesh(domain: DomainKind, M: int) -> Mesh:
    """Build the uniform mesh of the given domain.

    Args:
        domain: Domain to mesh.
        M: Mesh density.

    Returns:
        The mesh.
    """
    return MESH_BUILDERS[domain](M)


def dump_mesh(mesh: Mesh, path: str | Path) -> None:
    """Write a mesh as plain text.

    The first line is `dim nv nc`, followed by one line of coordinates per vertex
    and one line of 0-based vertex indices per cell.

    Args:
        mesh: Mesh to write.
        path: Destination file.
    """
    lines = [f"{mesh.dimension} {mesh.num_vertices} {mesh.num_cells}"]
    lines.extend(" ".join(f"{c:.17g}" for c in row) for row in mesh.vertices)
    lines.extend(" ".join(str(int(v)) for v in row) for row in mesh.cells)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_mesh(path: str | Path, domain: DomainKind, mesh_density: int) -> Mesh:
    """Read a mesh written by :func:`dump_mesh`.

    Args:
        path: Source file.
        domain: Domain label to attach.
        mesh_density: M label to attach.

    Returns:
        The rebuilt mesh.
    """
    rows = Path(path).read_text(encoding="utf-8").split("\n")
    dim, nv, nc = (int(v) for v in rows[0].split())
    vertices = np.array([[float(v) for v in row.split()] for row in rows[1 : 1 + nv]])
    cells = np.array([[int(v) for v in row.split()] for row in rows[1 + nv : 1 + nv + nc]])
    if vertices.shape != (nv, dim) or cells.shape != (nc, dim + 1):
        raise ValueError(f"Malformed mesh file {path}")
    return build_mesh(vertices, cells, domain, mesh_density)
