"""Assembly of the sesquilinear and bilinear forms of the TDGL schemes.

Complex inner products conjugate the second argument: (u, v) = int u conj(v).
Local matrices are indexed [cell, test, trial] and scattered as (row = test,
column = trial). Matrices that do not change during a run are assembled once
and cached together with the basis tables they are built from.
"""

import logging
import threading
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from tdgl_mixed_fem.adapters.linsolve.sparse_lu_adapter import TripletBuffer, from_triplets
from tdgl_mixed_fem.domain.cases.case_models import FieldName, ManufacturedCase
from tdgl_mixed_fem.domain.fespace.elements import BasisTable, compute_geometry, tabulate_rule
from tdgl_mixed_fem.domain.fespace.function_space import evaluate_field, interpolate
from tdgl_mixed_fem.domain.fespace.space_models import DofMap, FeFunction, SpaceDescriptor
from tdgl_mixed_fem.domain.mesh.mesh_models import DomainKind, Mesh
from tdgl_mixed_fem.domain.quadrature.quadrature_rules import (
    CellType,
    QuadratureRule,
    quadrature_rule,
)
from tdgl_mixed_fem.domain.tdgl.tdgl_models import TdglState

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 16384


@dataclass(frozen=True)
class AssembledSystem:
    """A linear system with essential conditions already eliminated.

    Attributes:
        matrix: Sparse CSR matrix, real or complex.
        rhs: Right-hand side.
        dirichlet_dofs: Eliminated dofs.
        dirichlet_values: Values imposed on them.
    """

    matrix: sps.csr_matrix
    rhs: np.ndarray
    dirichlet_dofs: np.ndarray
    dirichlet_values: np.ndarray

    def __post_init__(self) -> None:
        """Check dimensions."""
        if self.matrix.shape[0] != self.rhs.shape[0]:
            raise ValueError(
                f"Matrix has {self.matrix.shape[0]} rows but rhs has length {self.rhs.shape[0]}"
            )


def apply_dirichlet(
    matrix: sps.spmatrix,
    rhs: np.ndarray,
    dofs: np.ndarray,
    values: np.ndarray,
) -> AssembledSystem:
    """Eliminate essential conditions by row and column elimination.

    Constrained rows and columns are zeroed, the diagonal set to one and the
    right-hand side corrected so symmetric matrices stay symmetric.

    Args:
        matrix: Unconstrained matrix.
        rhs: Unconstrained right-hand side.
        dofs: Constrained dofs.
        values: Imposed values.

    Returns:
        The constrained system.
    """
    n = matrix.shape[0]
    dofs = np.asarray(dofs, dtype=np.int64)
    dtype = np.result_type(matrix.dtype, rhs.dtype, np.asarray(values).dtype)
    lifted = np.zeros(n, dtype=dtype)
    lifted[dofs] = values
    corrected = (rhs - matrix @ lifted).astype(dtype)
    corrected[dofs] = values
    keep = np.ones(n)
    keep[dofs] = 0.0
    keep_diag = sps.diags(keep)
    constrained = keep_diag @ matrix @ keep_diag + sps.diags(1.0 - keep)
    return AssembledSystem(
        matrix=sps.csr_matrix(constrained),
        rhs=corrected,
        dirichlet_dofs=dofs,
        dirichlet_values=np.asarray(values, dtype=dtype),
    )


def _scatter(buffer: TripletBuffer, test: BasisTable, trial: BasisTable, local: np.ndarray) -> None:
    nt = test.dofs.shape[1]
    ns = trial.dofs.shape[1]
    rows = np.broadcast_to(test.dofs[:, :, None], (len(local), nt, ns))
    cols = np.broadcast_to(trial.dofs[:, None, :], (len(local), nt, ns))
    buffer.add(rows, cols, local)


def _scatter_vector(n: int, dofs: np.ndarray, local: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(local):
        return _scatter_vector(n, dofs, local.real) + 1j * _scatter_vector(n, dofs, local.imag)
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=n)


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise product of scalar or vector quantities, contracting the vector axis."""
    if a.ndim == 4:
        return np.einsum("cqjd,cqid->cqji", a, b)
    return np.einsum("cqj,cqi->cqji", a, b)


class AssemblyService:
    """Assembles the TDGL systems on a fixed set of spaces.

    Basis tables and run-constant matrices are cached per (space, quadrature
    degree). The cache is guarded by a lock so the two systems of a step can
    be assembled on different threads.
    """

    def __init__(self, block_size: int = DEFAULT_BLOCK_SIZE) -> None:
        """Initialize the service.

        Args:
            block_size: Number of cells processed per vectorized block.
        """
        self._block_size = block_size
        self._tables: dict[tuple[DofMap, int], list[BasisTable]] = {}
        self._matrices: dict[tuple[object, ...], sps.csr_matrix] = {}
        self._lock = threading.RLock()

    # Quadrature policy

    @staticmethod
    def quadrature_rule(cell_type: CellType, degree: int) -> QuadratureRule:
        """Quadrature rule of a cell type exact to ``degree``."""
        return quadrature_rule(cell_type, degree)

    @staticmethod
    def matrix_degree(*spaces: SpaceDescriptor) -> int:
        """Quadrature degree for matrices: twice the highest basis degree plus two."""
        return 2 * max(s.polynomial_degree for s in spaces) + 2

    @staticmethod
    def load_degree(dimension: int) -> int:
        """Quadrature degree for load vectors."""
        return 6 if dimension == 2 else 5

    @staticmethod
    def error_degree(mesh: Mesh) -> int:
        """Quadrature degree for errors; the maximum available on the L-shape."""
        cell_type = CellType.for_dimension(mesh.dimension)
        if mesh.domain is DomainKind.LSHAPE:
            return cell_type.max_degree
        return 6 if mesh.dimension == 2 else 5

    # Tables and generic forms

    def _blocks(self, mesh: Mesh) -> list[np.ndarray]:
        return [
            np.arange(start, min(start + self._block_size, mesh.num_cells))
            for start in range(0, mesh.num_cells, self._block_size)
        ]

    def tables(self, dofmap: DofMap, degree: int) -> list[BasisTable]:
        """Cached basis tables of a space, one per cell block.

        Args:
            dofmap: The space.
            degree: Quadrature degree.

        Returns:
            Tables over all cells, block by block. Blocks of different spaces on
            the same mesh cover the same cells.
        """
        key = (dofmap, degree)
        with self._lock:
            if key not in self._tables:
                mesh = dofmap.mesh
                rule = quadrature_rule(CellType.for_dimension(mesh.dimension), degree)
                self._tables[key] = [
                    tabulate_rule(dofmap, rule, geometry=compute_geometry(mesh, block))
                    for block in self._blocks(mesh)
                ]
            return self._tables[key]

    def bilinear_form(
        self,
        test: DofMap,
        trial: DofMap,
        degree: int,
        integrand: Callable[[BasisTable, BasisTable, int], np.ndarray],
    ) -> sps.csr_matrix:
        """Assemble a bilinear form block by block.

        Args:
            test: Test space (rows).
            trial: Trial space (columns).
            degree: Quadrature degree.
            integrand: Maps (test table, trial table, block index) to local matrices
                of shape (nc, n_test, n_trial) that already include the weights.

        Returns:
            The assembled matrix.
        """
        if not test.same_mesh(trial):
            raise ValueError("Test and trial spaces live on different meshes")
        buffer = TripletBuffer()
        test_tables = self.tables(test, degree)
        trial_tables = self.tables(trial, degree)
        for index, (tt, st) in enumerate(zip(test_tables, trial_tables, strict=True)):
            _scatter(buffer, tt, st, integrand(tt, st, index))
        return from_triplets(
            test.num_global_dofs,
            buffer,
            shape=(test.num_global_dofs, trial.num_global_dofs),
        )

    def linear_form(
        self,
        test: DofMap,
        degree: int,
        integrand: Callable[[BasisTable, int], np.ndarray],
    ) -> np.ndarray:
        """Assemble a load vector block by block.

        Args:
            test: Test space.
            degree: Quadrature degree.
            integrand: Maps (test table, block index) to weighted local vectors (nc, n_test).

        Returns:
            The load vector.
        """
        result: np.ndarray | None = None
        for index, table in enumerate(self.tables(test, degree)):
            part = _scatter_vector(test.num_global_dofs, table.dofs, integrand(table, index))
            result = part if result is None else result + part
        assert result is not None
        return result

    def _cached(self, key: tuple[object, ...], build: Callable[[], sps.csr_matrix]) -> sps.csr_matrix:
        with self._lock:
            if key not in self._matrices:
                self._matrices[key] = build()
            return self._matrices[key]

    def mass_matrix(self, dofmap: DofMap, degree: int | None = None) -> sps.csr_matrix:
        """Mass matrix (phi_i, phi_j) of a scalar or vector space."""
        degree = self.matrix_degree(dofmap.space) if degree is None else degree
        return self._cached(
            ("mass", dofmap, degree),
            lambda: self.bilinear_form(
                dofmap,
                dofmap,
                degree,
                lambda te, tr, _: np.einsum("cq,cqji->cji", te.weights, _dot(te.values, tr.values)),
            ),
        )

    def stiffness_matrix(self, dofmap: DofMap, degree: int | None = None) -> sps.csr_matrix:
        """Stiffness matrix (grad phi_i, grad phi_j) of a scalar space."""
        degree = self.matrix_degree(dofmap.space) if degree is None else degree
        return self._cached(
            ("stiffness", dofmap, degree),
            lambda: self.bilinear_form(
                dofmap,
                dofmap,
                degree,
                lambda te, tr, _: np.einsum("cq,cqji->cji", te.weights, _dot(te.grads, tr.grads)),
            ),
        )

    def div_div_matrix(self, dofmap: DofMap, degree: int | None = None) -> sps.csr_matrix:
        """(div phi_i, div phi_j) of a vector space."""
        degree = self.matrix_degree(dofmap.space) if degree is None else degree
        return self._cached(
            ("divdiv", dofmap, degree),
            lambda: self.bilinear_form(
                dofmap,
                dofmap,
                degree,
                lambda te, tr, _: np.einsum("cq,cqj,cqi->cji", te.weights, te.div, tr.div),
            ),
        )

    def curl_curl_matrix(self, dofmap: DofMap, degree: int | None = None) -> sps.csr_matrix:
        """(curl phi_i, curl phi_j) of a 2D vector space."""
        degree = self.matrix_degree(dofmap.space) if degree is None else degree
        return self._cached(
            ("curlcurl", dofmap, degree),
            lambda: self.bilinear_form(
                dofmap,
                dofmap,
                degree,
                lambda te, tr, _: np.einsum("cq,cqj,cqi->cji", te.weights, te.curl, tr.curl),
            ),
        )

    def curl_coupling_matrix(
        self, dofmap_A: DofMap, dofmap_sigma: DofMap, degree: int
    ) -> sps.csr_matrix:
        """The block (curl sigma, v) with rows in the A space and columns in the sigma space.

        In 2D the curl of the scalar sigma is the rotated gradient (d/dy, -d/dx).
        """

        def integrand(te: BasisTable, tr: BasisTable, _: int) -> np.ndarray:
            curl = tr.rot if tr.grads is not None else tr.curl
            return np.einsum("cq,cqji->cji", te.weights, _dot(te.values, curl))

        return self._cached(
            ("coupling", dofmap_A, dofmap_sigma, degree),
            lambda: self.bilinear_form(dofmap_A, dofmap_sigma, degree, integrand),
        )

    def weighted_mass_matrix(
        self, dofmap: DofMap, degree: int, weight: Callable[[int], np.ndarray]
    ) -> sps.csr_matrix:
        """Mass matrix with a pointwise weight given per block at the quadrature points."""
        return self.bilinear_form(
            dofmap,
            dofmap,
            degree,
            lambda te, tr, index: np.einsum(
                "cq,cqji->cji", te.weights * weight(index), _dot(te.values, tr.values)
            ),
        )

    def _check_meshes(self, *functions: FeFunction | DofMap) -> None:
        meshes = {id(f.mesh) for f in functions}
        if len(meshes) != 1:
            raise ValueError("Inputs are defined on different meshes")

    # psi equation

    def assemble_psi_system(
        self,
        state_prev: TdglState,
        tau: float,
        case: ManufacturedCase,
        dofmap_psi: DofMap,
    ) -> AssembledSystem:
        """Assemble the linear system for psi at the next time level.

        The matrix is (eta/tau)(phi, w) - i eta kappa (div A phi, w)
        + ((i/kappa grad + A) phi, (i/kappa grad + A) w) + ((|psi|^2 - 1) phi, w)
        with A and psi lagged; the right-hand side is (eta/tau)(psi_prev, w) + (g, w).
        No essential condition is imposed.

        Args:
            state_prev: Previous level (psi and A are read).
            tau: Time step.
            case: Manufactured case providing g and kappa.
            dofmap_psi: psi space.

        Returns:
            The complex system.
        """
        psi_old = state_prev.psi
        a_old = state_prev.A
        self._check_meshes(psi_old, a_old, dofmap_psi)
        kappa, eta = case.kappa, case.eta
        time = (state_prev.n + 1) * tau
        degree = self.matrix_degree(dofmap_psi.space, a_old.space)
        a_tables = self.tables(a_old.dofmap, degree)

        def integrand(te: BasisTable, tr: BasisTable, index: int) -> np.ndarray:
            at = a_tables[index]
            a = at.combine(a_old.coefficients)
            div_a = at.combine(a_old.coefficients, "div")
            psi = te.combine(psi_old.coefficients)
            potential = np.sum(a * a, axis=-1) + np.abs(psi) ** 2 - 1.0 - 1j * eta * kappa * div_a
            local = np.einsum("cq,cqj,cqi->cji", te.weights * potential, te.values, tr.values)
            # conv[c, j, i] = int (A . grad phi_i) phi_j
            conv = np.einsum("cq,cqd,cqid,cqj->cji", te.weights, a, tr.grads, te.values)
            return local + (1j / kappa) * (conv - np.transpose(conv, (0, 2, 1)))

        variable = self.bilinear_form(dofmap_psi, dofmap_psi, degree, integrand)
        mass = self.mass_matrix(dofmap_psi, degree)
        stiffness = self.stiffness_matrix(dofmap_psi, degree)
        matrix = (eta / tau) * mass + stiffness / kappa**2 + variable

        load_degree = self.load_degree(dofmap_psi.mesh.dimension)
        forcing = self.linear_form(
            dofmap_psi,
            load_degree,
            lambda te, _: np.einsum(
                "cq,cq,cqj->cj",
                te.weights,
                evaluate_field(case.at(FieldName.G, time), te.points),
                te.values,
            ),
        )
        rhs = (eta / tau) * (mass @ psi_old.coefficients) + forcing
        empty = np.zeros(0, dtype=np.int64)
        return AssembledSystem(
            matrix=sps.csr_matrix(matrix, dtype=np.complex128),
            rhs=rhs.astype(np.complex128),
            dirichlet_dofs=empty,
            dirichlet_values=np.zeros(0, dtype=np.complex128),
        )

    # A equation

    def _density_weight(self, psi: FeFunction, degree: int) -> Callable[[int], np.ndarray]:
        tables = self.tables(psi.dofmap, degree)
        return lambda index: np.abs(tables[index].combine(psi.coefficients)) ** 2

    def _a_load(
        self,
        dofmap_A: DofMap,
        psi_prev: FeFunction,
        case: ManufacturedCase,
        time: float,
        include_curl_h: bool,
    ) -> np.ndarray:
        """(f, v) + (1/kappa)(Im(conj(psi) grad psi), v), plus (curl H_e, v) if requested."""
        degree = self.load_degree(dofmap_A.mesh.dimension)
        psi_tables = self.tables(psi_prev.dofmap, degree)
        kappa = case.kappa

        def integrand(te: BasisTable, index: int) -> np.ndarray:
            pt = psi_tables[index]
            psi = pt.combine(psi_prev.coefficients)
            grad_psi = pt.combine(psi_prev.coefficients, "grads")
            field = evaluate_field(case.at(FieldName.F, time), te.points)
            field = field + np.imag(np.conj(psi)[..., None] * grad_psi) / kappa
            if include_curl_h:
                field = field + evaluate_field(case.at(FieldName.CURL_H_E, time), te.points)
            return np.einsum("cq,cqd,cqjd->cj", te.weights, field, te.values)

        return self.linear_form(dofmap_A, degree, integrand)

    def assemble_sigma_A_system(
        self,
        state_prev: TdglState,
        psi_prev: FeFunction,
        tau: float,
        case: ManufacturedCase,
        dofmap_sigma: DofMap,
        dofmap_A: DofMap,
    ) -> AssembledSystem:
        """Assemble the real saddle system for (sigma, A) at the next time level.

        Unknowns are ordered sigma first, then A:

            [ (sigma, chi)   -(curl chi, A)                          ]
            [ (curl sigma, v) (1/tau)(A, v) + (div A, div v) + (|psi|^2 A, v) ]

        with right-hand side (0, (1/tau)(A_prev, v) + (curl H_e, v) + (f, v)
        + (1/kappa)(Im(conj(psi) grad psi), v)). Boundary sigma dofs take the
        interpolated H_e; boundary normal dofs of A are zero.

        Args:
            state_prev: Previous level (A is read).
            psi_prev: The lagged order parameter.
            tau: Time step.
            case: Manufactured case.
            dofmap_sigma: sigma space.
            dofmap_A: A space.

        Returns:
            The real constrained system.
        """
        a_old = state_prev.A
        self._check_meshes(a_old, psi_prev, dofmap_sigma, dofmap_A)
        if dofmap_sigma.space.degree != dofmap_A.space.degree + 1:
            raise ValueError(
                f"Invalid pairing {dofmap_sigma.space.label} x {dofmap_A.space.label}: "
                "sigma must have degree r + 1 for A of degree r"
            )
        time = (state_prev.n + 1) * tau
        degree = self.matrix_degree(dofmap_sigma.space, dofmap_A.space, psi_prev.space)
        mass_sigma = self.mass_matrix(dofmap_sigma, degree)
        coupling = self.curl_coupling_matrix(dofmap_A, dofmap_sigma, degree)
        mass_a = self.mass_matrix(dofmap_A, degree)
        divdiv = self.div_div_matrix(dofmap_A, degree)
        density = self.weighted_mass_matrix(dofmap_A, degree, self._density_weight(psi_prev, degree))
        block_aa = mass_a / tau + divdiv + density
        matrix = sps.bmat([[mass_sigma, -coupling.T], [coupling, block_aa]], format="csr")

        rhs_a = (mass_a @ a_old.coefficients) / tau + self._a_load(
            dofmap_A, psi_prev, case, time, include_curl_h=True
        )
        n_sigma = dofmap_sigma.num_global_dofs
        rhs = np.concatenate((np.zeros(n_sigma), rhs_a))

        sigma_dofs = dofmap_sigma.boundary_dofs
        h_e = interpolate(dofmap_sigma, case.at(FieldName.H_E, time))
        dofs = np.concatenate((sigma_dofs, n_sigma + dofmap_A.boundary_dofs))
        values = np.concatenate(
            (h_e.coefficients[sigma_dofs], np.zeros(len(dofmap_A.boundary_dofs)))
        )
        return apply_dirichlet(matrix, rhs, dofs, values)

    def constraint_residual(self, sigma: FeFunction, a: FeFunction) -> float:
        """Relative residual of the rows (sigma, chi) - (curl chi, A) = 0 over interior chi.

        Args:
            sigma: Computed sigma.
            a: Computed A.

        Returns:
            max |residual| divided by the larger norm of the two terms; zero when
            sigma and A vanish.
        """
        degree = self.matrix_degree(sigma.space, a.space)
        mass_sigma = self.mass_matrix(sigma.dofmap, degree)
        coupling = self.curl_coupling_matrix(a.dofmap, sigma.dofmap, degree)
        residual = mass_sigma @ sigma.coefficients - coupling.T @ a.coefficients
        interior = residual[sigma.dofmap.interior_dofs]
        magnitude = float(np.max(np.abs(interior), initial=0.0))
        scale = max(
            float(np.linalg.norm(mass_sigma @ sigma.coefficients)),
            float(np.linalg.norm(coupling.T @ a.coefficients)),
        )
        if magnitude == 0.0:
            return 0.0
        return magnitude / max(scale, np.finfo(float).tiny)

    def assemble_lagrange_A_system(
        self,
        state_prev: TdglState,
        tau: float,
        case: ManufacturedCase,
        dofmap_A: DofMap,
    ) -> AssembledSystem:
        """Assemble the conventional vector Lagrange system for A.

        (1/tau)(A, v) + (div A, div v) + (curl A, curl v) + (|psi|^2 A, v)
        = (1/tau)(A_prev, v) + (H_e, curl v) + (f, v) + (1/kappa)(Im(conj(psi) grad psi), v),
        with A.n = 0 imposed component-wise on the axis-aligned boundary.

        Args:
            state_prev: Previous level (psi and A are read).
            tau: Time step.
            case: Manufactured case.
            dofmap_A: Vector P1 space with essential boundary.

        Returns:
            The real constrained system.
        """
        a_old = state_prev.A
        psi_prev = state_prev.psi
        self._check_meshes(a_old, psi_prev, dofmap_A)
        time = (state_prev.n + 1) * tau
        degree = self.matrix_degree(dofmap_A.space, psi_prev.space)
        mass_a = self.mass_matrix(dofmap_A, degree)
        matrix = (
            mass_a / tau
            + self.div_div_matrix(dofmap_A, degree)
            + self.curl_curl_matrix(dofmap_A, degree)
            + self.weighted_mass_matrix(dofmap_A, degree, self._density_weight(psi_prev, degree))
        )
        load_degree = self.load_degree(dofmap_A.mesh.dimension)
        applied = self.linear_form(
            dofmap_A,
            load_degree,
            lambda te, _: np.einsum(
                "cq,cq,cqj->cj",
                te.weights,
                evaluate_field(case.at(FieldName.H_E, time), te.points),
                te.curl,
            ),
        )
        rhs = (mass_a @ a_old.coefficients) / tau + applied
        rhs = rhs + self._a_load(dofmap_A, psi_prev, case, time, include_curl_h=False)
        bc = dofmap_A.boundary_dofs
        return apply_dirichlet(sps.csr_matrix(matrix), rhs, bc, np.zeros(len(bc)))

    def curl_load(self, dofmap: DofMap, a: FeFunction) -> np.ndarray:
        """(curl A_h, chi) for a scalar 2D test space; used for the L2-projected curl."""
        degree = self.matrix_degree(dofmap.space, a.space)
        a_tables = self.tables(a.dofmap, degree)
        return self.linear_form(
            dofmap,
            degree,
            lambda te, index: np.einsum(
                "cq,cq,cqj->cj", te.weights, a_tables[index].combine(a.coefficients, "curl"), te.values
            ),
        )

    # Errors

    def l2_error(
        self,
        f: FeFunction,
        exact: Callable[[np.ndarray], np.ndarray],
        quad_degree: int | None = None,
    ) -> float:
        """L2 norm of f - exact; modulus for complex, Euclidean norm for vectors.

        Args:
            f: Discrete function.
            exact: Exact field callback.
            quad_degree: Quadrature degree; the error policy of the mesh when omitted.

        Returns:
            The error.
        """
        mesh = f.mesh
        degree = self.error_degree(mesh) if quad_degree is None else quad_degree
        rule = quadrature_rule(CellType.for_dimension(mesh.dimension), degree)
        total = 0.0
        for block in self._blocks(mesh):
            table = tabulate_rule(f.dofmap, rule, geometry=compute_geometry(mesh, block))
            diff = table.combine(f.coefficients) - evaluate_field(exact, table.points)
            squared = np.abs(diff) ** 2
            if squared.ndim == 3:
                squared = squared.sum(axis=-1)
            total += float(np.einsum("cq,cq->", table.weights, squared))
        return float(np.sqrt(total))
