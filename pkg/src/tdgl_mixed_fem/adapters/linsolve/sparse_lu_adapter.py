"""Sparse matrix construction and the SuperLU direct solver adapter."""

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from tdgl_mixed_fem.ports.solver_ports.linear_solver_port import (
    RESIDUAL_CONTRACT,
    LinearSolverPort,
    ResidualContractError,
    SingularMatrixError,
    SolveResult,
)

logger = logging.getLogger(__name__)


@dataclass
class TripletBuffer:
    """Accumulates (row, column, value) blocks before one sparse conversion.

    Attributes:
        rows: Row index blocks.
        cols: Column index blocks.
        values: Value blocks.
    """

    rows: list[np.ndarray] = field(default_factory=list)
    cols: list[np.ndarray] = field(default_factory=list)
    values: list[np.ndarray] = field(default_factory=list)

    def add(self, rows: np.ndarray, cols: np.ndarray, values: np.ndarray) -> None:
        """Append a block of entries of equal shape."""
        self.rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self.cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self.values.append(np.asarray(values).ravel())

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Concatenate all blocks."""
        if not self.rows:
            return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
        return np.concatenate(self.rows), np.concatenate(self.cols), np.concatenate(self.values)


def from_triplets(
    n: int,
    entries: TripletBuffer | Iterable[tuple[int, int, complex]],
    shape: tuple[int, int] | None = None,
) -> sps.csr_matrix:
    """Build a CSR matrix from triplets, summing duplicates.

    Args:
        n: Matrix dimension.
        entries: A triplet buffer or an iterable of (row, col, value).
        shape: Optional rectangular shape overriding (n, n).

    Returns:
        CSR matrix with sorted column indices and no duplicate entries.

    Raises:
        ValueError: If an index is out of range.
    """
    if isinstance(entries, TripletBuffer):
        rows, cols, values = entries.arrays()
    else:
        listed = list(entries)
        rows = np.array([e[0] for e in listed], dtype=np.int64)
        cols = np.array([e[1] for e in listed], dtype=np.int64)
        values = np.array([e[2] for e in listed]) if listed else np.zeros(0)
    nrows, ncols = shape if shape is not None else (n, n)
    if rows.size and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
        raise ValueError(f"Triplet index out of range for a {nrows}x{ncols} matrix")
    matrix = sps.coo_matrix((values, (rows, cols)), shape=(nrows, ncols)).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


def relative_residual(matrix: sps.spmatrix, solution: np.ndarray, rhs: np.ndarray) -> float:
    """Compute ||A x - b|| / ||b||, zero when both vanish."""
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(matrix @ solution - rhs))
    if rhs_norm == 0.0:
        return residual
    return residual / rhs_norm


class SuperLUSolverAdapter(LinearSolverPort):
    """Direct solver based on SuperLU with COLAMD fill-reducing ordering.

    One step of iterative refinement is applied when the first solve misses the
    residual contract.
    """

    def __init__(
        self,
        tolerance: float = RESIDUAL_CONTRACT,
        refinement_steps: int = 1,
        permc_spec: str = "COLAMD",
    ) -> None:
        """Initialize the adapter.

        Args:
            tolerance: Relative residual contract.
            refinement_steps: Maximum iterative refinement steps.
            permc_spec: SuperLU column ordering.
        """
        self._tolerance = tolerance
        self._refinement_steps = refinement_steps
        self._permc_spec = permc_spec

    @staticmethod
    def _structural_check(matrix: sps.csr_matrix) -> None:
        row_nnz = np.diff(matrix.indptr)
        empty_rows = np.flatnonzero(row_nnz == 0)
        if empty_rows.size:
            raise SingularMatrixError("Structurally singular matrix", pivot_row=int(empty_rows[0]))
        col_nnz = np.bincount(matrix.indices, minlength=matrix.shape[1])
        empty_cols = np.flatnonzero(col_nnz == 0)
        if empty_cols.size:
            raise SingularMatrixError("Structurally singular matrix", pivot_row=int(empty_cols[0]))

    def solve(self, matrix: sps.csr_matrix, rhs: np.ndarray) -> SolveResult:
        """Solve a square sparse system.

        Args:
            matrix: Square sparse matrix.
            rhs: Right-hand side.

        Returns:
            The solve result.

        Raises:
            SingularMatrixError: On structural or numerical singularity.
            ResidualContractError: If the contract fails after refinement.
        """
        matrix = sps.csr_matrix(matrix)
        n, m = matrix.shape
        if n != m or rhs.shape != (n,):
            raise ValueError(f"Incompatible system: matrix {matrix.shape}, rhs {rhs.shape}")
        dtype = np.result_type(matrix.dtype, rhs.dtype)
        if not np.any(rhs):
            return SolveResult(solution=np.zeros(n, dtype=dtype), relative_residual=0.0)

        matrix.eliminate_zeros()
        self._structural_check(matrix)
        try:
            lu = splu(matrix.astype(dtype).tocsc(), permc_spec=self._permc_spec)
        except RuntimeError as e:
            raise SingularMatrixError(f"Factorization failed: {e}") from e

        b = rhs.astype(dtype)
        x = lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("Numerically singular matrix")
        residual = relative_residual(matrix, x, b)
        steps = 0
        while residual > self._tolerance and steps < self._refinement_steps:
            x = x + lu.solve(b - matrix @ x)
            residual = relative_residual(matrix, x, b)
            steps += 1
        logger.debug(f"Solved n={n} nnz={matrix.nnz}: residual {residual:.2e}, refinement {steps}")
        if residual > self._tolerance:
            raise ResidualContractError(residual, self._tolerance)
        return SolveResult(solution=x, relative_residual=residual, refinement_steps=steps)


def create_linear_solver(backend: str = "superlu", **kwargs: float | int | str) -> LinearSolverPort:
    """Factory function to create a linear solver.

    Args:
        backend: Solver backend; only "superlu" is available.
        **kwargs: Adapter arguments.

    Returns:
        A LinearSolverPort implementation.
    """
    if backend != "superlu":
        raise ValueError(f"Unknown linear solver backend: {backend}")
    return SuperLUSolverAdapter(**kwargs)  # type: ignore[arg-type]
