"""Linear solver port interfaces."""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

# Relative residual every solve must reach.
RESIDUAL_CONTRACT = 1e-10


class SingularMatrixError(RuntimeError):
    """Raised when a system is structurally or numerically singular.

    Attributes:
        pivot_row: Row where the factorization broke down, when known.
    """

    def __init__(self, message: str, pivot_row: int | None = None) -> None:
        """Initialize the error.

        Args:
            message: Error description.
            pivot_row: Offending row, if known.
        """
        suffix = f" (pivot row {pivot_row})" if pivot_row is not None else ""
        super().__init__(f"{message}{suffix}")
        self.pivot_row = pivot_row


class ResidualContractError(RuntimeError):
    """Raised when a solution misses the relative residual contract."""

    def __init__(self, residual: float, tolerance: float = RESIDUAL_CONTRACT) -> None:
        """Initialize the error.

        Args:
            residual: Achieved relative residual.
            tolerance: Required relative residual.
        """
        super().__init__(f"Relative residual {residual:.3e} exceeds {tolerance:.1e}")
        self.residual = residual
        self.tolerance = tolerance


@dataclass(frozen=True)
class SolveResult:
    """Result of a linear solve.

    Attributes:
        solution: Solution vector.
        relative_residual: ||Ax - b|| / ||b|| (0 when b = 0).
        refinement_steps: Iterative refinement steps applied.
    """

    solution: np.ndarray
    relative_residual: float
    refinement_steps: int = 0


class LinearSolverPort(ABC):
    """Abstract interface for sparse direct solvers.

    Implementations must be reentrant so that distinct systems can be solved
    on distinct threads.
    """

    @abstractmethod
    def solve(self, matrix: sps.csr_matrix, rhs: np.ndarray) -> SolveResult:
        """Solve ``matrix @ x = rhs``.

        Args:
            matrix: Square sparse matrix, real or complex.
            rhs: Right-hand side.

        Returns:
            The solve result.

        Raises:
            SingularMatrixError: If the matrix is singular.
            ResidualContractError: If the residual contract is violated.
        """
        pass
