"""Tests for sparse matrix construction and the direct solver adapter."""

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sps

from tdgl_mixed_fem.adapters.linsolve import (
    SuperLUSolverAdapter,
    TripletBuffer,
    create_linear_solver,
    from_triplets,
    relative_residual,
)
from tdgl_mixed_fem.ports.solver_ports.linear_solver_port import (
    RESIDUAL_CONTRACT,
    ResidualContractError,
    SingularMatrixError,
)


class TestFromTriplets:
    """Tests for triplet to CSR conversion."""

    def test_duplicates_are_summed(self) -> None:
        """Test that repeated entries accumulate."""
        matrix = from_triplets(2, [(0, 0, 1.0), (0, 0, 2.5), (1, 0, -1.0), (1, 1, 4.0)])
        assert matrix.nnz == 3
        assert matrix[0, 0] == 3.5
        assert matrix.has_sorted_indices

    def test_buffer_and_rectangular_shape(self) -> None:
        """Test block accumulation into a rectangular matrix."""
        buffer = TripletBuffer()
        buffer.add(np.array([[0, 1]]), np.array([[2, 2]]), np.array([[1.0, 1.0]]))
        buffer.add(np.array([0]), np.array([2]), np.array([2.0]))
        matrix = from_triplets(2, buffer, shape=(2, 3))
        assert matrix.shape == (2, 3)
        assert np.allclose(matrix.toarray(), [[0, 0, 3.0], [0, 0, 1.0]])

    def test_complex_values(self) -> None:
        """Test that complex values survive."""
        matrix = from_triplets(1, [(0, 0, 1 + 2j)])
        assert matrix.dtype == np.complex128

    def test_empty(self) -> None:
        """Test the empty matrix."""
        assert from_triplets(3, []).nnz == 0
        assert from_triplets(3, TripletBuffer()).shape == (3, 3)

    @pytest.mark.parametrize("entry", [(2, 0, 1.0), (0, -1, 1.0), (0, 5, 1.0)])
    def test_out_of_range(self, entry: tuple[int, int, float]) -> None:
        """Test that indices outside the matrix are rejected."""
        with pytest.raises(ValueError, match="out of range"):
            from_triplets(2, [(0, 0, 1.0), entry])


class TestSuperLUSolverAdapter:
    """Tests for the SuperLU adapter."""

    def test_real_solve(self, rng) -> None:
        """Test a well conditioned real system."""
        n = 30
        dense = np.eye(n) * 4 + rng.standard_normal((n, n)) * 0.1
        rhs = rng.standard_normal(n)
        result = SuperLUSolverAdapter().solve(sps.csr_matrix(dense), rhs)
        assert np.allclose(result.solution, np.linalg.solve(dense, rhs))
        assert result.relative_residual <= RESIDUAL_CONTRACT

    def test_complex_solve(self, rng) -> None:
        """Test a complex system with a real right-hand side."""
        n = 12
        dense = np.eye(n) * (3 + 1j) + 0.2j * rng.standard_normal((n, n))
        rhs = rng.standard_normal(n)
        result = SuperLUSolverAdapter().solve(sps.csr_matrix(dense), rhs)
        assert result.solution.dtype == np.complex128
        assert np.allclose(dense @ result.solution, rhs)

    def test_zero_rhs(self) -> None:
        """Test that a zero right-hand side returns zero without factorization."""
        matrix = sps.csr_matrix(np.zeros((3, 3)))
        result = SuperLUSolverAdapter().solve(matrix, np.zeros(3))
        assert np.all(result.solution == 0.0)
        assert result.relative_residual == 0.0

    def test_structurally_singular(self) -> None:
        """Test that an empty row is reported with its index."""
        matrix = sps.csr_matrix(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
        with pytest.raises(SingularMatrixError) as info:
            SuperLUSolverAdapter().solve(matrix, np.ones(3))
        assert info.value.pivot_row == 1
        assert "pivot row 1" in str(info.value)

    def test_numerically_singular(self) -> None:
        """Test that an exactly singular matrix is rejected."""
        matrix = sps.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SingularMatrixError):
            SuperLUSolverAdapter().solve(matrix, np.array([1.0, 2.0]))

    def test_residual_contract(self) -> None:
        """Test that an unreachable tolerance raises after refinement."""
        matrix = sps.csr_matrix(sla.hilbert(12))
        solver = SuperLUSolverAdapter(tolerance=1e-300, refinement_steps=1)
        with pytest.raises(ResidualContractError, match="exceeds"):
            solver.solve(matrix, np.arange(1.0, 13.0))

    def test_incompatible_shapes(self) -> None:
        """Test that mismatched rhs lengths are rejected."""
        with pytest.raises(ValueError, match="Incompatible"):
            SuperLUSolverAdapter().solve(sps.eye(3, format="csr"), np.ones(2))

    def test_relative_residual(self) -> None:
        """Test the residual helper."""
        matrix = sps.eye(2, format="csr")
        assert relative_residual(matrix, np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0
        assert relative_residual(matrix, np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 1.0


class TestCreateLinearSolver:
    """Tests for the solver factory."""

    def test_superlu(self) -> None:
        """Test the default backend."""
        assert isinstance(create_linear_solver("superlu", permc_spec="MMD_AT_PLUS_A"), SuperLUSolverAdapter)

    def test_unknown_backend(self) -> None:
        """Test that unknown backends are rejected."""
        with pytest.raises(ValueError, match="Unknown linear solver backend"):
            create_linear_solver("pardiso")
