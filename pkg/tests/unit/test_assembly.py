"""Tests for the assembly service."""

import numpy as np
import pytest
import scipy.sparse as sps

from tdgl_mixed_fem.application.services.assembly_service import AssemblyService, apply_dirichlet
from tdgl_mixed_fem.application.services.tdgl_service import scheme_spaces
from tdgl_mixed_fem.domain.cases import FieldName, get_case
from tdgl_mixed_fem.domain.fespace import (
    ElementFamily,
    FeFunction,
    SpaceDescriptor,
    ValueKind,
    compute_geometry,
    interpolate,
    make_space,
)
from tdgl_mixed_fem.domain.mesh.mesh_models import Mesh, build_lshape_mesh, build_unit_square_mesh
from tdgl_mixed_fem.domain.tdgl.tdgl_models import SchemeKind, TdglState

P1 = SpaceDescriptor(ElementFamily.LAGRANGE, 1)
P2 = SpaceDescriptor(ElementFamily.LAGRANGE, 2)
RT0 = SpaceDescriptor(ElementFamily.RAVIART_THOMAS, 0, ValueKind.VECTOR_REAL, essential_boundary=True)


def _mixed_state(mesh: Mesh, order: int, a_field=None, psi_field=None) -> tuple[TdglState, tuple]:
    psi_desc, a_desc, sigma_desc = scheme_spaces(SchemeKind.MIXED, order, mesh.dimension)
    spaces = (make_space(mesh, psi_desc), make_space(mesh, a_desc), make_space(mesh, sigma_desc))
    psi = FeFunction.zeros(spaces[0]) if psi_field is None else interpolate(spaces[0], psi_field)
    a = FeFunction.zeros(spaces[1]) if a_field is None else interpolate(spaces[1], a_field)
    state = TdglState(psi=psi, A=a, sigma=FeFunction.zeros(spaces[2]), n=0, tau=0.1)
    return state, spaces


def _is_hermitian(matrix: sps.spmatrix) -> bool:
    difference = matrix - matrix.conj().T
    return abs(difference).max() <= 1e-12 * abs(matrix).max()


class TestApplyDirichlet:
    """Tests for row and column elimination."""

    def test_small_system(self) -> None:
        """Test the constrained matrix and the lifted right-hand side."""
        matrix = sps.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
        system = apply_dirichlet(matrix, np.array([1.0, 1.0]), np.array([0]), np.array([3.0]))
        assert np.allclose(system.matrix.toarray(), [[1.0, 0.0], [0.0, 2.0]])
        assert np.allclose(system.rhs, [3.0, -2.0])

    def test_symmetry_is_preserved(self, rng) -> None:
        """Test that a symmetric matrix stays symmetric."""
        dense = rng.standard_normal((6, 6))
        matrix = sps.csr_matrix(dense + dense.T)
        system = apply_dirichlet(matrix, np.ones(6), np.array([1, 4]), np.array([0.5, -1.0]))
        constrained = system.matrix.toarray()
        assert np.allclose(constrained, constrained.T)
        solution = np.linalg.solve(constrained, system.rhs)
        assert solution[1] == pytest.approx(0.5)
        assert solution[4] == pytest.approx(-1.0)


class TestStandardMatrices:
    """Tests for mass, stiffness, divergence and curl matrices against oracles."""

    @pytest.mark.parametrize("desc", [P1, P2])
    def test_lagrange_mass_and_stiffness(self, square_mesh: Mesh, desc: SpaceDescriptor) -> None:
        """Test that the mass sums to the area and stiffness kills constants."""
        service = AssemblyService()
        space = make_space(square_mesh, desc)
        mass = service.mass_matrix(space)
        stiffness = service.stiffness_matrix(space)
        assert mass.sum() == pytest.approx(1.0)
        assert np.allclose(stiffness @ np.ones(space.num_global_dofs), 0.0, atol=1e-12)
        assert _is_hermitian(mass)
        assert _is_hermitian(stiffness)

    def test_stiffness_energy_of_linear(self, lshape_mesh: Mesh) -> None:
        """Test (grad u, grad u) = |grad u|^2 * area for a linear u."""
        service = AssemblyService()
        space = make_space(lshape_mesh, P1)
        u = interpolate(space, lambda x: 2 * x[..., 0] - x[..., 1]).coefficients
        assert u @ service.stiffness_matrix(space) @ u == pytest.approx(5.0 * 3.0)

    def test_rt0_div_div_dense_oracle(self) -> None:
        """Test (div, div) against sum_K s_i s_j / |K| on a coarse mesh."""
        mesh = build_unit_square_mesh(3)
        space = make_space(mesh, RT0)
        volumes = compute_geometry(mesh).volume
        expected = np.zeros((space.num_global_dofs,) * 2)
        for c in range(mesh.num_cells):
            dofs = space.cell_dofs[c]
            signs = space.cell_signs[c]
            expected[np.ix_(dofs, dofs)] += np.outer(signs, signs) / volumes[c]
        assert np.allclose(AssemblyService().div_div_matrix(space).toarray(), expected)

    def test_rt0_mass_reproduces_constant_energy(self, square_mesh: Mesh) -> None:
        """Test (c, c) = |c|^2 * area through the interpolant of a constant."""
        service = AssemblyService()
        space = make_space(square_mesh, RT0)
        c = interpolate(space, lambda x: np.broadcast_to([1.0, 2.0], x.shape)).coefficients
        assert c @ service.mass_matrix(space) @ c == pytest.approx(5.0)

    def test_curl_coupling_of_linear_sigma(self, square_mesh: Mesh) -> None:
        """Test (curl sigma, v) against the mass matrix applied to the constant curl."""
        service = AssemblyService()
        sigma_space = make_space(square_mesh, P1)
        a_space = make_space(square_mesh, RT0)
        sigma = interpolate(sigma_space, lambda x: 2 * x[..., 0] + 3 * x[..., 1]).coefficients
        curl = interpolate(a_space, lambda x: np.broadcast_to([3.0, -2.0], x.shape)).coefficients
        degree = service.matrix_degree(P1, RT0)
        coupling = service.curl_coupling_matrix(a_space, sigma_space, degree)
        assert coupling.shape == (a_space.num_global_dofs, sigma_space.num_global_dofs)
        assert np.allclose(coupling @ sigma, service.mass_matrix(a_space, degree) @ curl)

    def test_matrices_are_cached(self, square_mesh: Mesh) -> None:
        """Test that run-constant matrices are built once."""
        service = AssemblyService()
        space = make_space(square_mesh, P1)
        assert service.mass_matrix(space) is service.mass_matrix(space)

    def test_small_blocks_match(self, square_mesh: Mesh) -> None:
        """Test that block splitting does not change the result."""
        space = make_space(square_mesh, P2)
        whole = AssemblyService().stiffness_matrix(space)
        blocked = AssemblyService(block_size=5).stiffness_matrix(space)
        assert abs(whole - blocked).max() < 1e-13

    def test_different_meshes_rejected(self) -> None:
        """Test that test and trial spaces must share a mesh."""
        first = make_space(build_unit_square_mesh(2), P1)
        second = make_space(build_unit_square_mesh(2), P1)
        with pytest.raises(ValueError, match="different meshes"):
            AssemblyService().bilinear_form(first, second, 2, lambda te, tr, _: np.zeros((8, 3, 3)))


class TestQuadraturePolicy:
    """Tests for the quadrature degree policy."""

    def test_degrees(self, square_mesh: Mesh, lshape_mesh: Mesh, cube_mesh: Mesh) -> None:
        """Test matrix, load and error degrees."""
        rt1 = SpaceDescriptor(ElementFamily.RAVIART_THOMAS, 1, ValueKind.VECTOR_REAL)
        assert AssemblyService.matrix_degree(P1, RT0) == 4
        assert AssemblyService.matrix_degree(P2, rt1) == 6
        assert AssemblyService.load_degree(2) == 6
        assert AssemblyService.load_degree(3) == 5
        assert AssemblyService.error_degree(square_mesh) == 6
        assert AssemblyService.error_degree(lshape_mesh) == 8
        assert AssemblyService.error_degree(cube_mesh) == 5


class TestPsiSystem:
    """Tests for the psi system."""

    def test_zero_potential_oracle(self, square_mesh: Mesh) -> None:
        """Test the matrix for A = 0 and psi = 0 against mass and stiffness."""
        service = AssemblyService()
        state, (psi_space, _, _) = _mixed_state(square_mesh, 0)
        case = get_case("square2d", kappa=2.0)
        system = service.assemble_psi_system(state, 0.1, case, psi_space)
        degree = service.matrix_degree(psi_space.space, RT0)
        mass = service.mass_matrix(psi_space, degree)
        stiffness = service.stiffness_matrix(psi_space, degree)
        expected = 10.0 * mass + stiffness / 4.0 - mass
        assert abs(system.matrix - expected).max() < 1e-12
        assert system.matrix.dtype == np.complex128
        assert len(system.dirichlet_dofs) == 0

    def test_hermitian_for_divergence_free_potential(self, square_mesh: Mesh) -> None:
        """Test that the matrix is Hermitian when div A = 0 and not otherwise."""
        service = AssemblyService()
        case = get_case("square2d")
        psi_field = lambda x: np.cos(x[..., 0]) + 1j * x[..., 1]  # noqa: E731
        constant, (psi_space, _, _) = _mixed_state(
            square_mesh, 0, a_field=lambda x: np.broadcast_to([0.3, -0.2], x.shape), psi_field=psi_field
        )
        matrix = service.assemble_psi_system(constant, 0.1, case, psi_space).matrix
        assert _is_hermitian(matrix)
        assert abs(matrix.imag).max() > 0.0

        expanding, (psi_space, _, _) = _mixed_state(square_mesh, 0, a_field=lambda x: x, psi_field=psi_field)
        matrix = service.assemble_psi_system(expanding, 0.1, case, psi_space).matrix
        assert not _is_hermitian(matrix)

    def test_rhs_of_zero_case(self, square_mesh: Mesh) -> None:
        """Test that zero data gives a zero right-hand side."""
        state, (psi_space, _, _) = _mixed_state(square_mesh, 0)
        system = AssemblyService().assemble_psi_system(state, 0.1, get_case("zero2d"), psi_space)
        assert not np.any(system.rhs)


class TestSigmaASystem:
    """Tests for the mixed sigma-A system."""

    @pytest.mark.parametrize("order", [0, 1])
    def test_block_structure(self, order: int) -> None:
        """Test dimensions and the skew structure of the off-diagonal blocks."""
        mesh = build_unit_square_mesh(2)
        service = AssemblyService()
        state, (_, a_space, sigma_space) = _mixed_state(mesh, order)
        case = get_case("zero2d")
        system = service.assemble_sigma_A_system(state, state.psi, 0.1, case, sigma_space, a_space)
        n_sigma = sigma_space.num_global_dofs
        assert system.matrix.shape == (n_sigma + a_space.num_global_dofs,) * 2
        assert not np.any(system.rhs)

        matrix = system.matrix.toarray()
        interior_sigma = sigma_space.interior_dofs
        interior_a = n_sigma + a_space.interior_dofs
        upper = matrix[np.ix_(interior_sigma, interior_a)]
        lower = matrix[np.ix_(interior_a, interior_sigma)]
        assert np.allclose(upper, -lower.T)
        assert abs(lower).max() > 0.0

    def test_boundary_values(self) -> None:
        """Test that boundary sigma rows carry the interpolated applied field."""
        mesh = build_unit_square_mesh(2)
        state, (_, a_space, sigma_space) = _mixed_state(mesh, 0)
        case = get_case("square2d")
        system = AssemblyService().assemble_sigma_A_system(state, state.psi, 0.5, case, sigma_space, a_space)
        h_e = interpolate(sigma_space, case.at(FieldName.H_E, 0.5))
        boundary = sigma_space.boundary_dofs
        assert np.allclose(system.rhs[boundary], h_e.coefficients[boundary])
        assert np.allclose(system.rhs[sigma_space.num_global_dofs + a_space.boundary_dofs], 0.0)

    def test_invalid_pairing(self, square_mesh: Mesh) -> None:
        """Test that sigma must have degree r + 1."""
        state, (_, a_space, _) = _mixed_state(square_mesh, 0)
        p2_boundary = SpaceDescriptor(ElementFamily.LAGRANGE, 2, essential_boundary=True)
        wrong_sigma = make_space(square_mesh, p2_boundary)
        with pytest.raises(ValueError, match="Invalid pairing"):
            AssemblyService().assemble_sigma_A_system(
                state, state.psi, 0.1, get_case("zero2d"), wrong_sigma, a_space
            )

    def test_mesh_mismatch(self, square_mesh: Mesh) -> None:
        """Test that inputs on different meshes are rejected."""
        state, (_, a_space, sigma_space) = _mixed_state(square_mesh, 0)
        other, _ = _mixed_state(build_unit_square_mesh(4), 0)
        with pytest.raises(ValueError, match="different meshes"):
            AssemblyService().assemble_sigma_A_system(
                state, other.psi, 0.1, get_case("zero2d"), sigma_space, a_space
            )


class TestLagrangeASystem:
    """Tests for the vector Lagrange A system."""

    def test_symmetric_positive_definite(self) -> None:
        """Test symmetry and positivity of the constrained matrix."""
        mesh = build_unit_square_mesh(3)
        psi_desc, a_desc, sigma_desc = scheme_spaces(SchemeKind.LAGRANGE, 0, 2)
        psi = interpolate(make_space(mesh, psi_desc), lambda x: 1.0 + 0.5j * x[..., 0])
        a_space = make_space(mesh, a_desc)
        state = TdglState(
            psi=psi,
            A=FeFunction.zeros(a_space),
            sigma=FeFunction.zeros(make_space(mesh, sigma_desc)),
            n=0,
            tau=0.1,
        )
        system = AssemblyService().assemble_lagrange_A_system(state, 0.1, get_case("square2d"), a_space)
        matrix = system.matrix.toarray()
        assert np.allclose(matrix, matrix.T)
        assert np.all(np.linalg.eigvalsh(matrix) > 0.0)
        assert np.allclose(system.rhs[a_space.boundary_dofs], 0.0)


class TestErrors:
    """Tests for the L2 error functional."""

    def test_exact_reproduction(self, square_mesh: Mesh) -> None:
        """Test zero error for a field in the space."""
        space = make_space(square_mesh, P2)
        field = lambda x: x[..., 0] * x[..., 1]  # noqa: E731
        assert AssemblyService().l2_error(interpolate(space, field), field) < 1e-13

    def test_norm_of_constant(self) -> None:
        """Test that the error of zero against one is sqrt(area) on the L-shape."""
        mesh = build_lshape_mesh(2)
        f = FeFunction.zeros(make_space(mesh, P1))
        assert AssemblyService().l2_error(f, lambda x: np.ones(x.shape[:-1])) == pytest.approx(np.sqrt(3.0))

    def test_vector_and_complex_norms(self, square_mesh: Mesh) -> None:
        """Test Euclidean and modulus norms."""
        service = AssemblyService()
        a = FeFunction.zeros(make_space(square_mesh, RT0))
        assert service.l2_error(a, lambda x: np.broadcast_to([3.0, 4.0], x.shape)) == pytest.approx(5.0)
        complex_p1 = SpaceDescriptor(ElementFamily.LAGRANGE, 1, ValueKind.SCALAR_COMPLEX)
        psi = FeFunction.zeros(make_space(square_mesh, complex_p1))
        assert service.l2_error(psi, lambda x: np.full(x.shape[:-1], 1j)) == pytest.approx(1.0)
