"""Time stepping for the Galerkin-mixed scheme and the conventional Lagrange scheme."""

import logging
import threading
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from tdgl_mixed_fem.adapters.linsolve.sparse_lu_adapter import SuperLUSolverAdapter
from tdgl_mixed_fem.adapters.observability.observability_adapter import (
    PlaceholderObservabilityAdapter,
)
from tdgl_mixed_fem.application.services.assembly_service import AssembledSystem, AssemblyService
from tdgl_mixed_fem.domain.cases.case_models import FieldName, ManufacturedCase
from tdgl_mixed_fem.domain.fespace.function_space import interpolate, make_space
from tdgl_mixed_fem.domain.fespace.space_models import (
    DofMap,
    ElementFamily,
    FeFunction,
    SpaceDescriptor,
    ValueKind,
)
from tdgl_mixed_fem.domain.mesh.mesh_models import Mesh, build_domain_mesh
from tdgl_mixed_fem.domain.tdgl.tdgl_models import (
    ErrorTriple,
    RunResult,
    SchemeConfig,
    SchemeKind,
    TdglState,
    TimeStepError,
)
from tdgl_mixed_fem.ports.external_ports.external_port import ObservabilityPort
from tdgl_mixed_fem.ports.solver_ports.linear_solver_port import (
    RESIDUAL_CONTRACT,
    LinearSolverPort,
    ResidualContractError,
    SingularMatrixError,
    SolveResult,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TdglProblem:
    """Everything a run needs besides the evolving state.

    Attributes:
        case: Manufactured case.
        config: Scheme configuration.
        mesh: Computational mesh.
        psi_space: Complex Lagrange space of psi.
        a_space: Space of A (RT_r, or vector P1 for the Lagrange scheme).
        sigma_space: Space of sigma (Lagrange r+1 in 2D, Nedelec in 3D, P1 for reporting).
    """

    case: ManufacturedCase
    config: SchemeConfig
    mesh: Mesh
    psi_space: DofMap
    a_space: DofMap
    sigma_space: DofMap

    @property
    def tau(self) -> float:
        """Time step."""
        return self.config.tau


def scheme_spaces(
    scheme: SchemeKind, order: int, dimension: int
) -> tuple[SpaceDescriptor, SpaceDescriptor, SpaceDescriptor]:
    """Space descriptors (psi, A, sigma) of a scheme.

    Args:
        scheme: Mixed or Lagrange.
        order: Element order r.
        dimension: Mesh dimension.

    Returns:
        The three descriptors.

    Raises:
        ValueError: For unsupported combinations.
    """
    psi = SpaceDescriptor(ElementFamily.LAGRANGE, max(1, order), ValueKind.SCALAR_COMPLEX)
    if scheme is SchemeKind.LAGRANGE:
        if dimension != 2:
            raise ValueError("The Lagrange comparison scheme is only available in 2D")
        return (
            psi,
            SpaceDescriptor(ElementFamily.LAGRANGE, 1, ValueKind.VECTOR_REAL, essential_boundary=True),
            SpaceDescriptor(ElementFamily.LAGRANGE, 1, ValueKind.SCALAR_REAL),
        )
    a = SpaceDescriptor(ElementFamily.RAVIART_THOMAS, order, ValueKind.VECTOR_REAL, True)
    if dimension == 2:
        sigma = SpaceDescriptor(ElementFamily.LAGRANGE, order + 1, ValueKind.SCALAR_REAL, True)
    elif order == 0:
        sigma = SpaceDescriptor(ElementFamily.NEDELEC_FIRST_KIND, 1, ValueKind.VECTOR_REAL, True)
    else:
        raise ValueError("Only the lowest order pairing is available in 3D")
    return psi, a, sigma


class TdglService:
    """Runs the linearized backward Euler schemes.

    Each step solves the complex psi system and the real A (or sigma-A) system,
    both with coefficients from the previous level only, so the two solves are
    independent.
    """

    def __init__(
        self,
        solver: LinearSolverPort | None = None,
        observability: ObservabilityPort | None = None,
        assembly: AssemblyService | None = None,
    ) -> None:
        """Initialize the service.

        Args:
            solver: Linear solver; SuperLU when omitted.
            observability: Observability backend; logging based when omitted.
            assembly: Assembly service; a fresh one when omitted.
        """
        self._solver = solver or SuperLUSolverAdapter()
        self._observability = observability or PlaceholderObservabilityAdapter()
        self._assembly = assembly or AssemblyService()
        self._max_solver_residual = 0.0
        self._residual_lock = threading.Lock()

    @property
    def assembly(self) -> AssemblyService:
        """The assembly service in use."""
        return self._assembly

    @property
    def observability(self) -> ObservabilityPort:
        """The observability backend in use."""
        return self._observability

    @property
    def max_solver_residual(self) -> float:
        """Largest relative solver residual since the last run started."""
        with self._residual_lock:
            return self._max_solver_residual

    def build_problem(self, case: ManufacturedCase, config: SchemeConfig) -> TdglProblem:
        """Build the mesh and the spaces of a run.

        Args:
            case: Manufactured case.
            config: Scheme configuration.

        Returns:
            The problem.
        """
        if config.kappa is not None and config.kappa != case.kappa:
            raise ValueError(
                f"Scheme kappa {config.kappa} differs from the case's kappa {case.kappa}"
            )
        if config.eta != case.eta:
            raise ValueError(f"Scheme eta {config.eta} differs from the case's eta {case.eta}")
        mesh = build_domain_mesh(case.domain, config.mesh_density)
        psi, a, sigma = scheme_spaces(config.scheme, config.order, mesh.dimension)
        problem = TdglProblem(
            case=case,
            config=config,
            mesh=mesh,
            psi_space=make_space(mesh, psi),
            a_space=make_space(mesh, a),
            sigma_space=make_space(mesh, sigma),
        )
        logger.info(
            f"Problem {case.name.value} ({config.scheme.value}, r={config.order}) M={config.mesh_density}: "
            f"{problem.psi_space.num_global_dofs} psi dofs, {problem.a_space.num_global_dofs} A dofs, "
            f"{problem.sigma_space.num_global_dofs} sigma dofs"
        )
        return problem

    def _solve(self, system: AssembledSystem, label: str) -> SolveResult:
        span = self._observability.start_span(f"solve.{label}")
        try:
            result = self._solver.solve(system.matrix, system.rhs)
        except (SingularMatrixError, ResidualContractError):
            self._observability.end_span(span, status="error")
            raise
        self._observability.end_span(span)
        self._observability.record_metric(
            "solver.relative_residual", result.relative_residual, {"system": label}
        )
        with self._residual_lock:
            self._max_solver_residual = max(self._max_solver_residual, result.relative_residual)
        return result

    def _project_curl(self, problem: TdglProblem, a: FeFunction) -> FeFunction:
        """L2 projection of the cellwise curl of A onto the scalar sigma space."""
        space = problem.sigma_space
        mass = self._assembly.mass_matrix(space)
        load = self._assembly.curl_load(space, a)
        system = AssembledSystem(mass, load, np.zeros(0, np.int64), np.zeros(0))
        return FeFunction(space, self._solve(system, "curl_projection").solution)

    def _project_vector(self, space: DofMap, field: FieldName, problem: TdglProblem) -> FeFunction:
        """L2 projection of an exact vector field at t = 0 (no essential condition)."""
        degree = self._assembly.load_degree(problem.mesh.dimension)
        mass = self._assembly.mass_matrix(space)
        callback = problem.case.at(field, 0.0)
        load = self._assembly.linear_form(
            space,
            degree,
            lambda te, _: np.einsum("cq,cqd,cqjd->cj", te.weights, callback(te.points), te.values),
        )
        system = AssembledSystem(mass, load, np.zeros(0, np.int64), np.zeros(0))
        return FeFunction(space, self._solve(system, "initial_projection").solution)

    def init_state(self, problem: TdglProblem) -> TdglState:
        """Interpolate the initial data.

        psi_h^0 and A_h^0 are the canonical interpolants of psi_0 and A_0, and
        sigma_h^0 interpolates curl A_0 (reporting only). The vector Lagrange
        potential of the comparison scheme is initialized by L2 projection
        instead, since nodal values of A are undefined at a reentrant corner.

        Args:
            problem: The problem.

        Returns:
            The state at level 0.
        """
        case = problem.case
        psi = interpolate(problem.psi_space, case.at(FieldName.PSI, 0.0))
        if problem.config.scheme is SchemeKind.LAGRANGE:
            a = self._project_vector(problem.a_space, FieldName.A, problem)
            sigma = self._project_curl(problem, a)
        else:
            a = interpolate(problem.a_space, case.at(FieldName.A, 0.0))
            sigma = interpolate(problem.sigma_space, case.at(FieldName.SIGMA, 0.0))
        return TdglState(psi=psi, A=a, sigma=sigma, n=0, tau=problem.tau)

    def _run_pair(
        self,
        problem: TdglProblem,
        first: Callable[[], SolveResult],
        second: Callable[[], SolveResult],
    ) -> tuple[SolveResult, SolveResult]:
        if problem.config.parallel_solves:
            with ThreadPoolExecutor(max_workers=2) as pool:
                futures = (pool.submit(first), pool.submit(second))
                return futures[0].result(), futures[1].result()
        return first(), second()

    def step_mixed(self, state: TdglState, problem: TdglProblem) -> TdglState:
        """Advance the Galerkin-mixed scheme by one level.

        Args:
            state: State at level n - 1.
            problem: The problem.

        Returns:
            The state at level n.

        Raises:
            TimeStepError: If a linear solve fails or the solution
                violates the sigma-A constraint rows.
        """
        tau = problem.tau
        n = state.n + 1
        span = self._observability.start_span("tdgl.step_mixed")
        try:

            def solve_psi() -> SolveResult:
                system = self._assembly.assemble_psi_system(state, tau, problem.case, problem.psi_space)
                return self._solve(system, "psi")

            def solve_sigma_a() -> SolveResult:
                system = self._assembly.assemble_sigma_A_system(
                    state, state.psi, tau, problem.case, problem.sigma_space, problem.a_space
                )
                return self._solve(system, "sigma_A")

            psi_result, coupled = self._run_pair(problem, solve_psi, solve_sigma_a)
        except (SingularMatrixError, ResidualContractError) as e:
            self._observability.end_span(span, status="error")
            raise TimeStepError(str(e), n=n, t=n * tau) from e

        n_sigma = problem.sigma_space.num_global_dofs
        sigma = FeFunction(problem.sigma_space, coupled.solution[:n_sigma])
        a = FeFunction(problem.a_space, coupled.solution[n_sigma:])
        residual = self._assembly.constraint_residual(sigma, a)
        if residual > RESIDUAL_CONTRACT:
            self._observability.end_span(span, status="error")
            raise TimeStepError(
                f"constraint residual {residual:.2e} exceeds {RESIDUAL_CONTRACT:.0e}", n=n, t=n * tau
            )
        self._observability.end_span(span)
        logger.debug(
            f"Level {n}: constraint residual {residual:.2e}, solver residuals "
            f"{psi_result.relative_residual:.2e} / {coupled.relative_residual:.2e}"
        )
        return TdglState(
            psi=FeFunction(problem.psi_space, psi_result.solution),
            A=a,
            sigma=sigma,
            n=n,
            tau=tau,
            constraint_residual=residual,
        )

    def step_lagrange(self, state: TdglState, problem: TdglProblem) -> TdglState:
        """Advance the conventional Lagrange scheme by one level.

        Args:
            state: State at level n - 1.
            problem: The problem.

        Returns:
            The state at level n; sigma is the L2-projected curl of A.

        Raises:
            TimeStepError: If a linear solve fails.
        """
        tau = problem.tau
        n = state.n + 1
        span = self._observability.start_span("tdgl.step_lagrange")
        try:

            def solve_psi() -> SolveResult:
                system = self._assembly.assemble_psi_system(state, tau, problem.case, problem.psi_space)
                return self._solve(system, "psi")

            def solve_a() -> SolveResult:
                system = self._assembly.assemble_lagrange_A_system(state, tau, problem.case, problem.a_space)
                return self._solve(system, "A")

            psi_result, a_result = self._run_pair(problem, solve_psi, solve_a)
            a = FeFunction(problem.a_space, a_result.solution)
            sigma = self._project_curl(problem, a)
        except (SingularMatrixError, ResidualContractError) as e:
            self._observability.end_span(span, status="error")
            raise TimeStepError(str(e), n=n, t=n * tau) from e
        self._observability.end_span(span)
        return TdglState(
            psi=FeFunction(problem.psi_space, psi_result.solution),
            A=a,
            sigma=sigma,
            n=n,
            tau=tau,
        )

    def step(self, state: TdglState, problem: TdglProblem) -> TdglState:
        """Advance the configured scheme by one level."""
        if problem.config.scheme is SchemeKind.LAGRANGE:
            return self.step_lagrange(state, problem)
        return self.step_mixed(state, problem)

    def errors(self, state: TdglState, problem: TdglProblem) -> ErrorTriple:
        """L2 errors of a state against the exact fields at its time.

        Args:
            state: Discrete state.
            problem: The problem.

        Returns:
            The error triple.
        """
        case = problem.case
        t = state.t
        return ErrorTriple(
            psi=self._assembly.l2_error(state.psi, case.at(FieldName.PSI, t)),
            A=self._assembly.l2_error(state.A, case.at(FieldName.A, t)),
            sigma=self._assembly.l2_error(state.sigma, case.at(FieldName.SIGMA, t)),
        )

    def run(self, case: ManufacturedCase, config: SchemeConfig) -> RunResult:
        """Run N steps of the configured scheme and measure the errors at t_N.

        Args:
            case: Manufactured case.
            config: Scheme configuration.

        Returns:
            Final state, errors and timings.

        Raises:
            TimeStepError: If a step fails.
        """
        start = time.perf_counter()
        span = self._observability.start_span("tdgl.run")
        self._max_solver_residual = 0.0
        problem = self.build_problem(case, config)
        state = self.init_state(problem)
        max_constraint = 0.0
        try:
            for _ in range(config.num_steps):
                state = self.step(state, problem)
                max_constraint = max(max_constraint, state.constraint_residual)
        except TimeStepError:
            self._observability.end_span(span, status="error")
            raise
        errors = self.errors(state, problem)
        seconds = time.perf_counter() - start
        self._observability.end_span(span)
        self._observability.record_metric(
            "run.seconds", seconds, {"case": case.name.value, "M": str(config.mesh_density)}
        )
        logger.info(
            f"{case.name.value} {config.scheme.value} r={config.order} M={config.mesh_density} "
            f"tau={config.tau:.4g} N={config.num_steps}: errors psi={errors.psi:.4e} "
            f"A={errors.A:.4e} sigma={errors.sigma:.4e} ({seconds:.1f}s)"
        )
        return RunResult(
            state=state,
            errors=errors,
            seconds=seconds,
            max_solver_residual=self._max_solver_residual,
            max_constraint_residual=max_constraint,
        )
