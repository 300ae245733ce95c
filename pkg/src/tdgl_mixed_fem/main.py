"""Main entry point for the TDGL mixed finite element solver."""

import argparse
import logging
import sys
from pathlib import Path

from tdgl_mixed_fem import __version__
from tdgl_mixed_fem.adapters.linsolve.sparse_lu_adapter import create_linear_solver
from tdgl_mixed_fem.adapters.observability.observability_adapter import (
    create_observability_adapter,
)
from tdgl_mixed_fem.adapters.persistence.report_adapter import create_report_writer
from tdgl_mixed_fem.application.services.harness_service import HarnessService
from tdgl_mixed_fem.application.services.tdgl_service import TdglService
from tdgl_mixed_fem.domain.cases.builtin_cases import get_case
from tdgl_mixed_fem.domain.cases.case_models import CaseName
from tdgl_mixed_fem.domain.experiments.experiment_models import (
    PROFILE_ALIAS,
    PROFILE_MESH_SIZES,
    STABILITY_MESH_SIZES,
    STABILITY_TAUS,
    ConvergenceReport,
    ExampleName,
    ExperimentConfig,
    ExperimentError,
    Profile,
    TauRule,
    default_tau_rule,
    profile_mesh_sizes,
)
from tdgl_mixed_fem.domain.mesh.mesh_models import DomainKind, build_domain_mesh, dump_mesh
from tdgl_mixed_fem.domain.tdgl.tdgl_models import SchemeConfig, SchemeKind, TimeStepError
from tdgl_mixed_fem.infrastructure import RuntimeInfo, TdglConfig, get_runtime_info, load_config
from tdgl_mixed_fem.ports.solver_ports.linear_solver_port import (
    RESIDUAL_CONTRACT,
    ResidualContractError,
    SingularMatrixError,
)

EXIT_OK = 0
EXIT_SOLVER_ERROR = 1
EXIT_ACCEPTANCE_FAILED = 2

logger = logging.getLogger(__name__)


def setup_logging(level: str = "INFO") -> None:
    """Set up logging configuration.

    Args:
        level: The logging level.
    """
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
    )


def print_runtime_info(info: RuntimeInfo) -> None:
    """Print runtime information.

    Args:
        info: Runtime information to print.
    """
    print(f"System: {info.system} ({info.machine}), {info.cpu_count} CPUs")
    print(f"Python: {info.python_version}")
    for name, version in info.packages.items():
        print(f"  {name}: {version}")
    print()


def print_report(report: ConvergenceReport) -> None:
    """Print a convergence report as a table."""
    print(f"{report.example.value}, r={report.order}")
    print(f"{'M':>6} {'tau':>12} {'err_psi':>12} {'err_A':>12} {'err_sigma':>12} {'seconds':>9}")
    for row in report.rows:
        print(
            f"{row.M:>6} {row.tau:>12.4e} {row.err_psi:>12.4e} {row.err_A:>12.4e} "
            f"{row.err_sigma:>12.4e} {row.seconds:>9.1f}"
        )
    orders = report.fitted_orders()
    if orders is not None:
        print(f"{'order':>6} {'':>12} {orders[0]:>12.3f} {orders[1]:>12.3f} {orders[2]:>12.3f}")
    print()


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser.

    Returns:
        Configured ArgumentParser.
    """
    parser = argparse.ArgumentParser(
        description="Galerkin-mixed FEM for the time-dependent Ginzburg-Landau equations",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )

    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Set the logging level (default: TDGL_LOG_LEVEL or INFO)",
    )

    parser.add_argument(
        "--config",
        default=None,
        help="Path to a key=value configuration file",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Info command
    subparsers.add_parser(
        "info", allow_abbrev=False, help="Show version, configuration and element pairings"
    )

    # Convergence command
    conv_parser = subparsers.add_parser(
        "convergence", allow_abbrev=False, help="Run a convergence study"
    )
    conv_parser.add_argument(
        "--example",
        choices=[e.value for e in ExampleName],
        default=None,
        help="Experiment to run",
    )
    conv_parser.add_argument("--order", type=int, choices=[0, 1], default=None, help="Element order r")
    conv_parser.add_argument(
        "--mesh-sizes",
        type=int,
        nargs="+",
        default=None,
        help="Mesh densities M (default: from the profile)",
    )
    conv_parser.add_argument(
        "--tau-rule",
        choices=[r.value for r in TauRule if r is not TauRule.FIXED],
        default=None,
        help="Time step coupling (default: 1/M^2 for square2d r=1, else 1/M)",
    )
    conv_parser.add_argument("--final-time", type=float, default=None, help="Final time T")
    conv_parser.add_argument("--out", default=None, help="CSV output path")
    conv_parser.add_argument(
        "--profile",
        choices=[p.value for p in Profile] + [PROFILE_ALIAS],
        default=None,
        help=f"Mesh-size profile ({PROFILE_ALIAS} is the same as reference)",
    )
    conv_parser.add_argument("--jobs", type=int, default=None, help="Concurrent mesh-density runs")
    conv_parser.add_argument(
        "--parallel-solves",
        action="store_true",
        help="Run the two linear solves of a step concurrently",
    )
    conv_parser.add_argument(
        "--no-timing",
        action="store_true",
        help="Write 0 wall times so that reports are byte-reproducible",
    )
    conv_parser.add_argument(
        "--check",
        action="store_true",
        help="Evaluate the acceptance checks (exit code 2 on failure)",
    )

    # Stability command
    stab_parser = subparsers.add_parser(
        "stability", allow_abbrev=False, help="Run the fixed time step sweep"
    )
    stab_parser.add_argument(
        "--tau",
        "--taus",
        dest="taus",
        type=float,
        nargs="+",
        default=list(STABILITY_TAUS),
        help="Fixed time steps",
    )
    stab_parser.add_argument(
        "--mesh-sizes",
        type=int,
        nargs="+",
        default=list(STABILITY_MESH_SIZES),
        help="Mesh densities M",
    )
    stab_parser.add_argument("--final-time", type=float, default=None, help="Final time T")
    stab_parser.add_argument("--out", default=None, help="CSV output path (one file per tau)")
    stab_parser.add_argument("--jobs", type=int, default=None, help="Concurrent mesh-density runs")
    stab_parser.add_argument(
        "--check",
        action="store_true",
        help="Check the plateau property (exit code 2 on failure)",
    )

    # Step-check command
    step_parser = subparsers.add_parser(
        "step-check", allow_abbrev=False, help="Run a few steps and report solver and constraint residuals"
    )
    step_parser.add_argument(
        "--case",
        choices=[c.value for c in CaseName],
        default=CaseName.SQUARE2D.value,
        help="Manufactured case",
    )
    step_parser.add_argument(
        "--scheme",
        choices=[s.value for s in SchemeKind],
        default=SchemeKind.MIXED.value,
        help="Scheme",
    )
    step_parser.add_argument("--order", type=int, choices=[0, 1], default=0, help="Element order r")
    step_parser.add_argument("--mesh-density", type=int, default=4, help="Mesh density M")
    step_parser.add_argument("--steps", type=int, default=3, help="Number of time steps")

    # Mesh command
    mesh_parser = subparsers.add_parser(
        "mesh", allow_abbrev=False, help="Build a mesh and dump it to a text file"
    )
    mesh_parser.add_argument(
        "--domain",
        choices=[d.value for d in DomainKind],
        default=DomainKind.UNIT_SQUARE.value,
        help="Domain",
    )
    mesh_parser.add_argument("--mesh-density", type=int, required=True, help="Mesh density M")
    mesh_parser.add_argument("--out", required=True, help="Output path")

    return parser


def create_harness(config: TdglConfig) -> HarnessService:
    """Wire the services from the configuration."""
    settings = config.solver
    solver = create_linear_solver(
        settings.backend,
        tolerance=settings.tolerance,
        refinement_steps=settings.refinement_steps,
        permc_spec=settings.permc_spec,
    )
    if config.observability.backend == "opentelemetry":
        observability = create_observability_adapter(
            "opentelemetry",
            enable_tracing=config.observability.tracing_enabled,
            enable_metrics=config.observability.metrics_enabled,
        )
    else:
        observability = create_observability_adapter(config.observability.backend)
    tdgl = TdglService(solver=solver, observability=observability)
    return HarnessService(tdgl=tdgl, writer=create_report_writer("csv"), observability=observability)


def cmd_info(config: TdglConfig) -> None:
    """Handle the info command."""
    print(f"tdgl-mixed-fem {__version__}")
    print()
    print_runtime_info(get_runtime_info())

    print("Configuration:")
    solver = config.solver
    print(f"  Solver: {solver.backend} (tolerance {solver.tolerance:g}, {solver.permc_spec})")
    print(f"  Parallel solves: {config.solver.parallel_solves}")
    print(f"  Observability: {config.observability.backend} ({config.observability.log_level})")
    harness = config.harness
    print(f"  Harness: {harness.example} r={harness.order}, profile {harness.profile}")
    print()

    print("Element pairings (psi, A, sigma):")
    print("  mixed    2D r=0: P1 x RT0 x P1")
    print("  mixed    2D r=1: P1 x RT1 x P2")
    print("  mixed    3D r=0: P1 x RT0 x Nedelec1")
    print("  lagrange 2D    : P1 x (P1)^2, sigma = projected curl A")
    print()

    print("Experiments:")
    for (example, order), profiles in PROFILE_MESH_SIZES.items():
        print(f"  {example.value} r={order}: reference M = {profiles[Profile.REFERENCE]}")


def cmd_convergence(args: argparse.Namespace, config: TdglConfig) -> int:
    """Handle the convergence command.

    Returns:
        Exit code.
    """
    defaults = config.harness
    example = ExampleName(args.example or defaults.example)
    order = args.order if args.order is not None else defaults.order
    profile = Profile(args.profile or defaults.profile)
    mesh_sizes = args.mesh_sizes or profile_mesh_sizes(example, order, profile)
    tau_rule = TauRule(args.tau_rule) if args.tau_rule else default_tau_rule(example, order)
    output = Path(args.out) if args.out else Path(defaults.output_dir) / f"{example.value}_r{order}.csv"

    experiment = ExperimentConfig(
        example=example,
        order=order,
        mesh_sizes=mesh_sizes,
        tau_rule=tau_rule,
        final_time=args.final_time or defaults.final_time,
        output=output,
        record_timing=defaults.record_timing and not args.no_timing,
        parallel_solves=args.parallel_solves or config.solver.parallel_solves,
        jobs=args.jobs or defaults.jobs,
    )
    harness = create_harness(config)
    report = harness.run_convergence(experiment)
    print_report(report)
    print(f"Report written to {output}")

    if args.check:
        outcomes = harness.check(report)
        if not outcomes:
            print(f"No acceptance checks for {example.value} r={order}")
        for outcome in outcomes:
            status = "PASS" if outcome.passed else "FAIL"
            print(f"[{status}] {outcome.name}")
            for message in outcome.messages:
                print(f"       {message}")
        if not all(outcome.passed for outcome in outcomes):
            return EXIT_ACCEPTANCE_FAILED
    return EXIT_OK


def cmd_stability(args: argparse.Namespace, config: TdglConfig) -> int:
    """Handle the stability command.

    Returns:
        Exit code.
    """
    defaults = config.harness
    output = Path(args.out) if args.out else Path(defaults.output_dir) / "stability.csv"
    experiment = ExperimentConfig(
        example=ExampleName.SQUARE2D,
        order=1,
        mesh_sizes=args.mesh_sizes,
        final_time=args.final_time or defaults.final_time,
        output=output,
        record_timing=defaults.record_timing,
        parallel_solves=config.solver.parallel_solves,
        jobs=args.jobs or defaults.jobs,
    )
    harness = create_harness(config)
    sweep = harness.run_stability_sweep(experiment, tuple(args.taus))
    for tau, report in sorted(sweep.curves.items(), reverse=True):
        print(f"tau = {tau:g}")
        print_report(report)

    if args.check:
        outcomes = sweep.plateau_outcomes()
        for outcome in outcomes:
            status = "PASS" if outcome.passed else "FAIL"
            print(f"[{status}] {outcome.name}")
            for message in outcome.messages:
                print(f"       {message}")
        if not all(outcome.passed for outcome in outcomes):
            return EXIT_ACCEPTANCE_FAILED
    return EXIT_OK


def cmd_step_check(args: argparse.Namespace, config: TdglConfig) -> int:
    """Handle the step-check command.

    Runs a few steps of a case and prints the residuals of every level.

    Returns:
        Exit code, 2 if a constraint residual breaks the contract.
    """
    harness = create_harness(config)
    tdgl = harness.tdgl
    case = get_case(args.case)
    scheme = SchemeConfig(
        scheme=SchemeKind(args.scheme),
        order=args.order,
        mesh_density=args.mesh_density,
        tau=1.0 / args.mesh_density,
        final_time=args.steps / args.mesh_density,
        kappa=case.kappa,
        parallel_solves=config.solver.parallel_solves,
    )
    problem = tdgl.build_problem(case, scheme)
    state = tdgl.init_state(problem)
    worst = 0.0
    for _ in range(args.steps):
        state = tdgl.step(state, problem)
        errors = tdgl.errors(state, problem)
        worst = max(worst, state.constraint_residual)
        print(
            f"n={state.n} t={state.t:.4f} constraint={state.constraint_residual:.2e} "
            f"errors psi={errors.psi:.3e} A={errors.A:.3e} sigma={errors.sigma:.3e}"
        )
    print(f"Max solver residual: {tdgl.max_solver_residual:.2e}")
    return EXIT_OK if worst <= RESIDUAL_CONTRACT else EXIT_ACCEPTANCE_FAILED


def cmd_mesh(args: argparse.Namespace) -> int:
    """Handle the mesh command."""
    mesh = build_domain_mesh(DomainKind(args.domain), args.mesh_density)
    dump_mesh(mesh, Path(args.out))
    print(
        f"{args.domain} M={args.mesh_density}: {mesh.num_vertices} vertices, "
        f"{mesh.num_cells} cells, {mesh.num_edges} edges -> {args.out}"
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Main entry point.

    Args:
        argv: Command line arguments (defaults to sys.argv).

    Returns:
        Exit code: 0 success, 1 solver or input error, 2 acceptance failure.
    """
    parser = create_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except (OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_SOLVER_ERROR
    setup_logging(args.log_level or config.observability.log_level)

    try:
        if args.command == "info" or args.command is None:
            cmd_info(config)
            return EXIT_OK
        elif args.command == "convergence":
            return cmd_convergence(args, config)
        elif args.command == "stability":
            return cmd_stability(args, config)
        elif args.command == "step-check":
            return cmd_step_check(args, config)
        elif args.command == "mesh":
            return cmd_mesh(args)
        else:
            parser.print_help()
            return EXIT_SOLVER_ERROR
    except (ExperimentError, TimeStepError, SingularMatrixError, ResidualContractError) as e:
        logger.error(f"Solver failed: {e}")
        return EXIT_SOLVER_ERROR
    except (OSError, ValueError) as e:
        logger.error(f"Error: {e}")
        return EXIT_SOLVER_ERROR


if __name__ == "__main__":
    sys.exit(main())
