"""Convergence studies, the stability sweep and CSV emission."""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from tdgl_mixed_fem.adapters.observability.observability_adapter import (
    PlaceholderObservabilityAdapter,
)
from tdgl_mixed_fem.adapters.persistence.report_adapter import CsvReportWriter
from tdgl_mixed_fem.application.services.tdgl_service import TdglService
from tdgl_mixed_fem.domain.cases.builtin_cases import get_case
from tdgl_mixed_fem.domain.cases.case_models import ManufacturedCase
from tdgl_mixed_fem.domain.experiments.experiment_models import (
    STABILITY_TAUS,
    AcceptanceOutcome,
    ConvergenceReport,
    ConvergenceRow,
    ExampleName,
    ExperimentConfig,
    ExperimentError,
    StabilityReport,
    TauRule,
    evaluate_acceptance,
    mesh_size,
)
from tdgl_mixed_fem.domain.tdgl.tdgl_models import TimeStepError
from tdgl_mixed_fem.ports.external_ports.external_port import ObservabilityPort, ReportWriterPort

logger = logging.getLogger(__name__)


def _run_row_in_worker(config: ExperimentConfig, mesh_density: int) -> ConvergenceRow:
    """Entry point of worker processes; builds its own services."""
    return HarnessService().run_single(config, mesh_density)


def stability_output(output: Path, tau: float) -> Path:
    """CSV path of one stability curve, e.g. ``sweep.csv`` -> ``sweep_tau0.01.csv``."""
    return output.with_name(f"{output.stem}_tau{tau:g}{output.suffix or '.csv'}")


class HarnessService:
    """Drives TDGL runs over lists of mesh densities.

    Runs of different mesh densities are independent and may execute in
    worker processes; rows are always reported in increasing M, and CSV
    writing goes through a single writer.
    """

    def __init__(
        self,
        tdgl: TdglService | None = None,
        writer: ReportWriterPort | None = None,
        observability: ObservabilityPort | None = None,
    ) -> None:
        """Initialize the harness.

        Args:
            tdgl: Time stepping service.
            writer: Report writer; CSV files when omitted.
            observability: Observability backend shared with the stepper.
        """
        self._observability = observability or PlaceholderObservabilityAdapter()
        self._tdgl = tdgl or TdglService(observability=self._observability)
        self._writer = writer or CsvReportWriter()

    @property
    def tdgl(self) -> TdglService:
        """The time stepping service in use."""
        return self._tdgl

    def case_for(self, config: ExperimentConfig) -> ManufacturedCase:
        """Manufactured case of an experiment."""
        return get_case(config.example.case, eta=config.eta, kappa=config.kappa)

    def run_single(
        self,
        config: ExperimentConfig,
        mesh_density: int,
        case: ManufacturedCase | None = None,
    ) -> ConvergenceRow:
        """Run one mesh density.

        Args:
            config: Experiment configuration.
            mesh_density: Mesh density M.
            case: Case override; the example's case when omitted.

        Returns:
            The row of the run.

        Raises:
            ExperimentError: If a time step fails.
        """
        case = case or self.case_for(config)
        scheme = config.scheme_config(mesh_density)
        if scheme.kappa is None:
            scheme = scheme.model_copy(update={"kappa": case.kappa})
        span = self._observability.start_span(f"harness.run.M{mesh_density}")
        try:
            result = self._tdgl.run(case, scheme)
        except TimeStepError as e:
            self._observability.end_span(span, status="error")
            raise ExperimentError(str(e), M=mesh_density, n=e.n) from e
        self._observability.end_span(span)
        errors = result.errors
        return ConvergenceRow(
            M=mesh_density,
            tau=scheme.tau,
            err_psi=errors.psi,
            err_A=errors.A,
            err_sigma=errors.sigma,
            seconds=result.seconds if config.record_timing else 0.0,
            h=mesh_size(config.example, mesh_density),
        )

    def run_convergence(
        self, config: ExperimentConfig, case: ManufacturedCase | None = None
    ) -> ConvergenceReport:
        """Run a convergence study and emit its CSV when an output is configured.

        Args:
            config: Experiment configuration.
            case: Case override (always run in-process).

        Returns:
            The report, rows in increasing M.

        Raises:
            ExperimentError: If a run fails.
        """
        self._observability.log_event(
            "convergence.start",
            {"example": config.example.value, "order": config.order, "M": config.mesh_sizes},
        )
        if config.jobs > 1 and case is None and len(config.mesh_sizes) > 1:
            workers = min(config.jobs, len(config.mesh_sizes))
            logger.info(f"Running {len(config.mesh_sizes)} mesh densities on {workers} processes")
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_row_in_worker, config, m) for m in config.mesh_sizes]
                rows = [future.result() for future in futures]
        else:
            if config.jobs > 1 and case is not None:
                logger.warning("Case overrides run in-process; ignoring jobs")
            rows = [self.run_single(config, m, case) for m in config.mesh_sizes]

        report = ConvergenceReport(example=config.example, order=config.order, rows=rows)
        orders = report.fitted_orders()
        if orders is not None:
            logger.info(
                f"{config.example.value} r={config.order}: fitted orders "
                f"psi={orders[0]:.3f} A={orders[1]:.3f} sigma={orders[2]:.3f}"
            )
        if config.output is not None:
            self.emit_csv(report, config.output)
        return report

    def run_stability_sweep(
        self,
        config: ExperimentConfig,
        taus: tuple[float, ...] = STABILITY_TAUS,
        case: ManufacturedCase | None = None,
    ) -> StabilityReport:
        """Error curves over M for fixed time steps.

        Args:
            config: Base configuration (square2d with order 1 unless a case
                override is given); its mesh sizes are swept for every tau.
            taus: Fixed time steps.
            case: Case override.

        Returns:
            One convergence report per time step.

        Raises:
            ValueError: If the base configuration is not the square r=1 pairing.
        """
        if case is None and (config.example is not ExampleName.SQUARE2D or config.order != 1):
            raise ValueError("The stability sweep uses square2d with order 1")
        sweep = StabilityReport()
        for tau in taus:
            curve = ExperimentConfig(
                **{
                    **config.model_dump(),
                    "tau_rule": TauRule.FIXED,
                    "tau": tau,
                    "stability_sweep": True,
                    "output": stability_output(config.output, tau) if config.output else None,
                }
            )
            report = self.run_convergence(curve, case)
            report.metadata["tau"] = tau
            sweep.curves[tau] = report
        return sweep

    def emit_csv(self, report: ConvergenceReport, path: str | Path) -> None:
        """Write a report through the configured writer.

        Raises:
            OSError: If the path cannot be written.
        """
        self._writer.write_report(report, path)

    def check(self, report: ConvergenceReport) -> list[AcceptanceOutcome]:
        """Evaluate the acceptance checks that concern a report."""
        outcomes = evaluate_acceptance(report)
        for outcome in outcomes:
            if outcome.passed:
                logger.info(f"Acceptance {outcome.name}: passed")
            else:
                logger.error(f"Acceptance {outcome.name}: failed ({'; '.join(outcome.messages)})")
        return outcomes
