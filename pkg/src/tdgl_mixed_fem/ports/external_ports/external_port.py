"""Ports for observability backends and convergence report storage."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from tdgl_mixed_fem.domain.experiments.experiment_models import ConvergenceReport


class ObservabilityPort(ABC):
    """Spans, events and metrics of solver runs.

    The time stepper opens spans around runs, steps and linear solves, and
    records relative solver residuals and wall times as metrics. Every span
    that is started is ended, with status ``"error"`` on failure.
    """

    @abstractmethod
    def log_event(self, event_name: str, data: dict[str, Any]) -> None:
        """Emit a named event, e.g. the start of a convergence study."""

    @abstractmethod
    def record_metric(
        self, metric_name: str, value: float, tags: dict[str, str] | None = None
    ) -> None:
        """Record one value of a metric.

        Args:
            metric_name: Metric, e.g. ``solver.relative_residual``.
            value: Observed value.
            tags: Labels such as the solved block.
        """

    @abstractmethod
    def start_span(self, operation_name: str) -> str:
        """Open a span.

        Returns:
            Identifier to pass to ``end_span``.
        """

    @abstractmethod
    def end_span(self, span_id: str, status: str = "ok") -> None:
        """Close a span opened by ``start_span``."""


class ReportWriterPort(ABC):
    """Storage of convergence reports."""

    @abstractmethod
    def write_report(self, report: ConvergenceReport, destination: str | Path) -> None:
        """Persist a report.

        Raises:
            OSError: If the destination cannot be written.
        """

    @abstractmethod
    def read_report(self, source: str | Path) -> ConvergenceReport:
        """Load a report written by ``write_report``."""
