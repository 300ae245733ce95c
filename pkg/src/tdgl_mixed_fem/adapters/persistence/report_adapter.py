"""Persistence adapters for convergence reports.

This module provides report persistence implementations:
- CsvReportWriter: UTF-8 CSV files with LF line endings
- InMemoryReportWriter: keeps the CSV text in memory for tests and dry runs
"""

import csv
import io
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from tdgl_mixed_fem.domain.experiments.experiment_models import (
    ConvergenceReport,
    ConvergenceRow,
    ExampleName,
    mesh_size,
)
from tdgl_mixed_fem.ports.external_ports.external_port import ReportWriterPort

logger = logging.getLogger(__name__)

CSV_HEADER = ("M", "tau", "err_psi", "err_A", "err_sigma", "seconds")
ORDER_LABEL = "order"


@dataclass
class ReportConfig:
    """Configuration for report writers.

    Attributes:
        float_format: printf-style format of every floating-point cell.
        encoding: File encoding.
        write_orders: Whether to append the fitted-order row.
    """

    float_format: str = "%.6e"
    encoding: str = "utf-8"
    write_orders: bool = True


def format_csv(report: ConvergenceReport, config: ReportConfig | None = None) -> str:
    """Render a report as CSV text.

    One row per mesh density follows the header. With at least two rows a
    final ``order`` row carries the least-squares orders of the three error
    columns.

    Args:
        report: The report to render.
        config: Formatting options.

    Returns:
        CSV text with LF line endings.
    """
    config = config or ReportConfig()
    fmt = config.float_format
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in report.rows:
        writer.writerow(
            [str(row.M)]
            + [fmt % value for value in (row.tau, row.err_psi, row.err_A, row.err_sigma, row.seconds)]
        )
    orders = report.fitted_orders()
    if config.write_orders and orders is not None:
        writer.writerow([ORDER_LABEL, ""] + [fmt % value for value in orders] + [""])
    return buffer.getvalue()


def parse_csv(
    text: str, example: ExampleName = ExampleName.SQUARE2D, order: int = 0
) -> ConvergenceReport:
    """Parse CSV text written by ``format_csv``.

    The ``order`` row is recomputed from the rows and therefore skipped.

    Args:
        text: CSV text.
        example: Example the report belongs to (used for h).
        order: Element order of the report.

    Returns:
        The parsed report.

    Raises:
        ValueError: If the header or a row is malformed.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError(f"Unexpected report header: {header}")
    report = ConvergenceReport(example=example, order=order)
    for line_number, cells in enumerate(reader, start=2):
        if not cells or cells[0] == ORDER_LABEL:
            continue
        if len(cells) != len(CSV_HEADER):
            raise ValueError(f"Line {line_number}: expected {len(CSV_HEADER)} cells, got {len(cells)}")
        try:
            m = int(cells[0])
            tau, err_psi, err_a, err_sigma, seconds = (float(c) for c in cells[1:])
        except ValueError as e:
            raise ValueError(f"Line {line_number}: {e}") from e
        report.rows.append(
            ConvergenceRow(m, tau, err_psi, err_a, err_sigma, seconds, mesh_size(example, m))
        )
    return report


class CsvReportWriter(ReportWriterPort):
    """Writes reports as CSV files.

    Writes are serialized so that concurrent M-runs sharing a writer never
    interleave output.
    """

    def __init__(self, config: ReportConfig | None = None) -> None:
        """Initialize the CSV writer.

        Args:
            config: Formatting options.
        """
        self.config = config or ReportConfig()
        self._lock = threading.Lock()

    def write_report(self, report: ConvergenceReport, destination: str | Path) -> None:
        """Write a report to a CSV file, creating parent directories.

        Args:
            report: The report to write.
            destination: Output file path.

        Raises:
            OSError: If the path cannot be written.
        """
        path = Path(destination)
        text = format_csv(report, self.config)
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding=self.config.encoding, newline="") as handle:
                handle.write(text)
        logger.info(f"Wrote {len(report.rows)} rows to {path}")

    def read_report(
        self,
        source: str | Path,
        example: ExampleName = ExampleName.SQUARE2D,
        order: int = 0,
    ) -> ConvergenceReport:
        """Read a CSV report.

        Args:
            source: Input file path.
            example: Example the report belongs to.
            order: Element order of the report.

        Returns:
            The parsed report.
        """
        text = Path(source).read_text(encoding=self.config.encoding)
        return parse_csv(text, example, order)


class InMemoryReportWriter(ReportWriterPort):
    """Keeps rendered reports in memory, keyed by destination."""

    def __init__(self, config: ReportConfig | None = None) -> None:
        """Initialize the in-memory writer.

        Args:
            config: Formatting options.
        """
        self.config = config or ReportConfig()
        self._documents: dict[str, tuple[str, ExampleName, int]] = {}
        self._lock = threading.Lock()

    def write_report(self, report: ConvergenceReport, destination: str | Path) -> None:
        """Render and store a report."""
        with self._lock:
            self._documents[str(destination)] = (
                format_csv(report, self.config),
                report.example,
                report.order,
            )

    def read_report(self, source: str | Path) -> ConvergenceReport:
        """Parse a stored report.

        Raises:
            KeyError: If nothing was written to ``source``.
        """
        with self._lock:
            text, example, order = self._documents[str(source)]
        return parse_csv(text, example, order)

    def text(self, destination: str | Path) -> str:
        """Rendered CSV text of a stored report."""
        with self._lock:
            return self._documents[str(destination)][0]

    @property
    def destinations(self) -> list[str]:
        """Destinations written so far."""
        with self._lock:
            return list(self._documents)


def create_report_writer(backend: str = "csv", **kwargs: Any) -> ReportWriterPort:
    """Factory function to create a report writer.

    Args:
        backend: The backend to use ("csv" or "memory").
        **kwargs: Fields of ``ReportConfig``.

    Returns:
        A ReportWriterPort implementation.

    Raises:
        ValueError: If an unsupported backend is specified.
    """
    config = ReportConfig(**kwargs) if kwargs else None
    if backend == "csv":
        return CsvReportWriter(config)
    elif backend == "memory":
        return InMemoryReportWriter(config)
    else:
        raise ValueError(
            f"Unsupported report backend: '{backend}'. Supported backends: 'csv', 'memory'"
        )
