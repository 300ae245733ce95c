"""Persistence adapters - convergence report storage."""

from tdgl_mixed_fem.adapters.persistence.report_adapter import (
    CsvReportWriter,
    InMemoryReportWriter,
    ReportConfig,
    create_report_writer,
    format_csv,
    parse_csv,
)

__all__ = [
    "CsvReportWriter",
    "InMemoryReportWriter",
    "ReportConfig",
    "create_report_writer",
    "format_csv",
    "parse_csv",
]
