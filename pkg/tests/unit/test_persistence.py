"""Tests for the report persistence adapters."""

import pytest

from tdgl_mixed_fem.adapters.persistence import (
    CsvReportWriter,
    InMemoryReportWriter,
    create_report_writer,
    format_csv,
    parse_csv,
)
from tdgl_mixed_fem.adapters.persistence.report_adapter import ReportConfig
from tdgl_mixed_fem.domain.experiments import ConvergenceReport, ConvergenceRow, ExampleName


@pytest.fixture
def report() -> ConvergenceReport:
    """Two-row report with first-order errors."""
    return ConvergenceReport(
        example=ExampleName.SQUARE2D,
        order=0,
        rows=[
            ConvergenceRow(8, 0.125, 0.2, 0.4, 0.8, 1.5),
            ConvergenceRow(16, 0.0625, 0.1, 0.2, 0.4, 3.25),
        ],
    )


class TestFormatCsv:
    """Tests for CSV rendering."""

    def test_empty_report(self) -> None:
        """Test that an empty report is the header only."""
        text = format_csv(ConvergenceReport(ExampleName.SQUARE2D, 0))
        assert text == "M,tau,err_psi,err_A,err_sigma,seconds\n"

    def test_rows_and_orders(self, report: ConvergenceReport) -> None:
        """Test the data rows and the trailing order row."""
        lines = format_csv(report).split("\n")
        assert lines[0] == "M,tau,err_psi,err_A,err_sigma,seconds"
        assert lines[1] == "8,1.250000e-01,2.000000e-01,4.000000e-01,8.000000e-01,1.500000e+00"
        assert lines[3] == "order,,1.000000e+00,1.000000e+00,1.000000e+00,"
        assert lines[4] == ""
        assert "\r" not in format_csv(report)

    def test_without_orders(self, report: ConvergenceReport) -> None:
        """Test that the order row can be disabled."""
        text = format_csv(report, ReportConfig(write_orders=False, float_format="%.3g"))
        assert text.splitlines()[-1] == "16,0.0625,0.1,0.2,0.4,3.25"


class TestParseCsv:
    """Tests for CSV parsing."""

    def test_round_trip(self, report: ConvergenceReport) -> None:
        """Test that parsing recovers rows and skips the order row."""
        parsed = parse_csv(format_csv(report))
        assert parsed.mesh_sizes == [8, 16]
        assert parsed.rows[1].err_sigma == pytest.approx(0.4)
        assert parsed.rows[0].h == pytest.approx(2**0.5 / 8)

    def test_bad_header(self) -> None:
        """Test that a foreign header is rejected."""
        with pytest.raises(ValueError, match="Unexpected report header"):
            parse_csv("M,error\n8,0.1\n")

    def test_bad_row(self) -> None:
        """Test that short and non-numeric rows are rejected."""
        header = "M,tau,err_psi,err_A,err_sigma,seconds\n"
        with pytest.raises(ValueError, match="Line 2"):
            parse_csv(header + "8,0.1,0.2\n")
        with pytest.raises(ValueError, match="Line 2"):
            parse_csv(header + "eight,0.1,0.2,0.3,0.4,0\n")


class TestCsvReportWriter:
    """Tests for the CSV file writer."""

    def test_write_and_read(self, report: ConvergenceReport, tmp_path) -> None:
        """Test writing into a new directory and reading back."""
        path = tmp_path / "results" / "square2d.csv"
        writer = CsvReportWriter()
        writer.write_report(report, path)
        assert path.read_bytes().count(b"\n") == 4
        parsed = writer.read_report(path, ExampleName.SQUARE2D, 0)
        assert parsed.fitted_orders() == pytest.approx((1.0, 1.0, 1.0))


class TestInMemoryReportWriter:
    """Tests for the in-memory writer."""

    def test_write_and_read(self, report: ConvergenceReport) -> None:
        """Test storing and parsing a report."""
        writer = InMemoryReportWriter()
        writer.write_report(report, "a.csv")
        assert writer.destinations == ["a.csv"]
        assert writer.text("a.csv").startswith("M,tau")
        assert writer.read_report("a.csv").example is ExampleName.SQUARE2D

    def test_missing(self) -> None:
        """Test that unknown destinations raise."""
        with pytest.raises(KeyError):
            InMemoryReportWriter().read_report("missing.csv")


class TestCreateReportWriter:
    """Tests for the writer factory."""

    def test_backends(self) -> None:
        """Test the csv and memory backends."""
        assert isinstance(create_report_writer("csv"), CsvReportWriter)
        writer = create_report_writer("memory", float_format="%.2e")
        assert isinstance(writer, InMemoryReportWriter)
        assert writer.config.float_format == "%.2e"

    def test_unsupported(self) -> None:
        """Test that unknown backends are rejected."""
        with pytest.raises(ValueError, match="Unsupported report backend"):
            create_report_writer("parquet")
