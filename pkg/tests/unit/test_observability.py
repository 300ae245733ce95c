"""Tests for observability adapters."""

import logging

import pytest

from tdgl_mixed_fem.adapters.observability.observability_adapter import (
    OpenTelemetryAdapter,
    PlaceholderObservabilityAdapter,
    create_observability_adapter,
)


class TestPlaceholderObservabilityAdapter:
    """Tests for PlaceholderObservabilityAdapter."""

    def test_spans(self) -> None:
        """Test that spans are tracked until they end."""
        adapter = PlaceholderObservabilityAdapter()
        first = adapter.start_span("tdgl.step")
        second = adapter.start_span("tdgl.solve.psi")
        assert first != second
        assert adapter.open_spans == 2
        adapter.end_span(second)
        adapter.end_span(first, status="error")
        assert adapter.open_spans == 0

    def test_unknown_span_is_ignored(self) -> None:
        """Test ending a span that was never started."""
        adapter = PlaceholderObservabilityAdapter()
        adapter.end_span("not-a-span")
        assert adapter.open_spans == 0

    def test_metrics_keep_last_value(self) -> None:
        """Test metric recording."""
        adapter = PlaceholderObservabilityAdapter()
        adapter.record_metric("solver.relative_residual", 1e-14)
        adapter.record_metric("solver.relative_residual", 3e-15, {"block": "psi"})
        assert adapter.metrics == {"solver.relative_residual": 3e-15}

    def test_events(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test that events are logged in order."""
        adapter = PlaceholderObservabilityAdapter(logger_name="tdgl.test")
        with caplog.at_level(logging.INFO, logger="tdgl.test"):
            adapter.log_event("convergence.start", {"M": [4, 8]})
            adapter.log_event("convergence.end", {})
        assert adapter.events == ["convergence.start", "convergence.end"]
        assert "Event: convergence.start" in caplog.text


class TestOpenTelemetryAdapter:
    """Tests for OpenTelemetryAdapter."""

    def test_span_round_trip(self) -> None:
        """Test spans with or without the optional SDK."""
        adapter = OpenTelemetryAdapter(service_name="tdgl-test", enable_metrics=False)
        span = adapter.start_span("tdgl.run")
        adapter.record_metric("run.seconds", 0.5)
        adapter.end_span(span)
        adapter.end_span(span)
        assert isinstance(adapter.is_initialized, bool)

    def test_initialized_with_sdk(self) -> None:
        """Test initialization when the SDK is installed."""
        pytest.importorskip("opentelemetry.sdk")
        adapter = OpenTelemetryAdapter(service_name="tdgl-test")
        assert adapter.is_initialized


class TestCreateObservabilityAdapter:
    """Tests for create_observability_adapter."""

    def test_placeholder(self) -> None:
        """Test the default backend."""
        assert isinstance(create_observability_adapter(), PlaceholderObservabilityAdapter)

    def test_opentelemetry(self) -> None:
        """Test the OpenTelemetry backend."""
        adapter = create_observability_adapter("opentelemetry", enable_metrics=False)
        assert isinstance(adapter, OpenTelemetryAdapter)

    def test_unknown_backend(self) -> None:
        """Test that an unknown backend is rejected."""
        with pytest.raises(ValueError, match="Unknown observability backend"):
            create_observability_adapter("statsd")
