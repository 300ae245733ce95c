"""Observability adapters for time stepping and convergence studies.

Spans wrap runs, time steps and linear solves; metrics carry relative solver
residuals and wall times.

- PlaceholderObservabilityAdapter: plain logging, with in-memory summaries
- OpenTelemetryAdapter: OpenTelemetry traces and histograms (``observability`` extra)
"""

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any
from uuid import uuid4

from tdgl_mixed_fem.ports.external_ports.external_port import ObservabilityPort


@dataclass
class SpanRecord:
    """An open span.

    Attributes:
        operation: Operation name, e.g. ``tdgl.step_mixed`` or ``solve.psi``.
        started: ``time.perf_counter()`` at start.
        handle: Backend span object, if any.
    """

    operation: str
    started: float = field(default_factory=time.perf_counter)
    handle: Any = None

    @property
    def elapsed(self) -> float:
        """Seconds since the span started."""
        return time.perf_counter() - self.started


class PlaceholderObservabilityAdapter(ObservabilityPort):
    """Logs spans, events and metrics through ``logging``.

    The last value of every metric and the names of all events are kept so
    that the CLI and the tests can inspect a run after the fact.
    """

    def __init__(self, logger_name: str = "tdgl_mixed_fem") -> None:
        """Initialize the adapter.

        Args:
            logger_name: Logger receiving the records.
        """
        self._logger = logging.getLogger(logger_name)
        self._open: dict[str, SpanRecord] = {}
        self._last_values: dict[str, float] = {}
        self._event_names: list[str] = []
        self._lock = threading.Lock()

    def log_event(self, event_name: str, data: dict[str, Any]) -> None:
        """Log a named event with its payload."""
        with self._lock:
            self._event_names.append(event_name)
        self._logger.info(f"Event: {event_name} {data}")

    def record_metric(
        self, metric_name: str, value: float, tags: dict[str, str] | None = None
    ) -> None:
        """Keep the latest value of a metric and log it at debug level."""
        with self._lock:
            self._last_values[metric_name] = value
        suffix = f" {tags}" if tags else ""
        self._logger.debug(f"Metric: {metric_name}={value:.3e}{suffix}")

    def start_span(self, operation_name: str) -> str:
        """Open a span and return its identifier."""
        span_id = uuid4().hex
        with self._lock:
            self._open[span_id] = SpanRecord(operation_name)
        self._logger.debug(f"Span started: {operation_name} ({span_id[:8]})")
        return span_id

    def end_span(self, span_id: str, status: str = "ok") -> None:
        """Close a span; unknown identifiers are ignored."""
        with self._lock:
            record = self._open.pop(span_id, None)
        if record is None:
            return
        self._logger.debug(
            f"Span ended: {record.operation} ({span_id[:8]}) {status} in {record.elapsed:.3f}s"
        )

    @property
    def open_spans(self) -> int:
        """Number of spans started but not ended."""
        with self._lock:
            return len(self._open)

    @property
    def metrics(self) -> dict[str, float]:
        """Last recorded value per metric."""
        with self._lock:
            return dict(self._last_values)

    @property
    def events(self) -> list[str]:
        """Names of the logged events in order."""
        with self._lock:
            return list(self._event_names)


class OpenTelemetryAdapter(ObservabilityPort):
    """Exports spans and histograms through OpenTelemetry.

    Without the ``observability`` extra the adapter still works: spans are
    timed and logged, and metrics go to the debug log.
    """

    def __init__(
        self,
        service_name: str = "tdgl-mixed-fem",
        enable_tracing: bool = True,
        enable_metrics: bool = True,
    ) -> None:
        """Initialize the adapter.

        Args:
            service_name: ``service.name`` resource attribute.
            enable_tracing: Whether spans are exported.
            enable_metrics: Whether residuals and wall times go to histograms.
        """
        self._service_name = service_name
        self._logger = logging.getLogger(f"otel.{service_name}")
        self._open: dict[str, SpanRecord] = {}
        self._histograms: dict[str, Any] = {}
        self._lock = threading.Lock()
        self._tracer, self._meter = self._load_sdk(enable_tracing, enable_metrics)

    def _load_sdk(self, enable_tracing: bool, enable_metrics: bool) -> tuple[Any, Any]:
        """Install tracer and meter providers; (None, None) without the SDK."""
        try:
            from opentelemetry import metrics, trace
            from opentelemetry.sdk.metrics import MeterProvider
            from opentelemetry.sdk.resources import Resource
            from opentelemetry.sdk.trace import TracerProvider
        except ImportError:
            self._logger.warning("OpenTelemetry SDK not installed, spans and metrics are only logged")
            return None, None

        resource = Resource.create({"service.name": self._service_name})
        tracer = None
        meter = None
        if enable_tracing:
            trace.set_tracer_provider(TracerProvider(resource=resource))
            tracer = trace.get_tracer(self._service_name)
        if enable_metrics:
            metrics.set_meter_provider(MeterProvider(resource=resource))
            meter = metrics.get_meter(self._service_name)
        self._logger.info(f"OpenTelemetry enabled (tracing={enable_tracing}, metrics={enable_metrics})")
        return tracer, meter

    def log_event(self, event_name: str, data: dict[str, Any]) -> None:
        """Log an event with its payload as structured ``extra`` fields."""
        self._logger.info(
            f"Event: {event_name}",
            extra={"otel.event_name": event_name, "otel.event_data": data},
        )

    def record_metric(
        self, metric_name: str, value: float, tags: dict[str, str] | None = None
    ) -> None:
        """Record a value on the histogram of ``metric_name``."""
        if self._meter is None:
            self._logger.debug(f"Metric: {metric_name}={value:.3e}")
            return
        with self._lock:
            histogram = self._histograms.get(metric_name)
            if histogram is None:
                histogram = self._meter.create_histogram(metric_name)
                self._histograms[metric_name] = histogram
        try:
            histogram.record(value, tags or {})
        except Exception as e:
            self._logger.debug(f"Failed to record {metric_name}: {e}")

    def start_span(self, operation_name: str) -> str:
        """Open a span and return its identifier."""
        handle = None
        if self._tracer is not None:
            try:
                handle = self._tracer.start_span(operation_name)
            except Exception as e:
                self._logger.debug(f"Failed to start span {operation_name}: {e}")
        span_id = uuid4().hex
        with self._lock:
            self._open[span_id] = SpanRecord(operation_name, handle=handle)
        return span_id

    def end_span(self, span_id: str, status: str = "ok") -> None:
        """Close a span with an OK or ERROR status; unknown identifiers are ignored."""
        with self._lock:
            record = self._open.pop(span_id, None)
        if record is None:
            return
        if record.handle is None:
            self._logger.debug(f"Span ended: {record.operation} {status} in {record.elapsed:.3f}s")
            return
        try:
            from opentelemetry.trace import StatusCode

            record.handle.set_status(StatusCode.OK if status == "ok" else StatusCode.ERROR)
            record.handle.end()
        except Exception as e:
            self._logger.debug(f"Failed to end span {record.operation}: {e}")

    @property
    def is_initialized(self) -> bool:
        """Whether the SDK is installed and a tracer or meter is active."""
        return self._tracer is not None or self._meter is not None


def create_observability_adapter(backend: str = "placeholder", **kwargs: Any) -> ObservabilityPort:
    """Build the observability adapter named in the configuration.

    Args:
        backend: "placeholder" or "opentelemetry".
        **kwargs: Constructor arguments of the adapter.

    Raises:
        ValueError: If the backend is unknown.
    """
    if backend == "placeholder":
        return PlaceholderObservabilityAdapter(**kwargs)
    if backend == "opentelemetry":
        return OpenTelemetryAdapter(**kwargs)
    raise ValueError(f"Unknown observability backend: {backend}")
