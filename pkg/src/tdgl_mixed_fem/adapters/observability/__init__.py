"""Observability adapters - logging and OpenTelemetry implementations."""

from tdgl_mixed_fem.adapters.observability.observability_adapter import (
    OpenTelemetryAdapter,
    PlaceholderObservabilityAdapter,
    create_observability_adapter,
)

__all__ = [
    "OpenTelemetryAdapter",
    "PlaceholderObservabilityAdapter",
    "create_observability_adapter",
]
