"""External ports - observability and report persistence interfaces."""

from tdgl_mixed_fem.ports.external_ports.external_port import ObservabilityPort, ReportWriterPort

__all__ = ["ObservabilityPort", "ReportWriterPort"]
