"""Infrastructure layer - Configuration and runtime information."""

from tdgl_mixed_fem.infrastructure.config import TdglConfig, load_config
from tdgl_mixed_fem.infrastructure.platform import RuntimeInfo, get_runtime_info

__all__ = [
    "TdglConfig",
    "load_config",
    "RuntimeInfo",
    "get_runtime_info",
]
