"""Configuration management for the solver and the harness."""

import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

ENV_PREFIX = "TDGL_"


@dataclass
class SolverSettings:
    """Configuration for the linear solver.

    Attributes:
        backend: Solver backend name.
        tolerance: Relative residual contract.
        refinement_steps: Iterative refinement steps after the LU solve.
        permc_spec: Fill-reducing column ordering passed to SuperLU.
        parallel_solves: Whether the two solves of a step run concurrently.
    """

    backend: str = "superlu"
    tolerance: float = 1e-10
    refinement_steps: int = 1
    permc_spec: str = "COLAMD"
    parallel_solves: bool = False


@dataclass
class ObservabilityConfig:
    """Configuration for observability.

    Attributes:
        backend: "placeholder" (logging) or "opentelemetry".
        log_level: Logging level.
        metrics_enabled: Whether metrics collection is enabled.
        tracing_enabled: Whether tracing is enabled.
    """

    backend: str = "placeholder"
    log_level: str = "INFO"
    metrics_enabled: bool = False
    tracing_enabled: bool = False


@dataclass
class HarnessDefaults:
    """Default values of the experiment harness.

    Attributes:
        example: Default example name.
        order: Default element order.
        profile: Default mesh-size profile.
        final_time: Final time T.
        output_dir: Directory of CSV reports.
        record_timing: Whether wall times are written to reports.
        jobs: Concurrent mesh-density runs.
    """

    example: str = "square2d"
    order: int = 0
    profile: str = "quick"
    final_time: float = 1.0
    output_dir: str = "results"
    record_timing: bool = True
    jobs: int = 1


@dataclass
class TdglConfig:
    """Main configuration.

    Attributes:
        solver: Linear solver configuration.
        observability: Observability configuration.
        harness: Harness defaults.
        extra: Unrecognized keys from the configuration file.
    """

    solver: SolverSettings = field(default_factory=SolverSettings)
    observability: ObservabilityConfig = field(default_factory=ObservabilityConfig)
    harness: HarnessDefaults = field(default_factory=HarnessDefaults)
    extra: dict[str, str] = field(default_factory=dict)

    def sections(self) -> dict[str, Any]:
        """Section name to section object."""
        return {"solver": self.solver, "observability": self.observability, "harness": self.harness}


def _coerce(raw: str, current: Any, key: str) -> Any:
    """Convert a string to the type of the current value."""
    if isinstance(current, bool):
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"Invalid boolean for {key}: {raw!r}")
    try:
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except ValueError as e:
        raise ValueError(f"Invalid value for {key}: {raw!r}") from e
    return raw.strip()


def apply_setting(config: TdglConfig, key: str, raw: str) -> bool:
    """Apply one ``section.name=value`` setting.

    Args:
        config: Configuration to update in place.
        key: Dotted key, e.g. ``solver.tolerance``.
        raw: Raw string value.

    Returns:
        True if the key was recognized.

    Raises:
        ValueError: If the value cannot be converted.
    """
    section_name, _, name = key.strip().lower().partition(".")
    section = config.sections().get(section_name)
    if section is None or name not in {f.name for f in fields(section)}:
        return False
    setattr(section, name, _coerce(raw, getattr(section, name), key))
    return True


def parse_config_text(text: str, config: TdglConfig | None = None) -> TdglConfig:
    """Parse plain-text ``key=value`` lines; ``#`` starts a comment.

    Args:
        text: File contents.
        config: Configuration to update; defaults when omitted.

    Returns:
        The updated configuration.

    Raises:
        ValueError: If a line has no ``=`` or a value is invalid.
    """
    config = config or TdglConfig()
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"Line {number}: expected key=value, got {line!r}")
        if not apply_setting(config, key, value.strip()):
            logger.warning(f"Unknown configuration key {key.strip()!r}")
            config.extra[key.strip()] = value.strip()
    return config


def load_config(config_path: str | Path | None = None) -> TdglConfig:
    """Load configuration from file and environment.

    Defaults are overridden by the file, which is overridden by ``TDGL_*``
    environment variables (``TDGL_SOLVER_TOLERANCE`` sets ``solver.tolerance``;
    ``TDGL_LOG_LEVEL`` sets ``observability.log_level``).

    Args:
        config_path: Optional path to a ``key=value`` file.

    Returns:
        TdglConfig instance.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If a value is invalid.
    """
    config = TdglConfig()
    if config_path is not None:
        config = parse_config_text(Path(config_path).read_text(encoding="utf-8"), config)

    if os.environ.get("TDGL_LOG_LEVEL"):
        config.observability.log_level = os.environ["TDGL_LOG_LEVEL"]

    for variable, value in os.environ.items():
        if not variable.startswith(ENV_PREFIX) or variable == "TDGL_LOG_LEVEL":
            continue
        section, _, name = variable[len(ENV_PREFIX) :].lower().partition("_")
        if name:
            apply_setting(config, f"{section}.{name}", value)

    return config
