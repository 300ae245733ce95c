"""Convergence experiment models."""

from tdgl_mixed_fem.domain.experiments.experiment_models import (
    ACCEPTANCE_CHECKS,
    AcceptanceCheck,
    AcceptanceOutcome,
    ConvergenceReport,
    ConvergenceRow,
    ExampleName,
    ExperimentConfig,
    ExperimentError,
    Profile,
    StabilityReport,
    TauRule,
)

__all__ = [
    "ACCEPTANCE_CHECKS",
    "AcceptanceCheck",
    "AcceptanceOutcome",
    "ConvergenceReport",
    "ConvergenceRow",
    "ExampleName",
    "ExperimentConfig",
    "ExperimentError",
    "Profile",
    "StabilityReport",
    "TauRule",
]
