"""TDGL scheme models."""

from tdgl_mixed_fem.domain.tdgl.tdgl_models import (
    ErrorTriple,
    RunResult,
    SchemeConfig,
    SchemeKind,
    TdglState,
    TimeStepError,
)

__all__ = ["ErrorTriple", "RunResult", "SchemeConfig", "SchemeKind", "TdglState", "TimeStepError"]
