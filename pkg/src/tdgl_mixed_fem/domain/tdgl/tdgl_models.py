"""TDGL scheme configuration, state and run results."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from tdgl_mixed_fem.domain.fespace.space_models import FeFunction

logger = logging.getLogger(__name__)


class SchemeKind(str, Enum):
    """Time-stepping schemes."""

    MIXED = "mixed"
    LAGRANGE = "lagrange"


class SchemeConfig(BaseModel):
    """Parameters of one TDGL run.

    The step is adjusted to T / round(T / tau) so that N = T / tau is an integer.
    """

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    scheme: SchemeKind = Field(default=SchemeKind.MIXED, description="Galerkin-mixed or Lagrange")
    order: int = Field(default=0, ge=0, le=1, description="Element order r")
    mesh_density: int = Field(..., ge=1, description="Mesh density M")
    tau: float = Field(..., gt=0.0, description="Time step")
    final_time: float = Field(default=1.0, gt=0.0, description="Final time T")
    kappa: float | None = Field(default=None, gt=0.0, description="Ginzburg-Landau parameter")
    eta: float = Field(default=1.0, gt=0.0, description="Time relaxation constant")
    parallel_solves: bool = Field(default=False, description="Run the two solves concurrently")

    @model_validator(mode="before")
    @classmethod
    def adjust_time_step(cls, data: Any) -> Any:
        """Round the number of steps to an integer and adjust tau."""
        if not isinstance(data, dict):
            return data
        tau = data.get("tau")
        final_time = data.get("final_time", 1.0)
        if tau is None or final_time is None or tau <= 0 or final_time <= 0:
            return data
        steps = max(1, round(final_time / tau))
        adjusted = final_time / steps
        if abs(adjusted - tau) > 1e-12 * final_time:
            logger.warning(f"Time step {tau} does not divide T={final_time}; using {adjusted}")
            data = {**data, "tau": adjusted}
        return data

    @model_validator(mode="after")
    def check_pairing(self) -> "SchemeConfig":
        """The Lagrange comparison scheme has no order parameter."""
        if self.scheme is SchemeKind.LAGRANGE and self.order != 0:
            raise ValueError("The Lagrange scheme uses P1 elements only (order must be 0)")
        return self

    @property
    def num_steps(self) -> int:
        """Number of time steps N."""
        return max(1, round(self.final_time / self.tau))


@dataclass(frozen=True)
class TdglState:
    """The discrete solution at one time level.

    Attributes:
        psi: Order parameter (complex Lagrange).
        A: Magnetic potential (Raviart-Thomas, or vector Lagrange for the comparison scheme).
        sigma: curl A (Lagrange in 2D, Nedelec in 3D; L2-projected curl for the
            comparison scheme).
        n: Time level.
        tau: Time step.
        constraint_residual: Relative residual of the sigma-A constraint rows.
    """

    psi: FeFunction
    A: FeFunction
    sigma: FeFunction
    n: int
    tau: float
    constraint_residual: float = 0.0

    def __post_init__(self) -> None:
        """Check that all fields live on the same mesh."""
        if not (self.psi.mesh is self.A.mesh and self.A.mesh is self.sigma.mesh):
            raise ValueError("psi, A and sigma must live on the same mesh")
        if self.n < 0:
            raise ValueError(f"Time level must be non-negative, got {self.n}")

    @property
    def t(self) -> float:
        """Time of the level, n * tau."""
        return self.n * self.tau


@dataclass(frozen=True)
class ErrorTriple:
    """L2 errors of psi, A and sigma against the exact fields.

    Attributes:
        psi: ||psi_h - psi||.
        A: ||A_h - A||.
        sigma: ||sigma_h - sigma||.
    """

    psi: float
    A: float
    sigma: float

    def as_tuple(self) -> tuple[float, float, float]:
        """The three errors in (psi, A, sigma) order."""
        return (self.psi, self.A, self.sigma)


@dataclass(frozen=True)
class RunResult:
    """Outcome of a complete run.

    Attributes:
        state: Final state at t_N.
        errors: Errors at t_N.
        seconds: Wall time of the run.
        max_solver_residual: Largest relative solver residual over all steps.
        max_constraint_residual: Largest constraint residual over all steps.
    """

    state: TdglState
    errors: ErrorTriple
    seconds: float
    max_solver_residual: float = 0.0
    max_constraint_residual: float = 0.0


class TimeStepError(RuntimeError):
    """Raised when a time step fails.

    Attributes:
        n: Time level being computed.
        t: Time of that level.
    """

    def __init__(self, message: str, n: int, t: float) -> None:
        """Initialize the error.

        Args:
            message: Error description.
            n: Time level being computed.
            t: Its time.
        """
        super().__init__(f"Time step n={n} (t={t:.6g}) failed: {message}")
        self.n = n
        self.t = t
