"""Convergence experiment models: configuration, reports and acceptance checks."""

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from tdgl_mixed_fem.domain.cases.case_models import CaseName
from tdgl_mixed_fem.domain.tdgl.tdgl_models import SchemeConfig, SchemeKind


class ExampleName(str, Enum):
    """Experiments the harness can run."""

    SQUARE2D = "square2d"
    SQUARE2D_LAGRANGE = "square2d-lagrange"
    LSHAPE2D = "lshape2d"
    LSHAPE2D_LAGRANGE = "lshape2d-lagrange"
    CUBE3D = "cube3d"

    @property
    def case(self) -> CaseName:
        """Manufactured case of the experiment."""
        return CaseName(self.value.removesuffix("-lagrange"))

    @property
    def scheme(self) -> SchemeKind:
        """Scheme of the experiment."""
        return SchemeKind.LAGRANGE if self.value.endswith("-lagrange") else SchemeKind.MIXED


class TauRule(str, Enum):
    """Coupling of the time step to the mesh density."""

    ONE_OVER_M = "one_over_M"
    ONE_OVER_M_SQUARED = "one_over_M_squared"
    FIXED = "fixed"

    def step(self, mesh_density: int, fixed: float | None = None) -> float:
        """Time step for a mesh density."""
        if self is TauRule.ONE_OVER_M:
            return 1.0 / mesh_density
        if self is TauRule.ONE_OVER_M_SQUARED:
            return 1.0 / mesh_density**2
        if fixed is None:
            raise ValueError("A fixed time step rule needs tau")
        return fixed


PROFILE_ALIAS = "paper"


class Profile(str, Enum):
    """Mesh-size profiles."""

    QUICK = "quick"
    REFERENCE = "reference"
    EXTENDED = "extended"

    @classmethod
    def _missing_(cls, value: object) -> "Profile | None":
        """Accept ``paper`` as another name of the reference profile."""
        return cls.REFERENCE if value == PROFILE_ALIAS else None


PROFILE_MESH_SIZES: dict[tuple[ExampleName, int], dict[Profile, list[int]]] = {
    (ExampleName.SQUARE2D, 0): {
        Profile.QUICK: [8, 16, 32],
        Profile.REFERENCE: [64, 128, 256],
        Profile.EXTENDED: [64, 128, 256],
    },
    (ExampleName.SQUARE2D, 1): {
        Profile.QUICK: [4, 8, 16],
        Profile.REFERENCE: [8, 16, 32],
        Profile.EXTENDED: [8, 16, 32, 64],
    },
    (ExampleName.SQUARE2D_LAGRANGE, 0): {
        Profile.QUICK: [8, 16, 32],
        Profile.REFERENCE: [32, 64, 128, 256],
        Profile.EXTENDED: [32, 64, 128, 256],
    },
    (ExampleName.LSHAPE2D, 0): {
        Profile.QUICK: [8, 16, 32],
        Profile.REFERENCE: [32, 64, 128, 256],
        Profile.EXTENDED: [32, 64, 128, 256],
    },
    (ExampleName.LSHAPE2D, 1): {
        Profile.QUICK: [8, 16, 32],
        Profile.REFERENCE: [16, 32, 64],
        Profile.EXTENDED: [16, 32, 64, 128],
    },
    (ExampleName.LSHAPE2D_LAGRANGE, 0): {
        Profile.QUICK: [8, 16, 32],
        Profile.REFERENCE: [32, 64, 128, 256],
        Profile.EXTENDED: [32, 64, 128, 256],
    },
    (ExampleName.CUBE3D, 0): {
        Profile.QUICK: [2, 4, 8],
        Profile.REFERENCE: [8, 16],
        Profile.EXTENDED: [8, 16, 32],
    },
}

STABILITY_TAUS: tuple[float, ...] = (0.1, 0.01, 0.001)
STABILITY_MESH_SIZES: tuple[int, ...] = (8, 16, 32, 64, 128)


def default_tau_rule(example: ExampleName, order: int) -> TauRule:
    """tau = 1/M^2 for the 2D second-order pairing, tau = 1/M otherwise."""
    if example is ExampleName.SQUARE2D and order == 1:
        return TauRule.ONE_OVER_M_SQUARED
    return TauRule.ONE_OVER_M


def profile_mesh_sizes(example: ExampleName, order: int, profile: Profile) -> list[int]:
    """Mesh densities of a profile.

    Raises:
        ValueError: If the example has no such pairing.
    """
    sizes = PROFILE_MESH_SIZES.get((example, order))
    if sizes is None:
        raise ValueError(f"No mesh profile for {example.value} with order {order}")
    return list(sizes[profile])


class ExperimentConfig(BaseModel):
    """Configuration of a convergence study or of one stability curve."""

    model_config = ConfigDict(frozen=True)

    example: ExampleName = Field(default=ExampleName.SQUARE2D)
    order: int = Field(default=0, ge=0, le=1, description="Element order r")
    mesh_sizes: list[int] = Field(..., min_length=1, description="Mesh densities M")
    tau_rule: TauRule = Field(default=TauRule.ONE_OVER_M)
    tau: float | None = Field(default=None, gt=0.0, description="Step for the fixed rule")
    final_time: float = Field(default=1.0, gt=0.0)
    kappa: float | None = Field(default=None, gt=0.0)
    eta: float = Field(default=1.0, gt=0.0)
    output: Path | None = Field(default=None, description="CSV destination")
    record_timing: bool = Field(default=True, description="Write wall times into the report")
    stability_sweep: bool = Field(default=False)
    parallel_solves: bool = Field(default=False)
    jobs: int = Field(default=1, ge=1, description="Concurrent M-runs")

    @field_validator("mesh_sizes")
    @classmethod
    def strictly_increasing(cls, value: list[int]) -> list[int]:
        """Mesh densities must be positive and strictly increasing."""
        if any(m < 1 for m in value):
            raise ValueError("Mesh densities must be positive")
        if any(b <= a for a, b in zip(value, value[1:], strict=False)):
            raise ValueError(f"Mesh densities must be strictly increasing, got {value}")
        return value

    @model_validator(mode="after")
    def check_tau_rule(self) -> "ExperimentConfig":
        """A fixed step belongs to the stability sweep and needs tau."""
        if self.tau_rule is TauRule.FIXED and not self.stability_sweep:
            raise ValueError("A fixed time step is only allowed in the stability sweep")
        if self.tau_rule is TauRule.FIXED and self.tau is None:
            raise ValueError("A fixed time step rule needs tau")
        if self.example.scheme is SchemeKind.LAGRANGE and self.order != 0:
            raise ValueError("Lagrange examples use order 0")
        if self.example is ExampleName.CUBE3D and self.order != 0:
            raise ValueError("The 3D example supports order 0 only")
        return self

    def scheme_config(self, mesh_density: int) -> SchemeConfig:
        """Scheme configuration of one run."""
        return SchemeConfig(
            scheme=self.example.scheme,
            order=self.order,
            mesh_density=mesh_density,
            tau=self.tau_rule.step(mesh_density, self.tau),
            final_time=self.final_time,
            kappa=self.kappa,
            eta=self.eta,
            parallel_solves=self.parallel_solves,
        )


def mesh_size(example: ExampleName, mesh_density: int) -> float:
    """h = sqrt(2)/M in 2D and sqrt(3)/M in 3D."""
    dimension = 3 if example is ExampleName.CUBE3D else 2
    return math.sqrt(dimension) / mesh_density


def pairwise_order(coarse: float, fine: float, coarse_m: int, fine_m: int) -> float:
    """Observed order log(e_coarse / e_fine) / log(M_fine / M_coarse); NaN for zero errors."""
    if coarse <= 0.0 or fine <= 0.0:
        return math.nan
    return math.log(coarse / fine) / math.log(fine_m / coarse_m)


def fitted_order(mesh_sizes: list[int], errors: list[float]) -> float:
    """Least-squares slope of log e against log M (order of decay); NaN for zero errors."""
    if len(mesh_sizes) < 2 or any(e <= 0.0 for e in errors):
        return math.nan
    slope, _ = np.polyfit(np.log(mesh_sizes), np.log(errors), 1)
    return float(-slope)


@dataclass(frozen=True)
class ConvergenceRow:
    """Errors of one run.

    Attributes:
        M: Mesh density.
        tau: Time step used.
        err_psi: L2 error of psi at T.
        err_A: L2 error of A at T.
        err_sigma: L2 error of sigma at T.
        seconds: Wall time (0 when timing is not recorded).
        h: Mesh size.
    """

    M: int
    tau: float
    err_psi: float
    err_A: float
    err_sigma: float
    seconds: float = 0.0
    h: float = 0.0

    def errors(self) -> tuple[float, float, float]:
        """(psi, A, sigma) errors."""
        return (self.err_psi, self.err_A, self.err_sigma)


@dataclass
class ConvergenceReport:
    """Rows of a convergence study and the observed orders.

    Attributes:
        example: Experiment name.
        order: Element order r.
        rows: One row per mesh density.
        metadata: Free-form descriptive values (e.g. the fixed step of a sweep).
    """

    example: ExampleName
    order: int
    rows: list[ConvergenceRow] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def column(self, index: int) -> list[float]:
        """Errors of one field over the rows (0 psi, 1 A, 2 sigma)."""
        return [row.errors()[index] for row in self.rows]

    @property
    def mesh_sizes(self) -> list[int]:
        """Mesh densities of the rows."""
        return [row.M for row in self.rows]

    def pairwise_orders(self) -> list[tuple[float, float, float]]:
        """Orders between consecutive rows."""
        result = []
        for coarse, fine in zip(self.rows, self.rows[1:], strict=False):
            result.append(
                tuple(
                    pairwise_order(c, f, coarse.M, fine.M)
                    for c, f in zip(coarse.errors(), fine.errors(), strict=True)
                )
            )
        return result  # type: ignore[return-value]

    def fitted_orders(self) -> tuple[float, float, float] | None:
        """Least-squares orders per field, or None with fewer than two rows."""
        if len(self.rows) < 2:
            return None
        m = self.mesh_sizes
        return (
            fitted_order(m, self.column(0)),
            fitted_order(m, self.column(1)),
            fitted_order(m, self.column(2)),
        )


FIELD_INDEX = {"psi": 0, "A": 1, "sigma": 2}


@dataclass(frozen=True)
class AcceptanceOutcome:
    """Result of evaluating one acceptance check.

    Attributes:
        name: Check name.
        passed: Whether every condition holds.
        messages: One message per violated condition.
    """

    name: str
    passed: bool
    messages: tuple[str, ...] = ()


@dataclass(frozen=True)
class AcceptanceCheck:
    """Expected behaviour of a convergence study.

    Attributes:
        name: Check name.
        example: Experiment.
        order: Element order.
        expected_orders: Fitted (psi, A, sigma) orders, if checked.
        order_tolerance: Allowed deviation of the fitted orders.
        expected_errors: (M, field, value) reference errors.
        error_tolerance: Allowed relative deviation of the errors.
        order_bounds: (field, lower, upper) strict bounds on fitted orders.
        stagnating_fields: Fields whose error may not drop by more than
            ``stagnation_drop`` from the first to the last row.
        stagnation_drop: Allowed relative decrease for stagnating fields.
    """

    name: str
    example: ExampleName
    order: int
    expected_orders: tuple[float, float, float] | None = None
    order_tolerance: float = 0.2
    expected_errors: tuple[tuple[int, str, float], ...] = ()
    error_tolerance: float = 0.3
    order_bounds: tuple[tuple[str, float, float], ...] = ()
    stagnating_fields: tuple[str, ...] = ()
    stagnation_drop: float = 0.2

    def applies_to(self, report: ConvergenceReport) -> bool:
        """Whether the check concerns this report."""
        return report.example is self.example and report.order == self.order

    def evaluate(self, report: ConvergenceReport) -> AcceptanceOutcome:
        """Evaluate the check on a report.

        Args:
            report: Convergence report of the same example and order.

        Returns:
            The outcome; reference errors for mesh densities absent from the
            report are skipped.
        """
        messages: list[str] = []
        fitted = report.fitted_orders()
        if self.expected_orders is not None:
            if fitted is None:
                messages.append("fewer than two rows, orders undefined")
            else:
                for name, index in FIELD_INDEX.items():
                    observed = fitted[index]
                    expected = self.expected_orders[index]
                    if not abs(observed - expected) <= self.order_tolerance:
                        messages.append(
                            f"{name} order {observed:.3f} not within {self.order_tolerance} of {expected}"
                        )
        for name, lower, upper in self.order_bounds:
            observed = fitted[FIELD_INDEX[name]] if fitted is not None else math.nan
            if not lower < observed < upper:
                messages.append(f"{name} order {observed:.3f} outside ({lower}, {upper})")
        by_m = {row.M: row for row in report.rows}
        for m, name, value in self.expected_errors:
            if m not in by_m:
                continue
            observed = by_m[m].errors()[FIELD_INDEX[name]]
            if not abs(observed - value) <= self.error_tolerance * value:
                messages.append(
                    f"{name} error {observed:.4e} at M={m} "
                    f"not within {self.error_tolerance:.0%} of {value:.4e}"
                )
        if report.rows and self.stagnating_fields:
            first, last = report.rows[0], report.rows[-1]
            for name in self.stagnating_fields:
                index = FIELD_INDEX[name]
                if last.errors()[index] < (1.0 - self.stagnation_drop) * first.errors()[index]:
                    messages.append(
                        f"{name} error dropped from {first.errors()[index]:.4e} "
                        f"to {last.errors()[index]:.4e}"
                    )
        return AcceptanceOutcome(self.name, not messages, tuple(messages))


ACCEPTANCE_CHECKS: tuple[AcceptanceCheck, ...] = (
    AcceptanceCheck(
        name="square2d-r0",
        example=ExampleName.SQUARE2D,
        order=0,
        expected_orders=(0.95, 0.99, 0.98),
        order_tolerance=0.15,
        expected_errors=((64, "psi", 3.1216e-02), (256, "psi", 8.3156e-03)),
    ),
    AcceptanceCheck(
        name="square2d-r1",
        example=ExampleName.SQUARE2D,
        order=1,
        expected_orders=(2.0, 2.0, 2.0),
        order_tolerance=0.2,
        expected_errors=((16, "psi", 9.9391e-03),),
    ),
    AcceptanceCheck(
        name="lshape2d-r0",
        example=ExampleName.LSHAPE2D,
        order=0,
        expected_orders=(1.04, 0.86, 1.91),
        order_tolerance=0.2,
        expected_errors=((128, "sigma", 8.9061e-03),),
        order_bounds=(("A", 0.0, 1.0), ("sigma", 1.5, math.inf)),
    ),
    AcceptanceCheck(
        name="lshape2d-lagrange",
        example=ExampleName.LSHAPE2D_LAGRANGE,
        order=0,
        expected_errors=((64, "A", 9.8059e-02),),
        stagnating_fields=("A", "sigma"),
    ),
    AcceptanceCheck(
        name="cube3d-r0",
        example=ExampleName.CUBE3D,
        order=0,
        expected_orders=(1.234, 1.049, 1.015),
        order_tolerance=0.25,
        expected_errors=((16, "sigma", 1.9502e00),),
    ),
)


def evaluate_acceptance(report: ConvergenceReport) -> list[AcceptanceOutcome]:
    """Evaluate every acceptance check that concerns a report."""
    return [check.evaluate(report) for check in ACCEPTANCE_CHECKS if check.applies_to(report)]


def _on_plateau(errors: list[float]) -> bool:
    """Whether the error had already stopped decaying before the last refinement."""
    return len(errors) >= 3 and errors[-3] > 0.0 and errors[-2] / errors[-3] >= 0.5


@dataclass
class StabilityReport:
    """Error curves of the stability sweep, one convergence report per fixed step.

    Attributes:
        curves: Fixed time step to report.
    """

    curves: dict[float, ConvergenceReport] = field(default_factory=dict)

    def plateau_outcomes(self, monotone_tolerance: float = 0.1) -> list[AcceptanceOutcome]:
        """Check that every curve is bounded and flattens under mesh refinement.

        Errors must be non-increasing in M up to ``monotone_tolerance``, and the
        last error may be at most twice the one before. Once a curve has
        reached its time step plateau, i.e. the previous ratio is already at
        least 0.5, the last ratio must also be at least 0.5. Curves that are
        still dominated by the mesh error keep decaying at the spatial rate.

        Args:
            monotone_tolerance: Relative slack on monotonicity.

        Returns:
            One outcome per fixed step.
        """
        outcomes = []
        for tau, report in sorted(self.curves.items(), reverse=True):
            messages = []
            for name, index in FIELD_INDEX.items():
                errors = report.column(index)
                for coarse, fine in zip(errors, errors[1:], strict=False):
                    if fine > (1.0 + monotone_tolerance) * coarse:
                        messages.append(f"{name} error increased from {coarse:.4e} to {fine:.4e}")
                if len(errors) < 2 or errors[-2] <= 0.0:
                    continue
                ratio = errors[-1] / errors[-2]
                if ratio > 2.0:
                    messages.append(f"{name} last ratio {ratio:.3f} above 2")
                elif _on_plateau(errors) and ratio < 0.5:
                    messages.append(f"{name} last ratio {ratio:.3f} below 0.5 on the plateau")
            outcomes.append(AcceptanceOutcome(f"stability-tau={tau:g}", not messages, tuple(messages)))
        return outcomes


class ExperimentError(RuntimeError):
    """A run of a convergence study failed.

    Attributes:
        M: Mesh density of the failed run.
        n: Time level at which it failed, if known.
    """

    def __init__(self, message: str, M: int, n: int | None = None) -> None:
        super().__init__(f"M={M}, n={n}: {message}")
        self.M = M
        self.n = n
