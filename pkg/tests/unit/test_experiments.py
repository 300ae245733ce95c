"""Tests for the convergence experiment models."""

import math

import pytest
from pydantic import ValidationError

from tdgl_mixed_fem.domain.cases import CaseName
from tdgl_mixed_fem.domain.experiments import (
    ConvergenceReport,
    ConvergenceRow,
    ExampleName,
    ExperimentConfig,
    ExperimentError,
    Profile,
    StabilityReport,
    TauRule,
)
from tdgl_mixed_fem.domain.experiments.experiment_models import (
    ACCEPTANCE_CHECKS,
    STABILITY_MESH_SIZES,
    AcceptanceCheck,
    default_tau_rule,
    evaluate_acceptance,
    fitted_order,
    mesh_size,
    pairwise_order,
    profile_mesh_sizes,
)
from tdgl_mixed_fem.domain.tdgl import SchemeKind


def _report(
    example: ExampleName,
    order: int,
    mesh_sizes: list[int],
    rates: tuple[float, float, float],
    base: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> ConvergenceReport:
    """Synthetic report with errors base * (M0 / M)^rate."""
    m0 = mesh_sizes[0]
    rows = [
        ConvergenceRow(
            M=m,
            tau=1.0 / m,
            err_psi=base[0] * (m0 / m) ** rates[0],
            err_A=base[1] * (m0 / m) ** rates[1],
            err_sigma=base[2] * (m0 / m) ** rates[2],
        )
        for m in mesh_sizes
    ]
    return ConvergenceReport(example=example, order=order, rows=rows)


class TestExampleName:
    """Tests for the example registry."""

    def test_case_and_scheme(self) -> None:
        """Test the case and scheme behind each example."""
        assert ExampleName.LSHAPE2D_LAGRANGE.case is CaseName.LSHAPE2D
        assert ExampleName.LSHAPE2D_LAGRANGE.scheme is SchemeKind.LAGRANGE
        assert ExampleName.CUBE3D.scheme is SchemeKind.MIXED

    def test_mesh_size(self) -> None:
        """Test h per dimension."""
        assert mesh_size(ExampleName.SQUARE2D, 8) == pytest.approx(math.sqrt(2) / 8)
        assert mesh_size(ExampleName.CUBE3D, 4) == pytest.approx(math.sqrt(3) / 4)


class TestTauRules:
    """Tests for the time step rules and profiles."""

    def test_steps(self) -> None:
        """Test 1/M, 1/M^2 and fixed steps."""
        assert TauRule.ONE_OVER_M.step(8) == 0.125
        assert TauRule.ONE_OVER_M_SQUARED.step(4) == 0.0625
        assert TauRule.FIXED.step(64, 0.01) == 0.01
        with pytest.raises(ValueError, match="needs tau"):
            TauRule.FIXED.step(8)

    def test_default_rule(self) -> None:
        """Test that only the 2D second-order pairing couples tau to M^2."""
        assert default_tau_rule(ExampleName.SQUARE2D, 1) is TauRule.ONE_OVER_M_SQUARED
        assert default_tau_rule(ExampleName.SQUARE2D, 0) is TauRule.ONE_OVER_M
        assert default_tau_rule(ExampleName.LSHAPE2D, 1) is TauRule.ONE_OVER_M

    def test_profiles(self) -> None:
        """Test the reference mesh densities."""
        assert profile_mesh_sizes(ExampleName.SQUARE2D, 0, Profile.REFERENCE) == [64, 128, 256]
        assert Profile("paper") is Profile.REFERENCE
        assert profile_mesh_sizes(ExampleName.SQUARE2D, 1, Profile.REFERENCE) == [8, 16, 32]
        assert profile_mesh_sizes(ExampleName.LSHAPE2D, 0, Profile.REFERENCE) == [32, 64, 128, 256]
        assert profile_mesh_sizes(ExampleName.CUBE3D, 0, Profile.REFERENCE) == [8, 16]
        with pytest.raises(ValueError, match="No mesh profile"):
            profile_mesh_sizes(ExampleName.CUBE3D, 1, Profile.QUICK)


class TestExperimentConfig:
    """Tests for experiment configuration validation."""

    def test_scheme_config(self) -> None:
        """Test the per-run scheme configuration."""
        config = ExperimentConfig(
            example=ExampleName.SQUARE2D,
            order=1,
            mesh_sizes=[4, 8],
            tau_rule=TauRule.ONE_OVER_M_SQUARED,
        )
        scheme = config.scheme_config(8)
        assert scheme.tau == pytest.approx(1 / 64)
        assert scheme.order == 1
        assert scheme.scheme is SchemeKind.MIXED
        assert scheme.num_steps == 64

    @pytest.mark.parametrize(
        "kwargs,message",
        [
            ({"mesh_sizes": [16, 8]}, "strictly increasing"),
            ({"mesh_sizes": [0, 8]}, "positive"),
            ({"mesh_sizes": []}, "at least 1"),
            ({"mesh_sizes": [8], "tau_rule": "fixed", "tau": 0.1}, "stability sweep"),
            ({"mesh_sizes": [8], "tau_rule": "fixed", "stability_sweep": True}, "needs tau"),
            ({"mesh_sizes": [8], "example": "lshape2d-lagrange", "order": 1}, "order 0"),
            ({"mesh_sizes": [8], "example": "cube3d", "order": 1}, "order 0"),
            ({"mesh_sizes": [8], "jobs": 0}, "greater than or equal"),
        ],
    )
    def test_invalid(self, kwargs: dict, message: str) -> None:
        """Test rejected configurations."""
        with pytest.raises(ValidationError, match=message):
            ExperimentConfig(**kwargs)

    def test_fixed_step_in_sweep(self) -> None:
        """Test that the sweep may fix tau independently of M."""
        config = ExperimentConfig(mesh_sizes=[8, 16], tau_rule="fixed", tau=0.01, stability_sweep=True)
        assert config.scheme_config(16).tau == pytest.approx(0.01)


class TestOrders:
    """Tests for observed convergence orders."""

    def test_pairwise_order(self) -> None:
        """Test e and e / 2^p giving order p."""
        assert pairwise_order(1.0, 0.25, 8, 16) == pytest.approx(2.0)
        assert math.isnan(pairwise_order(0.0, 0.0, 8, 16))

    def test_fitted_order(self) -> None:
        """Test the least-squares slope on exact power laws."""
        assert fitted_order([8, 16, 32], [1.0, 0.5, 0.25]) == pytest.approx(1.0)
        assert math.isnan(fitted_order([8], [1.0]))
        assert math.isnan(fitted_order([8, 16], [1.0, 0.0]))

    def test_report_orders(self) -> None:
        """Test pairwise and fitted orders of a synthetic report."""
        report = _report(ExampleName.SQUARE2D, 0, [8, 16, 32], (1.0, 2.0, 1.5))
        assert report.pairwise_orders()[1] == pytest.approx((1.0, 2.0, 1.5))
        assert report.fitted_orders() == pytest.approx((1.0, 2.0, 1.5))
        assert report.mesh_sizes == [8, 16, 32]
        single = _report(ExampleName.SQUARE2D, 0, [8], (1.0, 1.0, 1.0))
        assert single.fitted_orders() is None
        assert single.pairwise_orders() == []


class TestAcceptance:
    """Tests for the acceptance checks on synthetic reports."""

    def test_square_first_order_passes(self) -> None:
        """Test a report matching the reference errors and orders."""
        rates = (0.95, 0.99, 0.98)
        report = _report(ExampleName.SQUARE2D, 0, [64, 128, 256], rates, base=(3.12e-2, 0.1, 0.1))
        outcomes = evaluate_acceptance(report)
        assert [o.name for o in outcomes] == ["square2d-r0"]
        assert outcomes[0].passed, outcomes[0].messages

    def test_wrong_order_fails(self) -> None:
        """Test that a report with the wrong order is flagged."""
        report = _report(ExampleName.SQUARE2D, 1, [8, 16, 32], (1.0, 2.0, 2.0), base=(0.04, 1.0, 1.0))
        (outcome,) = evaluate_acceptance(report)
        assert not outcome.passed
        assert any("psi order" in message for message in outcome.messages)

    def test_reference_error_mismatch(self) -> None:
        """Test that an error off by more than 30% is flagged."""
        report = _report(ExampleName.SQUARE2D, 1, [8, 16, 32], (2.0, 2.0, 2.0), base=(0.1, 1.0, 1.0))
        (outcome,) = evaluate_acceptance(report)
        assert any("M=16" in message for message in outcome.messages)

    def test_error_message_names_tolerance(self) -> None:
        """Test that the reference error message reports the configured tolerance."""
        check = AcceptanceCheck(
            name="custom",
            example=ExampleName.SQUARE2D,
            order=1,
            expected_errors=((16, "psi", 1e-2),),
            error_tolerance=0.1,
        )
        report = _report(ExampleName.SQUARE2D, 1, [8, 16], (2.0, 2.0, 2.0), base=(0.048, 1.0, 1.0))
        outcome = check.evaluate(report)
        assert outcome.messages == ("psi error 1.2000e-02 at M=16 not within 10% of 1.0000e-02",)

    def test_lshape_bounds(self) -> None:
        """Test the strict bounds on the L-shape orders."""
        report = _report(ExampleName.LSHAPE2D, 0, [32, 64, 128, 256], (1.04, 1.1, 1.91))
        (outcome,) = evaluate_acceptance(report)
        assert any("outside (0.0, 1.0)" in message for message in outcome.messages)

    def test_lagrange_stagnation(self) -> None:
        """Test that converging A and sigma errors fail the stagnation check."""
        stagnant = _report(
            ExampleName.LSHAPE2D_LAGRANGE, 0, [32, 64, 128], (1.0, 0.05, 0.05), base=(0.1, 0.098, 0.5)
        )
        assert evaluate_acceptance(stagnant)[0].passed
        converging = _report(
            ExampleName.LSHAPE2D_LAGRANGE, 0, [32, 64, 128], (1.0, 1.0, 1.0), base=(0.1, 0.196, 0.5)
        )
        outcome = evaluate_acceptance(converging)[0]
        assert not outcome.passed
        assert len(outcome.messages) == 2

    def test_checks_cover_every_reference(self) -> None:
        """Test the registry of checks."""
        names = {check.name for check in ACCEPTANCE_CHECKS}
        assert names == {"square2d-r0", "square2d-r1", "lshape2d-r0", "lshape2d-lagrange", "cube3d-r0"}
        assert evaluate_acceptance(_report(ExampleName.SQUARE2D_LAGRANGE, 0, [8, 16], (1, 1, 1))) == []


class TestStabilityReport:
    """Tests for the plateau checks of the stability sweep."""

    def test_plateau_passes(self) -> None:
        """Test curves that decrease and flatten."""
        sweep = StabilityReport()
        for tau in (0.1, 0.01):
            report = ConvergenceReport(ExampleName.SQUARE2D, 1)
            for m, e in ((8, 1.0), (16, 0.6), (32, 0.55)):
                report.rows.append(ConvergenceRow(m, tau, e, e, e))
            sweep.curves[tau] = report
        outcomes = sweep.plateau_outcomes()
        assert [o.name for o in outcomes] == ["stability-tau=0.1", "stability-tau=0.01"]
        assert all(o.passed for o in outcomes)

    def test_growing_error_fails(self) -> None:
        """Test that errors growing under refinement are flagged."""
        report = ConvergenceReport(ExampleName.SQUARE2D, 1)
        for m, e in ((8, 1.0), (16, 1.5), (32, 4.0)):
            report.rows.append(ConvergenceRow(m, 0.1, e, 1.0, 1.0))
        (outcome,) = StabilityReport({0.1: report}).plateau_outcomes()
        assert not outcome.passed
        assert any("increased" in message for message in outcome.messages)
        assert any("ratio" in message for message in outcome.messages)

    def test_mesh_dominated_curve_passes(self) -> None:
        """Test that a small fixed step still decaying at second order passes."""
        report = ConvergenceReport(ExampleName.SQUARE2D, 1)
        for m, e in zip(STABILITY_MESH_SIZES, (1.6e-2, 4e-3, 1e-3, 2.5e-4, 6.3e-5), strict=True):
            report.rows.append(ConvergenceRow(m, 0.001, e, e, e))
        (outcome,) = StabilityReport({0.001: report}).plateau_outcomes()
        assert outcome.name == "stability-tau=0.001"
        assert outcome.passed, outcome.messages

    def test_drop_after_plateau_fails(self) -> None:
        """Test that a curve collapsing after it has flattened is flagged."""
        report = ConvergenceReport(ExampleName.SQUARE2D, 1)
        for m, e in ((8, 1.0), (16, 0.6), (32, 0.55), (64, 0.1)):
            report.rows.append(ConvergenceRow(m, 0.1, e, 0.5, 0.5))
        (outcome,) = StabilityReport({0.1: report}).plateau_outcomes()
        assert not outcome.passed
        assert outcome.messages == ("psi last ratio 0.182 below 0.5 on the plateau",)


class TestExperimentError:
    """Tests for the experiment error."""

    def test_message(self) -> None:
        """Test that the message names M and n."""
        error = ExperimentError("singular", M=64, n=3)
        assert str(error).startswith("M=64, n=3")
        assert error.M == 64
