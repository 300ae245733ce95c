"""Tests for the command line interface."""

import os
from pathlib import Path
from unittest.mock import patch

import pytest

from tdgl_mixed_fem.adapters.observability.observability_adapter import OpenTelemetryAdapter
from tdgl_mixed_fem.domain.experiments import ExampleName, Profile
from tdgl_mixed_fem.domain.experiments.experiment_models import profile_mesh_sizes
from tdgl_mixed_fem.infrastructure.config import TdglConfig
from tdgl_mixed_fem.main import (
    EXIT_OK,
    EXIT_SOLVER_ERROR,
    create_harness,
    create_parser,
    main,
)


@pytest.fixture(autouse=True)
def clean_environment():
    """Keep TDGL_* variables of the caller out of the tests."""
    with patch.dict(os.environ, {}, clear=True):
        yield


class TestParser:
    """Tests for argument parsing."""

    def test_convergence_arguments(self) -> None:
        """Test the convergence subcommand."""
        args = create_parser().parse_args(
            ["convergence", "--example", "lshape2d", "--order", "1", "--mesh-sizes", "8", "16"]
        )
        assert args.command == "convergence"
        assert args.example == "lshape2d"
        assert args.order == 1
        assert args.mesh_sizes == [8, 16]
        assert args.check is False

    def test_stability_defaults(self) -> None:
        """Test the stability subcommand defaults."""
        args = create_parser().parse_args(["stability"])
        assert args.taus == [0.1, 0.01, 0.001]
        assert args.mesh_sizes == [8, 16, 32, 64, 128]

    def test_invalid_order(self) -> None:
        """Test that unsupported orders are rejected by the parser."""
        with pytest.raises(SystemExit):
            create_parser().parse_args(["convergence", "--order", "2"])

    def test_profile_alias(self) -> None:
        """Test that the paper profile name selects the reference mesh sizes."""
        args = create_parser().parse_args(["convergence", "--example", "square2d", "--profile", "paper"])
        assert Profile(args.profile) is Profile.REFERENCE
        assert profile_mesh_sizes(ExampleName.SQUARE2D, 0, Profile(args.profile)) == [64, 128, 256]

    def test_stability_single_tau(self) -> None:
        """Test that --tau gives the sweep a single fixed step."""
        assert create_parser().parse_args(["stability", "--tau", "0.01"]).taus == [0.01]
        assert create_parser().parse_args(["stability", "--taus", "0.1", "0.01"]).taus == [0.1, 0.01]

    @pytest.mark.parametrize(
        "argv",
        [
            ["convergence", "--tau", "0.01"],
            ["convergence", "--tau-r", "one_over_M"],
            ["convergence", "--prof", "quick"],
            ["--log", "DEBUG", "info"],
        ],
    )
    def test_no_abbreviations(self, argv: list[str]) -> None:
        """Test that prefixes of long options are rejected instead of expanded."""
        with pytest.raises(SystemExit):
            create_parser().parse_args(argv)


class TestCreateHarness:
    """Tests for service wiring."""

    def test_opentelemetry_backend(self) -> None:
        """Test that the configured observability backend is used."""
        config = TdglConfig()
        config.observability.backend = "opentelemetry"
        harness = create_harness(config)
        assert isinstance(harness.tdgl.observability, OpenTelemetryAdapter)

    def test_unknown_solver(self) -> None:
        """Test that an unknown solver backend is rejected."""
        config = TdglConfig()
        config.solver.backend = "pardiso"
        with pytest.raises(ValueError, match="Unknown linear solver backend"):
            create_harness(config)


class TestMain:
    """Tests for main."""

    def test_info(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the info command."""
        assert main(["info"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "tdgl-mixed-fem" in out
        assert "P1 x RT1 x P2" in out

    def test_mesh(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test dumping an L-shape mesh."""
        out = tmp_path / "lshape.txt"
        code = main(["mesh", "--domain", "lshape", "--mesh-density", "2", "--out", str(out)])
        assert code == EXIT_OK
        assert out.read_text().splitlines()[0] == "2 21 24"
        assert "21 vertices" in capsys.readouterr().out

    def test_step_check(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the step check on zero data."""
        code = main(["step-check", "--case", "zero2d", "--mesh-density", "2", "--steps", "2"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "n=2" in out
        assert "Max solver residual" in out

    def test_convergence(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test a small convergence study written to CSV."""
        out = tmp_path / "square.csv"
        code = main(
            [
                "convergence",
                "--example",
                "square2d",
                "--order",
                "0",
                "--mesh-sizes",
                "2",
                "4",
                "--no-timing",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 4
        assert lines[-1].startswith("order,")
        assert f"Report written to {out}" in capsys.readouterr().out

    def test_stability(self, tmp_path: Path) -> None:
        """Test a small stability sweep."""
        out = tmp_path / "sweep.csv"
        code = main(
            ["stability", "--taus", "0.5", "--mesh-sizes", "2", "4", "--out", str(out)]
        )
        assert code == EXIT_OK
        assert (tmp_path / "sweep_tau0.5.csv").exists()

    def test_invalid_mesh_sizes(self) -> None:
        """Test that an invalid study configuration is an input error."""
        code = main(["convergence", "--mesh-sizes", "8", "4"])
        assert code == EXIT_SOLVER_ERROR

    def test_malformed_config(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that a malformed configuration file is an input error."""
        path = tmp_path / "bad.cfg"
        path.write_text("solver.tolerance\n")
        assert main(["--config", str(path), "info"]) == EXIT_SOLVER_ERROR
        assert "expected key=value" in capsys.readouterr().err

    def test_missing_config(self, tmp_path: Path) -> None:
        """Test that a missing configuration file is an input error."""
        assert main(["--config", str(tmp_path / "absent.cfg"), "info"]) == EXIT_SOLVER_ERROR

    def test_config_file_applies(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that configuration values reach the info output."""
        path = tmp_path / "tdgl.cfg"
        path.write_text("harness.profile = extended\nsolver.permc_spec = NATURAL\n")
        assert main(["--config", str(path), "info"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "profile extended" in out
        assert "NATURAL" in out
