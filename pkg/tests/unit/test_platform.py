"""Tests for runtime information."""

from importlib import metadata
from unittest.mock import patch

from tdgl_mixed_fem.infrastructure.platform import (
    NUMERIC_PACKAGES,
    RuntimeInfo,
    get_runtime_info,
    package_version,
)


class TestGetRuntimeInfo:
    """Tests for get_runtime_info."""

    def test_fields(self) -> None:
        """Test that every field is populated."""
        info = get_runtime_info()
        assert isinstance(info, RuntimeInfo)
        assert info.system
        assert info.python_version.count(".") >= 1
        assert info.cpu_count >= 1
        assert set(info.packages) == set(NUMERIC_PACKAGES)

    def test_numeric_stack_installed(self) -> None:
        """Test that numpy and scipy are reported with a version."""
        info = get_runtime_info()
        assert info.packages["numpy"] != "missing"
        assert info.packages["scipy"] != "missing"

    def test_patched_system(self) -> None:
        """Test the reported system and CPU fallback."""
        with (
            patch("platform.system", return_value="Linux"),
            patch("platform.machine", return_value="aarch64"),
            patch("os.cpu_count", return_value=None),
        ):
            info = get_runtime_info()
        assert info.system == "Linux"
        assert info.machine == "aarch64"
        assert info.cpu_count == 1


class TestPackageVersion:
    """Tests for package_version."""

    def test_missing_package(self) -> None:
        """Test that an absent distribution reads "missing"."""
        with patch.object(metadata, "version", side_effect=metadata.PackageNotFoundError("x")):
            assert package_version("numpy") == "missing"

    def test_installed_package(self) -> None:
        """Test an installed distribution."""
        with patch.object(metadata, "version", return_value="2.1.0"):
            assert package_version("numpy") == "2.1.0"
