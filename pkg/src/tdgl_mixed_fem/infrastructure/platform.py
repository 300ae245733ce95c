"""Runtime environment information for reports and the info command."""

import os
import platform
from dataclasses import dataclass
from importlib import metadata

NUMERIC_PACKAGES = ("numpy", "scipy", "sympy", "pydantic")


@dataclass
class RuntimeInfo:
    """Information about the interpreter and the numerical stack.

    Attributes:
        system: The OS name (e.g., "Linux").
        machine: The machine type (e.g., "x86_64").
        python_version: The Python version string.
        cpu_count: Logical CPUs, an upper bound for ``--jobs``.
        packages: Installed versions of the numerical packages.
    """

    system: str
    machine: str
    python_version: str
    cpu_count: int
    packages: dict[str, str]


def package_version(name: str) -> str:
    """Installed version of a distribution, or "missing"."""
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return "missing"


def get_runtime_info() -> RuntimeInfo:
    """Collect runtime information.

    Returns:
        RuntimeInfo instance.
    """
    return RuntimeInfo(
        system=platform.system(),
        machine=platform.machine(),
        python_version=platform.python_version(),
        cpu_count=os.cpu_count() or 1,
        packages={name: package_version(name) for name in NUMERIC_PACKAGES},
    )
