"""Test configuration for pytest."""

import numpy as np
import pytest

from tdgl_mixed_fem.adapters.observability.observability_adapter import (
    PlaceholderObservabilityAdapter,
)
from tdgl_mixed_fem.application.services.assembly_service import AssemblyService
from tdgl_mixed_fem.application.services.tdgl_service import TdglService
from tdgl_mixed_fem.domain.mesh.mesh_models import (
    Mesh,
    build_lshape_mesh,
    build_unit_cube_mesh,
    build_unit_square_mesh,
)


@pytest.fixture
def square_mesh() -> Mesh:
    """Provide a coarse unit square mesh."""
    return build_unit_square_mesh(4)


@pytest.fixture
def lshape_mesh() -> Mesh:
    """Provide a coarse L-shape mesh."""
    return build_lshape_mesh(2)


@pytest.fixture
def cube_mesh() -> Mesh:
    """Provide a coarse unit cube mesh."""
    return build_unit_cube_mesh(2)


@pytest.fixture
def rng() -> np.random.Generator:
    """Provide a seeded random generator."""
    return np.random.default_rng(20240607)


@pytest.fixture
def observability() -> PlaceholderObservabilityAdapter:
    """Provide a logging-based observability adapter."""
    return PlaceholderObservabilityAdapter()


@pytest.fixture
def tdgl_service(observability: PlaceholderObservabilityAdapter) -> TdglService:
    """Provide a time stepping service with fresh caches."""
    return TdglService(observability=observability, assembly=AssemblyService())
