"""Simplicial meshes of the unit square, the L-shape and the unit cube."""

from tdgl_mixed_fem.domain.mesh.mesh_models import (
    DomainKind,
    Mesh,
    build_domain_mesh,
    build_lshape_mesh,
    build_mesh,
    build_unit_cube_mesh,
    build_unit_square_mesh,
    dump_mesh,
    load_mesh,
)

__all__ = [
    "DomainKind",
    "Mesh",
    "build_domain_mesh",
    "build_lshape_mesh",
    "build_mesh",
    "build_unit_cube_mesh",
    "build_unit_square_mesh",
    "dump_mesh",
    "load_mesh",
]
