"""Linear solver adapters.

This module provides sparse matrix construction and direct solvers:
- from_triplets: COO triplets to CSR with duplicate summation
- SuperLUSolverAdapter: SuperLU factorization with COLAMD ordering
"""

from tdgl_mixed_fem.adapters.linsolve.sparse_lu_adapter import (
    SuperLUSolverAdapter,
    TripletBuffer,
    create_linear_solver,
    from_triplets,
    relative_residual,
)

__all__ = [
    "SuperLUSolverAdapter",
    "TripletBuffer",
    "create_linear_solver",
    "from_triplets",
    "relative_residual",
]
