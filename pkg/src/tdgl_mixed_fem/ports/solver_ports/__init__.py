"""Solver ports - Interfaces for linear algebra backends."""

from tdgl_mixed_fem.ports.solver_ports.linear_solver_port import (
    RESIDUAL_CONTRACT,
    LinearSolverPort,
    ResidualContractError,
    SingularMatrixError,
    SolveResult,
)

__all__ = [
    "RESIDUAL_CONTRACT",
    "LinearSolverPort",
    "ResidualContractError",
    "SingularMatrixError",
    "SolveResult",
]
