"""Application services."""

from tdgl_mixed_fem.application.services.assembly_service import AssembledSystem, AssemblyService
from tdgl_mixed_fem.application.services.harness_service import HarnessService
from tdgl_mixed_fem.application.services.tdgl_service import TdglProblem, TdglService

__all__ = [
    "AssembledSystem",
    "AssemblyService",
    "HarnessService",
    "TdglProblem",
    "TdglService",
]
