"""Manufactured solutions with symbolically derived forcing terms."""

from tdgl_mixed_fem.domain.cases.builtin_cases import get_case, septic_cutoff
from tdgl_mixed_fem.domain.cases.case_models import CaseName, FieldName, ManufacturedCase

__all__ = ["CaseName", "FieldName", "ManufacturedCase", "get_case", "septic_cutoff"]
