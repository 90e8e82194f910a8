"""Undoable transformation functions: enumeration, checking and replica simulation."""
from .core import OpSet, PropertyReport, TransformTable, check_all, named_table
from .csp import SolutionSet, brute_force_oracle, canonicalize, classify_pattern, enumerate_tables
from .models import StateModel, get_model

__version__ = "0.1.0"

__all__ = [
    "OpSet", "PropertyReport", "TransformTable", "check_all", "named_table",
    "SolutionSet", "brute_force_oracle", "canonicalize", "classify_pattern", "enumerate_tables",
    "StateModel", "get_model",
]
