"""Typed error hierarchy shared by every module.

All failures raised on purpose derive from AuditError so callers (and the
CLI) can distinguish engine errors from programming bugs.
"""

from __future__ import annotations


class AuditError(Exception):
    """Base class for all engine errors."""


class ParseError(AuditError):
    """Malformed input bytes. Carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class SchemaError(AuditError):
    """Structurally valid input violating the documented schema; names the field."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class GraphError(AuditError):
    """Provenance graph violation (cycle, duplicate id, dangling parent)."""


class NotFoundError(AuditError):
    """Lookup of an id that does not exist."""


class PlanError(AuditError):
    """Injection plan incompatible with the target run."""


class FitError(AuditError):
    """Reference learner cannot be fitted (degenerate target, bad shapes)."""


class SpecError(AuditError):
    """Perturbation spec invalid for the dataset schema."""


class EnumError(AuditError):
    """No compatible counterfactual alternative exists."""


class ReportError(AuditError):
    """Report requested over an empty or inconsistent input."""


class ArgError(AuditError):
    """Statistical helper called with out-of-range arguments."""


class ConfigError(AuditError):
    """Harness configuration references missing fixtures or bad values."""
