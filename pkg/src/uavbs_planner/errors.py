"""
Exception hierarchy and inline error reporting for the planner.

Library code raises the exceptions below; the CLI and the MCP tools turn them
into plain result dictionaries with ``handle_error_inline``.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

logger = logging.getLogger(__name__)


class PlannerError(Exception):
    """Base class for every error raised by the planner."""


class GeometryError(PlannerError, ValueError):
    """Raised when two points coincide and a distance or angle is undefined."""


class DomainError(PlannerError, ValueError):
    """Raised when an argument lies outside an operation's domain."""


class DimensionError(DomainError):
    """Raised when matrix or list dimensions disagree."""


class ResourceLimitError(PlannerError):
    """Raised when a solver would exceed its configured table, state or lattice cap."""


class ReportError(PlannerError):
    """Raised for empty or malformed experiment reports."""


class ScenarioSchemaError(PlannerError):
    """A file did not match its schema.

    ``errors`` holds ``(field_path, message)`` pairs, with paths in dotted form
    such as ``users.3.1`` or ``tiers_bps``.
    """

    def __init__(self, source: str, errors: Sequence[Tuple[str, str]]):
        self.source = source
        self.errors: List[Tuple[str, str]] = list(errors)
        listing = "; ".join(f"{path}: {message}" for path, message in self.errors)
        super().__init__(f"Invalid {source}: {listing}")

    @classmethod
    def from_validation_error(
        cls, source: str, exc: ValidationError, field: Optional[str] = None
    ) -> "ScenarioSchemaError":
        """Build the error from a pydantic ``ValidationError``.

        ``field`` replaces the first path element, for models built from a
        single document field under another name.
        """
        errors = []
        for item in exc.errors():
            loc = [str(part) for part in item["loc"]]
            if field is not None:
                loc = [field, *loc[1:]]
            errors.append((".".join(loc) or "<root>", item["msg"]))
        return cls(source, errors)


def handle_error_inline(operation_name: str, e: Exception) -> Dict[str, Any]:
    """Handle planner errors consistently for the CLI and MCP tools."""
    if isinstance(e, ScenarioSchemaError):
        logger.error(f"Schema error in {operation_name}: {e}")
        return {
            "error": True,
            "error_type": type(e).__name__,
            "error_message": str(e),
            "details": [{"field": path, "message": msg} for path, msg in e.errors],
        }
    if isinstance(e, ValidationError):
        logger.error(f"Validation error in {operation_name}: {e.error_count()} problem(s)")
        return {
            "error": True,
            "error_type": "ValidationError",
            "error_message": str(e),
            "details": [
                {"field": ".".join(str(p) for p in item["loc"]), "message": item["msg"]}
                for item in e.errors()
            ],
        }
    if isinstance(e, PlannerError):
        logger.error(f"{type(e).__name__} in {operation_name}: {e}")
        return {
            "error": True,
            "error_type": type(e).__name__,
            "error_message": str(e),
        }
    logger.error(f"Unexpected error in {operation_name}: {str(e)}")
    return {
        "error": True,
        "error_type": type(e).__name__,
        "error_message": str(e),
    }
