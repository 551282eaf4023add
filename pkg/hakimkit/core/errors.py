"""
Exception hierarchy shared by the core modules.

Each exception carries the process exit code the CLI maps it to.
"""

from typing import Optional


class HakimkitError(Exception):
    """Base class for analysis failures."""

    exit_code = 3


class SeriesError(HakimkitError):
    """Domain or truncation mismatch, or an operation outside its domain."""


class MapError(HakimkitError):
    """Invalid germ, or a point that is not fixed / not tangent to the identity."""


class HakimError(HakimkitError):
    """Characteristic-direction analysis cannot be carried out."""


class RootFindingError(HakimError):
    """Simultaneous iteration did not converge within the iteration cap."""


class ConstraintError(HakimkitError):
    """Constraint solver called outside its domain."""


class DynamicsError(HakimkitError):
    """Invalid orbit or raster parameters."""


class MapSpecError(HakimkitError):
    """Malformed map specification document."""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field {field}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class FalsificationError(HakimkitError):
    """A relation-clean map failed the index identity."""

    exit_code = 4
