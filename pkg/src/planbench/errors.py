"""Exception hierarchy shared by all planbench modules."""

from __future__ import annotations


class PlanBenchError(Exception):
    """Base class for every error raised by planbench."""


class InputError(PlanBenchError, ValueError):
    """Bad argument: wrong dimension, non-finite value, out-of-range parameter."""


class ConfigValidationError(InputError):
    """A configuration document violates its schema.

    ``path`` is the dotted field path of the offending entry, e.g. ``goal[0].epsilon``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleRandomizationError(PlanBenchError):
    pass


class ContractError(PlanBenchError, RuntimeError):
    """An operation was called in a state that its contract forbids."""


class CollisionStateError(PlanBenchError):
    """The robot is already in collision; the potential field is undefined there."""


class RegistryError(PlanBenchError, LookupError):
    pass


class UrdfError(PlanBenchError):
    """Base class for URDF ingestion errors. ``element`` names the offending tag."""

    def __init__(self, message: str, element: str | None = None):
        self.element = element
        super().__init__(message if element is None else f"{element}: {message}")


class UrdfParseError(UrdfError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class UrdfValidationError(UrdfError):
    pass


class UrdfAmbiguityError(UrdfError):
    pass


class UnsupportedFeatureError(UrdfError):
    pass


class LoadError(PlanBenchError):
    """Study folder content could not be read back."""

    def __init__(self, file: str, message: str, row: int | None = None):
        self.file = file
        self.row = row
        where = f" at row {row}" if row is not None else ""
        super().__init__(f"{file}{where}: {message}")


class RenderError(PlanBenchError):
    pass


class EmitError(PlanBenchError):
    pass
