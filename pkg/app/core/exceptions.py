"""
Exception hierarchy for the positivity workbench.

Every error carries the CLI exit code it maps to. Routes translate these
into HTTP errors, the CLI into process exit codes.
"""

from typing import Any, Dict, Optional


class PositivityError(Exception):
    """Base class for all workbench errors."""

    exit_code: int = 1
    status_code: int = 400

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, "details": self.details}


class VariableMismatchError(PositivityError):
    """Polynomials over different variable sets were combined."""


class PolynomialParseError(PositivityError):
    """A polynomial expression could not be parsed."""

    def __init__(self, message: str, position: int = 0, text: str = ""):
        super().__init__(message, {"position": position, "text": text})
        self.position = position
        self.text = text


class DomainError(PositivityError):
    """A function or operation is not defined on the domain."""

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message, {"witness": witness} if witness is not None else None)
        self.witness = witness


class GeneratorRefutedError(PositivityError):
    """A generator claimed nonnegative on the image is negative somewhere."""

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message, {"witness": witness} if witness is not None else None)
        self.witness = witness


class RegularityError(PositivityError):
    """A regularity condition failed or could not be decided."""

    exit_code = 2
    status_code = 422

    def __init__(self, message: str, result: Optional[Any] = None):
        details = {}
        if result is not None:
            details = {"verdict": result.verdict.value, "witness": result.witness}
        super().__init__(message, details)
        self.result = result


class TowerError(PositivityError):
    """The tower is in a state that does not allow the operation."""


class SamplingError(PositivityError):
    """Sampling could not produce enough points."""


class RelaxationError(PositivityError):
    """The moment relaxation could not be built."""


class CertificateError(PositivityError):
    """A certificate could not be extracted, rationalized or read."""

    exit_code = 3


class ScriptSyntaxError(PositivityError):
    """A problem script failed to parse."""

    exit_code = 4

    def __init__(self, message: str, line: int, column: int, expected: Optional[str] = None):
        super().__init__(
            f"{message} at line {line}, column {column}",
            {"line": line, "column": column, "expected": expected},
        )
        self.line = line
        self.column = column
        self.expected = expected


class ScriptExecutionError(PositivityError):
    """A statement of a problem script could not be executed."""
