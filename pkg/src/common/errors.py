"""
Exception hierarchy shared by every anisoheat module
"""
from typing import Any, Dict, Optional


class AnisoheatError(Exception):
    """Base class for all toolkit errors"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        """
        Args:
            message: Human readable description
            details: Structured context (offending values, module, limits)
        """
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})


class DomainError(AnisoheatError):
    """Argument outside the mathematical domain of an operation"""


class RangeError(AnisoheatError):
    """Target value outside the range of a bounded function"""


class IntegrabilityError(AnisoheatError):
    """Levy data does not integrate min(1, t)"""


class AccuracyError(AnisoheatError):
    """Quadrature did not reach its tolerance"""

    def __init__(self, message: str, achieved_error: float, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, {**(details or {}), "achieved_error": achieved_error})
        self.achieved_error = achieved_error


class ArgumentError(AnisoheatError):
    """Malformed or inconsistent arguments"""


class UnsupportedModeError(AnisoheatError):
    """Requested path does not support the coefficient mode"""


class ConfigError(AnisoheatError):
    """Run configuration could not be used"""


class ConfigParseError(ConfigError):
    """Configuration text is not valid JSON"""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})", {"line": line, "column": column})
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    """Configuration violates a declared constraint"""

    def __init__(self, constraint: str, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"{constraint}: {message}", {**(details or {}), "constraint": constraint})
        self.constraint = constraint


class ReportFileError(AnisoheatError):
    """A report file on disk is malformed"""

    def __init__(self, path: str, reason: str):
        super().__init__(f"Malformed report file {path}: {reason}", {"file": path})
        self.path = path
