"""Shared plumbing: errors, reports, settings and the ordered worker pool"""

__version__ = "1.0.0"

from .errors import (
    AccuracyError,
    AnisoheatError,
    ArgumentError,
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    DomainError,
    IntegrabilityError,
    RangeError,
    ReportFileError,
    UnsupportedModeError,
)
from .parallel import ordered_map
from .report import EstimateReport, RatioSample, relative_delta
from .settings import Settings, load_settings

__all__ = [
    '__version__',
    'AccuracyError', 'AnisoheatError', 'ArgumentError', 'ConfigError', 'ConfigParseError',
    'ConfigValidationError', 'DomainError', 'IntegrabilityError', 'RangeError',
    'ReportFileError', 'UnsupportedModeError',
    'ordered_map', 'EstimateReport', 'RatioSample', 'relative_delta', 'Settings', 'load_settings',
]
