"""Forcing ensembles, parabolic cubes and the inequality checks for G"""

from .checks import bmo_check, conjugate, l2_check, lqlp_report, mixed_norm, trend_slope
from .cubes import CubeFamily, ball_volume, bmo_seminorm, oscillation_table
from .ensembles import ForcingEnsemble, ForcingKind

__all__ = [
    'bmo_check', 'conjugate', 'l2_check', 'lqlp_report', 'mixed_norm', 'trend_slope',
    'CubeFamily', 'ball_volume', 'bmo_seminorm', 'oscillation_table',
    'ForcingEnsemble', 'ForcingKind',
]
