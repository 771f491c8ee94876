"""Subordinators, IASBMs, additive processes and the Monte Carlo solution"""

from .monte_carlo import (
    Interpolation,
    MonteCarloSolution,
    char_function_check,
    laplace_check,
    mc_solve,
    periodic_interpolator,
)
from .processes import AdditiveTriplet, PathEnsemble, RemainderJumps, sample_additive, sample_iasbm, sample_subordinator
from .rng import CHUNK_SIZE, STREAM_SCHEME, chunks, stream
from .subordinators import JumpSampler, positive_stable, subordinator_increments

__all__ = [
    'Interpolation', 'MonteCarloSolution', 'char_function_check', 'laplace_check', 'mc_solve',
    'periodic_interpolator',
    'AdditiveTriplet', 'PathEnsemble', 'RemainderJumps', 'sample_additive', 'sample_iasbm', 'sample_subordinator',
    'CHUNK_SIZE', 'STREAM_SCHEME', 'chunks', 'stream',
    'JumpSampler', 'positive_stable', 'subordinator_increments',
]
