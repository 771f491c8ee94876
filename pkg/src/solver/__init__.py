"""Spectral parabolic and elliptic solvers and the quadrature residual"""

from .elliptic import laplace_weighted_parabolic, solve_elliptic
from .parabolic import SymbolPath, apply_G, duhamel, duhamel_weights, observed_order, solve_parabolic
from .residual import OperatorPath, apply_operator, residual

__all__ = [
    'laplace_weighted_parabolic', 'solve_elliptic',
    'SymbolPath', 'apply_G', 'duhamel', 'duhamel_weights', 'observed_order', 'solve_parabolic',
    'OperatorPath', 'apply_operator', 'residual',
]
