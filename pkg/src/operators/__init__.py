"""Periodic grids, spectral symbols, the jump quadrature and multiplier diagnostics"""

from .coefficients import CoefficientMode, CoefficientSet, jump_step
from .grid import BlockAxes, FieldKind, GridFunction, TimeAxis, TorusGrid, discrete_lp_norm
from .jump_quadrature import apply_jump_quadrature, jump_multiplier, top_octave_energy
from .multipliers import (
    DerivativeForm,
    MultiplierDiagnostics,
    coefficient_multiplier_bound,
    mikhlin_marcinkiewicz_diagnostic,
    multiplier_xi_grid,
)
from .spectral import (
    SplitNorms,
    SymbolMode,
    apply_anisotropic_symbol,
    apply_multiplier,
    coordinate_split_norms,
    lp_norm,
    sobolev_norm,
    symbol,
    symbol_multiplier,
)

__all__ = [
    'CoefficientMode', 'CoefficientSet', 'jump_step',
    'BlockAxes', 'FieldKind', 'GridFunction', 'TimeAxis', 'TorusGrid', 'discrete_lp_norm',
    'apply_jump_quadrature', 'jump_multiplier', 'top_octave_energy',
    'DerivativeForm', 'MultiplierDiagnostics', 'coefficient_multiplier_bound',
    'mikhlin_marcinkiewicz_diagnostic', 'multiplier_xi_grid',
    'SplitNorms', 'SymbolMode', 'apply_anisotropic_symbol', 'apply_multiplier',
    'coordinate_split_norms', 'lp_norm', 'sobolev_norm', 'symbol', 'symbol_multiplier',
]
