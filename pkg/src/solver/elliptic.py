"""
Resolvent equation L u - lambda u = f for time-constant multiplier coefficients
"""
import logging
from typing import Optional

import numpy as np
from scipy import integrate

from src.bernstein.anisotropy import Anisotropy
from src.common.errors import ArgumentError
from src.operators.coefficients import CoefficientSet
from src.operators.grid import FieldKind, GridFunction, TimeAxis
from src.solver.parabolic import SymbolPath, solve_parabolic

logger = logging.getLogger(__name__)


def _check_lambda(lam: float):
    if not (lam > 0.0) or not np.isfinite(lam):
        raise ArgumentError("lambda must be positive", {"lambda": lam})


def solve_elliptic(f: GridFunction, a: Anisotropy, lam: float,
                   coeffs: Optional[CoefficientSet] = None, workers: int = 1) -> GridFunction:
    """
    u_hat = -f_hat / (psi + lambda)

    Args:
        f: Space-only forcing
        a: Anisotropy
        lam: lambda > 0
        coeffs: Time-constant TIME_ONLY coefficients (None: a = 1, b = b0)
        workers: FFT workers

    Returns:
        Space-only GridFunction u
    """
    _check_lambda(lam)
    if f.kind != FieldKind.space:
        raise ArgumentError("elliptic forcing must be a space-only function")
    coeffs = coeffs or CoefficientSet.unit(a)
    if not coeffs.is_time_constant:
        raise ArgumentError("the resolvent needs time-constant coefficients")
    path = SymbolPath.from_coefficients(f.grid, a, coeffs, [coeffs.time_grid[0]])
    spec = f.spectrum(workers=workers)
    return f.with_spectrum(-spec / (path.psi[0] + lam), workers=workers)


def laplace_weighted_parabolic(f: GridFunction, a: Anisotropy, lam: float, horizon: float, steps: int,
                               coeffs: Optional[CoefficientSet] = None, workers: int = 1) -> GridFunction:
    """
    lambda int_0^T e^{-lambda t} v(t) dt where v solves v_t = L v - f, v(0) = 0

    Tends to solve_elliptic(f) as T grows; the gap is e^{-(psi + lambda) T} per mode
    plus the Simpson error of the time integral.
    """
    _check_lambda(lam)
    grid = f.grid.with_time(TimeAxis(horizon, steps))
    forcing = GridFunction(grid, np.broadcast_to(-np.asarray(f.values), grid.shape).copy(), FieldKind.space_time)
    v = solve_parabolic(forcing, a, coeffs, workers=workers)
    nodes = grid.time.nodes
    weights = np.exp(-lam * nodes).reshape((-1,) + (1,) * grid.total_dim)
    values = lam * integrate.simpson(weights * v.values, x=nodes, axis=0)
    logger.debug("laplace_weighted_parabolic: lambda=%g, T=%g, %d steps", lam, horizon, steps)
    return GridFunction(f.grid, values)
