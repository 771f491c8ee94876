"""
Defect of u_t = L(t) u + f with L applied through the jump quadrature
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.bernstein.anisotropy import Anisotropy
from src.common.errors import ArgumentError
from src.operators.coefficients import SAMPLE_Y, CoefficientMode, CoefficientSet
from src.operators.grid import FieldKind, GridFunction, TorusGrid, discrete_lp_norm
from src.operators.jump_quadrature import SPECTRAL_TAIL_TOL, jump_multiplier, top_octave_energy

logger = logging.getLogger(__name__)


class OperatorPath:
    """Multipliers of L(t) at the time nodes of a space-time grid"""

    def __init__(self, grid: TorusGrid, a: Anisotropy, coeffs: CoefficientSet):
        grid.check_dims(a.dims)
        coeffs.check_anisotropy(a)
        self.grid = grid
        self.anisotropy = a
        self.coeffs = coeffs
        self._xi_sq = grid.spatial().block_xi_sq()
        self._unit_cache: Dict[int, np.ndarray] = {}
        self._jump_cache: Dict[Tuple[int, bytes], np.ndarray] = {}

    def _block_shape(self, block: int) -> List[int]:
        shape = [1] * self.grid.total_dim
        for axis in self.grid.block_axes(block):
            shape[axis] = self.grid.spatial_shape[axis]
        return shape

    def _unit_jump(self, block: int) -> np.ndarray:
        """Jump multiplier with a = 1: quadrature on 1-D blocks, phi - b0 |xi|^2 otherwise"""
        if block not in self._unit_cache:
            phi = self.anisotropy.phis[block]
            if self.grid.dims[block] == 1:
                axis = self.grid.block_axes(block)[0]
                xi = self.grid.wavenumbers(axis)
                m = jump_multiplier(phi, xi).reshape(self._block_shape(block))
            else:
                xi_sq = self._xi_sq[block]
                m = -(phi.evaluate(xi_sq) - phi.effective_drift * xi_sq)
            self._unit_cache[block] = m
        return self._unit_cache[block]

    def _coefficient_jump(self, block: int, t: float) -> np.ndarray:
        """Jump multiplier with a(t, .), cached by the coefficient's sampled values"""
        a_t = self.coeffs.jump_coefficient(block, t)
        key = (block, np.round(a_t(SAMPLE_Y), 14).tobytes())
        if key not in self._jump_cache:
            axis = self.grid.block_axes(block)[0]
            xi = self.grid.wavenumbers(axis)
            phi = self.anisotropy.phis[block]
            self._jump_cache[key] = jump_multiplier(phi, xi, a_t).reshape(self._block_shape(block))
        return self._jump_cache[key]

    def multiplier(self, t: float) -> np.ndarray:
        """Symbol of L(t): sum_i [-b_i(t) |xi_i|^2 + jump part with a_i(t, .)]"""
        total = np.zeros(self.grid.spatial_shape, dtype=complex)
        for i in range(self.anisotropy.ell):
            total = total - float(self.coeffs.b_at(i, t)) * self._xi_sq[i]
            if self.coeffs.mode == CoefficientMode.TIME_ONLY:
                total = total + float(self.coeffs.a_at(i, t)) * self._unit_jump(i)
            else:
                total = total + self._coefficient_jump(i, t)
        return total


def apply_operator(u: GridFunction, a: Anisotropy, coeffs: CoefficientSet, workers: int = 1) -> GridFunction:
    """L(t_k) u(t_k) on every time node of a space-time function"""
    if u.kind != FieldKind.space_time:
        raise ArgumentError("apply_operator needs a space-time function")
    path = OperatorPath(u.grid, a, coeffs)
    spec = u.spectrum(workers=workers)
    for k, t in enumerate(u.grid.time.nodes):
        spec[k] = spec[k] * path.multiplier(float(t))
    metadata = {}
    tails = [top_octave_energy(u, axis) for axis in range(u.grid.total_dim)]
    if max(tails) > SPECTRAL_TAIL_TOL:
        logger.warning("operator input not band-limited: top-octave energy %.2e", max(tails))
        metadata["accuracy_warning"] = f"top-octave energy {max(tails):.3e} exceeds {SPECTRAL_TAIL_TOL:g}"
    return u.with_spectrum(spec, workers=workers, **metadata)


def residual(u: GridFunction, f: GridFunction, a: Anisotropy, coeffs: Optional[CoefficientSet] = None,
             workers: int = 1) -> float:
    """
    ||u_t - L(t) u - f||_2 / ||f||_2 over the space-time grid

    u_t uses second-order central differences (second-order one-sided at the ends).
    When ||f||_2 = 0 the unnormalized norm is returned.

    Args:
        u: Space-time candidate solution with u(0) = 0
        f: Space-time forcing on the same grid
        a: Anisotropy
        coeffs: Coefficients of either mode (None: a = 1, b = b0)
        workers: FFT workers

    Returns:
        Nonnegative scalar
    """
    if u.kind != FieldKind.space_time or f.kind != FieldKind.space_time or u.grid != f.grid:
        raise ArgumentError("u and f must be space-time functions on the same grid")
    coeffs = coeffs or CoefficientSet.unit(a)
    grid = u.grid
    dt = grid.time.dt
    u_t = np.gradient(u.values, dt, axis=0, edge_order=2) if grid.time.steps >= 2 \
        else np.diff(u.values, axis=0).repeat(2, axis=0) / dt
    defect = u_t - apply_operator(u, a, coeffs, workers=workers).values - f.values
    volume = grid.cell_volume * dt
    norm_defect = discrete_lp_norm(defect, volume, 2.0)
    norm_f = discrete_lp_norm(f.values, volume, 2.0)
    logger.debug("residual: defect %.3e, forcing %.3e", norm_defect, norm_f)
    return norm_defect / norm_f if norm_f > 0.0 else norm_defect
