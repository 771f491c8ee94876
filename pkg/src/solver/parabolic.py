"""
Spectral Duhamel solver for u_t = L(t) u + f, u(0) = 0, with multiplier coefficients
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.bernstein.anisotropy import Anisotropy
from src.common.errors import ArgumentError, UnsupportedModeError
from src.operators.coefficients import CoefficientMode, CoefficientSet
from src.operators.grid import FieldKind, GridFunction, TorusGrid
from src.operators.spectral import symbol

logger = logging.getLogger(__name__)

SERIES_CUTOFF = 1e-3
SERIES_TERMS = 8


@dataclass
class SymbolPath:
    """psi(t_k, xi) on the time nodes and its trapezoid integral Psi(t_k, xi)"""
    nodes: np.ndarray
    psi: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_coefficients(cls, grid: TorusGrid, a: Anisotropy, coeffs: CoefficientSet,
                          nodes: Sequence[float]) -> "SymbolPath":
        """
        psi(t, xi) = sum_i [b_i(t) |xi_i|^2 + a_i(t) (phi_i(|xi_i|^2) - b0_i |xi_i|^2)]

        Args:
            grid: Spatial grid supplying the frequency lattice
            a: Anisotropy
            coeffs: TIME_ONLY coefficients
            nodes: Time nodes

        Returns:
            SymbolPath with psi shaped (len(nodes),) + spatial shape
        """
        if coeffs.mode != CoefficientMode.TIME_ONLY:
            raise UnsupportedModeError("TIME_JUMP coefficients are not Fourier multipliers; use mc_solve",
                                       {"mode": coeffs.mode.value})
        grid.check_dims(a.dims)
        coeffs.check_anisotropy(a)
        nodes = np.asarray(nodes, dtype=float)
        xi_sq = grid.block_xi_sq()
        psi = np.zeros((nodes.size,) + grid.spatial_shape)
        expand = (slice(None),) + (np.newaxis,) * grid.total_dim
        for i, phi in enumerate(a.phis):
            local = xi_sq[i]
            jump = phi.evaluate(local) - coeffs.b0[i] * local
            b_t = np.asarray(coeffs.b_at(i, nodes), dtype=float)[expand]
            a_t = np.asarray(coeffs.a_at(i, nodes), dtype=float)[expand]
            psi = psi + b_t * local + a_t * jump
        return cls(nodes=nodes, psi=psi, cumulative=_trapezoid_cumulative(nodes, psi))

    @classmethod
    def unit(cls, grid: TorusGrid, a: Anisotropy, nodes: Sequence[float]) -> "SymbolPath":
        return cls.from_coefficients(grid, a, CoefficientSet.unit(a), nodes)

    @property
    def increments(self) -> np.ndarray:
        """Psi(t_{k+1}) - Psi(t_k) per slab"""
        return np.diff(self.cumulative, axis=0)


def _trapezoid_cumulative(nodes: np.ndarray, psi: np.ndarray) -> np.ndarray:
    dt = np.diff(nodes).reshape((-1,) + (1,) * (psi.ndim - 1))
    slabs = 0.5 * dt * (psi[1:] + psi[:-1])
    return np.concatenate([np.zeros((1,) + psi.shape[1:]), np.cumsum(slabs, axis=0)], axis=0)


def duhamel_weights(z: np.ndarray):
    """
    Weights of f(t_k), f(t_{k+1}) in int_0^1 e^{-z(1-s)} [(1-s) f_k + s f_{k+1}] ds

    Returns:
        (w_prev, w_next); power series below |z| = 1e-3
    """
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    em1 = -np.expm1(-safe)  # 1 - e^{-z}
    w_prev = (em1 - safe * np.exp(-safe)) / safe ** 2
    w_next = (safe - em1) / safe ** 2
    if np.any(small):
        zs = z[small]
        sp = np.zeros_like(zs)
        sn = np.zeros_like(zs)
        term = np.ones_like(zs)
        for n in range(SERIES_TERMS):
            sp = sp + term / (n + 2)
            sn = sn + term / ((n + 1) * (n + 2))
            term = term * (-zs) / (n + 1)
        w_prev = w_prev.copy()
        w_next = w_next.copy()
        w_prev[small] = sp
        w_next[small] = sn
    return w_prev, w_next


def _check_forcing(f: GridFunction, horizon: Optional[float]):
    if f.kind != FieldKind.space_time:
        raise ArgumentError("forcing must be a space-time function")
    if horizon is not None and not math.isclose(horizon, f.grid.time.end, rel_tol=1e-12):
        raise ArgumentError("horizon does not match the forcing time axis",
                            {"horizon": horizon, "grid_end": f.grid.time.end})


def duhamel(spectrum: np.ndarray, path: SymbolPath) -> np.ndarray:
    """Mode-wise product-trapezoid Duhamel recursion over the time nodes"""
    dt = np.diff(path.nodes)
    out = np.zeros_like(spectrum, dtype=complex)
    increments = path.increments
    for k in range(dt.size):
        z = increments[k]
        w_prev, w_next = duhamel_weights(z)
        out[k + 1] = np.exp(-z) * out[k] + dt[k] * (w_prev * spectrum[k] + w_next * spectrum[k + 1])
    return out


def solve_parabolic(f: GridFunction, a: Anisotropy, coeffs: Optional[CoefficientSet] = None,
                    horizon: Optional[float] = None, initial: Optional[GridFunction] = None,
                    workers: int = 1) -> GridFunction:
    """
    Solve u_t = L(t) u + f on (0, T] with u(0) = 0, one spectral mode at a time

    Exact for time-constant coefficients and forcing linear between nodes,
    second order in the time step otherwise.

    Args:
        f: Space-time forcing on the grid's time nodes (t_0 = start included)
        a: Anisotropy
        coeffs: TIME_ONLY coefficients (None: a = 1, b = b0)
        horizon: Optional T, checked against the grid
        initial: Must be None or identically zero
        workers: FFT workers

    Returns:
        Space-time GridFunction u

    Raises:
        UnsupportedModeError: TIME_JUMP coefficients
        ArgumentError: grid mismatch or nonzero initial data
    """
    _check_forcing(f, horizon)
    if initial is not None and np.any(np.asarray(initial.values) != 0):
        raise ArgumentError("only zero initial data is supported")
    coeffs = coeffs or CoefficientSet.unit(a)
    path = SymbolPath.from_coefficients(f.grid.spatial(), a, coeffs, f.grid.time.nodes)
    spec = duhamel(f.spectrum(workers=workers), path)
    logger.debug("solve_parabolic: %d steps on %r", f.grid.time.steps, f.grid)
    return f.with_spectrum(spec, workers=workers)


def apply_G(f: GridFunction, a: Anisotropy, blocks: Optional[Sequence[int]] = None,
            workers: int = 1) -> GridFunction:
    """
    Gf(t) = (phi . Delta) int_0^t P_{t-s} f(s) ds, mode-wise -psi * (Duhamel integral)

    With `blocks` only those blocks' generators act outside the integral, so G f
    is the sum of G_i f over single blocks.

    Args:
        f: Space-time forcing
        a: Anisotropy
        blocks: Outer generator blocks (None: all)
        workers: FFT workers

    Returns:
        Space-time GridFunction
    """
    _check_forcing(f, None)
    path = SymbolPath.unit(f.grid.spatial(), a, f.grid.time.nodes)
    spec = duhamel(f.spectrum(workers=workers), path)
    outer = path.psi if blocks is None else symbol(f.grid.spatial(), a, blocks)[np.newaxis]
    return f.with_spectrum(-outer * spec, workers=workers)


def observed_order(residuals: Sequence[float], factor: float = 2.0) -> List[float]:
    """log_factor of successive residual ratios under refinement by `factor`"""
    out = []
    for coarse, fine in zip(residuals, residuals[1:]):
        if coarse > 0.0 and fine > 0.0:
            out.append(math.log(coarse / fine) / math.log(factor))
        else:
            out.append(math.inf)
    return out
