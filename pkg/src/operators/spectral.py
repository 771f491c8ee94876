"""
Spectral application of the anisotropic symbol sum_i phi_i(|xi_i|^2)
"""
import logging
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.bernstein.anisotropy import Anisotropy
from src.common.errors import ArgumentError
from src.operators.grid import GridFunction, TorusGrid, discrete_lp_norm

logger = logging.getLogger(__name__)


class SymbolMode(str, Enum):
    """GENERATOR: (-psi)^k, k = 0, 1, 2, ...; BESSEL: (1 + psi)^{gamma/2}"""
    GENERATOR = "generator"
    BESSEL = "bessel"


class SplitNorms(BaseModel):
    """Full anisotropic norm against the sum of per-block norms"""
    full: float = Field(..., ge=0.0, description="||(phi . Delta) u||_p")
    split: float = Field(..., ge=0.0, description="sum_i ||phi_i(Delta_i) u||_p")

    @property
    def ratio(self) -> float:
        return self.split / self.full if self.full > 0.0 else float("nan")


def block_symbols(grid: TorusGrid, a: Anisotropy) -> List[np.ndarray]:
    """phi_i(|xi_i|^2) per block, broadcastable over the spatial spectrum"""
    grid.check_dims(a.dims)
    return [phi.evaluate(xi_sq) for phi, xi_sq in zip(a.phis, grid.block_xi_sq())]


def symbol(grid: TorusGrid, a: Anisotropy, blocks: Optional[Sequence[int]] = None) -> np.ndarray:
    """psi = sum_i phi_i(|xi_i|^2) over the selected blocks, full spatial shape"""
    parts = block_symbols(grid, a)
    chosen = range(len(parts)) if blocks is None else blocks
    total = np.zeros(grid.spatial_shape)
    for i in chosen:
        total = total + parts[i]
    return total


def symbol_multiplier(grid: TorusGrid, a: Anisotropy, power: float, mode: SymbolMode,
                      blocks: Optional[Sequence[int]] = None) -> np.ndarray:
    psi = symbol(grid, a, blocks)
    mode = SymbolMode(mode)
    if mode == SymbolMode.GENERATOR:
        if power < 0 or power != int(power):
            raise ArgumentError("GENERATOR powers are nonnegative integers", {"power": power})
        return (-psi) ** int(power)
    return (1.0 + psi) ** (0.5 * power)


def apply_multiplier(u: GridFunction, multiplier: np.ndarray, workers: int = 1, **metadata) -> GridFunction:
    """u -> F^{-1}(multiplier * F u) over the spatial axes"""
    spec = u.spectrum(workers=workers)
    if u.kind.value == "space_time":
        multiplier = multiplier[np.newaxis, ...]
    return u.with_spectrum(spec * multiplier, workers=workers, **metadata)


def apply_anisotropic_symbol(u: GridFunction, a: Anisotropy, power: float = 1,
                             mode: SymbolMode = SymbolMode.GENERATOR,
                             blocks: Optional[Sequence[int]] = None, workers: int = 1) -> GridFunction:
    """
    Multiply every spatial mode by (-psi)^power (GENERATOR) or (1 + psi)^{power/2} (BESSEL)

    Space-time inputs are transformed slice by slice in time.

    Args:
        u: Grid function
        a: Anisotropy matching the grid blocks
        power: Integer for GENERATOR, any real for BESSEL
        mode: SymbolMode
        blocks: Restrict psi to these blocks (None: all)
        workers: FFT workers

    Returns:
        GridFunction on the same grid
    """
    multiplier = symbol_multiplier(u.grid, a, power, mode, blocks)
    return apply_multiplier(u, multiplier, workers=workers)


def lp_norm(u: GridFunction, p: float) -> float:
    return discrete_lp_norm(u.values, u.grid.cell_volume, p)


def sobolev_norm(u: GridFunction, a: Anisotropy, gamma: float, p: float) -> float:
    """Discrete L_p norm of (1 + psi)^{gamma/2} u on the torus"""
    if not (1.0 < p < np.inf):
        raise ArgumentError("p must lie in (1, inf)", {"p": p})
    if gamma == 0:
        return lp_norm(u, p)
    return lp_norm(apply_anisotropic_symbol(u, a, gamma, SymbolMode.BESSEL), p)


def coordinate_split_norms(u: GridFunction, a: Anisotropy, p: float) -> SplitNorms:
    """||(phi . Delta) u||_p against sum_i ||phi_i(Delta_i) u||_p"""
    full = lp_norm(apply_anisotropic_symbol(u, a, 1, SymbolMode.GENERATOR), p)
    split = sum(lp_norm(apply_anisotropic_symbol(u, a, 1, SymbolMode.GENERATOR, blocks=[i]), p)
                for i in range(a.ell))
    return SplitNorms(full=full, split=split)
