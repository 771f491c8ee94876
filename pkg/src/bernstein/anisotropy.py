"""
Anisotropy (l, d, phi): block structure of R^d and the anisotropic symbol
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.bernstein.functions import BernsteinFunction
from src.common.errors import ArgumentError

SUPPORTED_BLOCK_DIMS = (1, 2, 3)


@dataclass(frozen=True)
class Anisotropy:
    """Blocks x = (x_1, ..., x_l), x_i in R^{d_i}, each driven by its own phi_i"""
    dims: Tuple[int, ...]
    phis: Tuple[BernsteinFunction, ...]

    def __init__(self, dims: Sequence[int], phis: Sequence[BernsteinFunction], ell: Optional[int] = None):
        """
        Args:
            dims: Block dimensions d_1..d_l, each in {1, 2, 3}
            phis: One Bernstein function per block
            ell: Optional declared block count, checked against dims
        """
        dims = tuple(int(d) for d in dims)
        phis = tuple(phis)
        if not dims:
            raise ArgumentError("anisotropy needs at least one block")
        if len(dims) != len(phis):
            raise ArgumentError("dims and phis must have the same length",
                                {"dims": len(dims), "phis": len(phis)})
        if ell is not None and ell != len(dims):
            raise ArgumentError("declared ell does not match the number of blocks",
                                {"ell": ell, "blocks": len(dims)})
        bad = [d for d in dims if d not in SUPPORTED_BLOCK_DIMS]
        if bad:
            raise ArgumentError("block dimensions must lie in {1, 2, 3}", {"dims": list(dims)})
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "phis", phis)

    @property
    def ell(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def effective_drifts(self) -> Tuple[float, ...]:
        """Reference drifts b_0i (coefficient of |xi_i|^2 in phi_i)"""
        return tuple(phi.effective_drift for phi in self.phis)

    def block_slices(self) -> List[slice]:
        """Coordinate ranges of each block inside a flat R^d vector"""
        out, start = [], 0
        for d in self.dims:
            out.append(slice(start, start + d))
            start += d
        return out

    def block_symbols(self, xi_sq: Sequence[np.ndarray]) -> List[np.ndarray]:
        """phi_i(|xi_i|^2) for each block"""
        if len(xi_sq) != self.ell:
            raise ArgumentError("one |xi_i|^2 array per block expected")
        return [phi.evaluate(x) for phi, x in zip(self.phis, xi_sq)]

    def symbol(self, xi_sq: Sequence[np.ndarray]) -> np.ndarray:
        """sum_i phi_i(|xi_i|^2), broadcast over the inputs"""
        parts = self.block_symbols(xi_sq)
        total = parts[0]
        for part in parts[1:]:
            total = total + part
        return total

    def symbol_at(self, xi: Sequence[float]) -> float:
        """Symbol at one frequency vector in R^d"""
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.total_dim,):
            raise ArgumentError("frequency vector has the wrong dimension",
                                {"expected": self.total_dim, "got": list(xi.shape)})
        return float(sum(phi.evaluate(np.dot(xi[s], xi[s]))
                         for phi, s in zip(self.phis, self.block_slices())))

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "Anisotropy":
        phis = [BernsteinFunction.from_record(r) for r in record["phis"]]
        return cls(record["dims"], phis, ell=record.get("ell"))

    def to_record(self) -> Dict[str, Any]:
        return {"ell": self.ell, "dims": list(self.dims), "phis": [p.to_record() for p in self.phis]}
