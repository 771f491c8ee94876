"""
Seeded forcing ensembles that can be re-sampled on any grid
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List

import numpy as np

from src.common.errors import ArgumentError
from src.operators.grid import FieldKind, GridFunction, TorusGrid

logger = logging.getLogger(__name__)


class ForcingKind(str, Enum):
    """Shape of the ensemble members"""
    BAND_LIMITED = "band_limited"
    SIGN = "sign"


@dataclass(frozen=True)
class _Term:
    amplitude: float
    time_mode: int
    space_modes: np.ndarray
    phase: float


@dataclass(frozen=True)
class ForcingEnsemble:
    """
    Random trigonometric forcings, member i drawn from its own seeded stream

    BAND_LIMITED members are sin(pi t / T) times a random trigonometric polynomial,
    so they vanish at t = 0. SIGN members are tanh(sharpness h / rms h) of such a
    polynomial h, nearly +-1 valued, scaled so that max |f| = 1 on the sampling grid.
    """
    kind: ForcingKind = ForcingKind.BAND_LIMITED
    size: int = 20
    seed: int = 0
    max_mode: int = 3
    time_modes: int = 2
    terms: int = 6
    sharpness: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ForcingKind(self.kind))
        if self.size < 1 or self.terms < 1 or self.max_mode < 0 or self.time_modes < 0:
            raise ArgumentError("ensemble needs size, terms >= 1 and nonnegative modes",
                                {"size": self.size, "terms": self.terms})

    def __len__(self) -> int:
        return self.size

    def _terms(self, index: int, total_dim: int) -> List[_Term]:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(index),)))
        out = []
        for _ in range(self.terms):
            out.append(_Term(amplitude=float(rng.normal()),
                             time_mode=int(rng.integers(0, self.time_modes + 1)),
                             space_modes=rng.integers(-self.max_mode, self.max_mode + 1, size=total_dim),
                             phase=float(rng.uniform(0.0, 2.0 * math.pi))))
        return out

    def _polynomial(self, terms: List[_Term], grid: TorusGrid) -> np.ndarray:
        time = grid.time
        s = ((time.nodes - time.start) / time.horizon).reshape((-1,) + (1,) * grid.total_dim)
        mesh = grid.spatial().mesh()
        scales = [2.0 * math.pi / grid.blocks[grid.axis_blocks[k]].extent for k in range(grid.total_dim)]
        values = np.zeros(grid.shape)
        for term in terms:
            arg = 2.0 * math.pi * term.time_mode * s + term.phase
            for k, x in enumerate(mesh):
                arg = arg + term.space_modes[k] * scales[k] * x
            values = values + term.amplitude * np.cos(arg)
        return values

    def member(self, index: int, grid: TorusGrid) -> GridFunction:
        """Member `index` sampled on a space-time grid"""
        if not 0 <= index < self.size:
            raise ArgumentError("member index out of range", {"index": index, "size": self.size})
        if grid.time is None:
            raise ArgumentError("forcings are sampled on space-time grids")
        terms = self._terms(index, grid.total_dim)
        h = self._polynomial(terms, grid)
        if self.kind == ForcingKind.BAND_LIMITED:
            envelope = np.sin(math.pi * (grid.time.nodes - grid.time.start) / grid.time.horizon)
            values = envelope.reshape((-1,) + (1,) * grid.total_dim) * h
        else:
            rms = math.sqrt(0.5 * sum(t.amplitude ** 2 for t in terms)) or 1.0
            values = np.tanh(self.sharpness * h / rms)
            peak = float(np.max(np.abs(values)))
            if peak > 0.0:
                values = values / peak
        return GridFunction(grid, values, FieldKind.space_time, {"member": index, "kind": self.kind.value})

    def members(self, grid: TorusGrid) -> Iterator[GridFunction]:
        for index in range(self.size):
            yield self.member(index, grid)
