"""
Periodic grids over R^{d_1} x ... x R^{d_l}, optionally with a time axis

Spatial axes are ordered block by block; when a time axis is present it is
the leading array axis. Frequencies on an axis of period L with n points are
2 pi * fftfreq(n, L/n).
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft

from src.common.errors import ArgumentError

logger = logging.getLogger(__name__)

MIN_POINTS = 2 ** 4
MAX_POINTS = 2 ** 12


class FieldKind(str, Enum):
    """Layout of a GridFunction's values"""
    space = "space"
    space_time = "space_time"


@dataclass(frozen=True)
class BlockAxes:
    """One coordinate block: dim axes sharing period `extent` and `count` points"""
    extent: float
    count: int
    dim: int = 1

    def __post_init__(self):
        if not (self.extent > 0.0) or not math.isfinite(self.extent):
            raise ArgumentError("block extent must be positive", {"extent": self.extent})
        if self.count < MIN_POINTS or self.count > MAX_POINTS or self.count & (self.count - 1):
            raise ArgumentError("point count must be a power of two in [16, 4096]", {"count": self.count})
        if self.dim not in (1, 2, 3):
            raise ArgumentError("block dimension must be 1, 2 or 3", {"dim": self.dim})

    @property
    def spacing(self) -> float:
        return self.extent / self.count


@dataclass(frozen=True)
class TimeAxis:
    """Uniform nodes t_k = start + k * horizon / steps, k = 0..steps"""
    horizon: float
    steps: int
    start: float = 0.0

    def __post_init__(self):
        if not (self.horizon > 0.0) or self.steps < 1:
            raise ArgumentError("time axis needs horizon > 0 and steps >= 1",
                                {"horizon": self.horizon, "steps": self.steps})

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return self.start + self.dt * np.arange(self.steps + 1)

    @property
    def end(self) -> float:
        return self.start + self.horizon


class TorusGrid:
    """Product torus with per-block periods and point counts"""

    def __init__(self, blocks: Sequence[BlockAxes], time: Optional[TimeAxis] = None):
        if not blocks:
            raise ArgumentError("a grid needs at least one block")
        self.blocks: Tuple[BlockAxes, ...] = tuple(blocks)
        self.time = time

    def __repr__(self) -> str:
        parts = ", ".join(f"{b.dim}x{b.count}@{b.extent:g}" for b in self.blocks)
        t = f", T={self.time.horizon:g}/{self.time.steps}" if self.time else ""
        return f"TorusGrid({parts}{t})"

    def __eq__(self, other) -> bool:
        return isinstance(other, TorusGrid) and self.blocks == other.blocks and self.time == other.time

    def __hash__(self) -> int:
        return hash((self.blocks, self.time))

    # ========== SHAPE ==========

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(b.dim for b in self.blocks)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def axis_blocks(self) -> List[int]:
        """Block index of every spatial axis"""
        return [i for i, b in enumerate(self.blocks) for _ in range(b.dim)]

    @property
    def spatial_shape(self) -> Tuple[int, ...]:
        return tuple(b.count for b in self.blocks for _ in range(b.dim))

    @property
    def shape(self) -> Tuple[int, ...]:
        if self.time is None:
            return self.spatial_shape
        return (self.time.steps + 1,) + self.spatial_shape

    @property
    def cell_volume(self) -> float:
        return float(np.prod([b.spacing ** b.dim for b in self.blocks]))

    @property
    def volume(self) -> float:
        return float(np.prod([b.extent ** b.dim for b in self.blocks]))

    @property
    def axis_names(self) -> List[str]:
        names = [f"x{i + 1}_{j + 1}" for i, b in enumerate(self.blocks) for j in range(b.dim)]
        return (["t"] + names) if self.time is not None else names

    def block_axes(self, block: int) -> List[int]:
        """Spatial axis indices (0-based, excluding time) of a block"""
        start = sum(self.dims[:block])
        return list(range(start, start + self.dims[block]))

    def spatial_axes(self, kind: "FieldKind") -> Tuple[int, ...]:
        offset = 1 if kind == FieldKind.space_time else 0
        return tuple(range(offset, offset + self.total_dim))

    # ========== COORDINATES ==========

    def coordinates(self, axis: int) -> np.ndarray:
        block = self.blocks[self.axis_blocks[axis]]
        return block.spacing * np.arange(block.count)

    def mesh(self) -> List[np.ndarray]:
        """Broadcastable coordinate arrays over the spatial shape"""
        return list(np.meshgrid(*[self.coordinates(k) for k in range(self.total_dim)],
                                indexing="ij", sparse=True))

    def wavenumbers(self, axis: int) -> np.ndarray:
        block = self.blocks[self.axis_blocks[axis]]
        return 2.0 * math.pi * sp_fft.fftfreq(block.count, d=block.spacing)

    def wave_mesh(self) -> List[np.ndarray]:
        return list(np.meshgrid(*[self.wavenumbers(k) for k in range(self.total_dim)],
                                indexing="ij", sparse=True))

    def block_xi_sq(self) -> List[np.ndarray]:
        """|xi_i|^2 per block, broadcastable over the spatial shape"""
        mesh = self.wave_mesh()
        return [sum(mesh[k] ** 2 for k in self.block_axes(i)) for i in range(len(self.blocks))]

    def nyquist(self, block: int) -> float:
        b = self.blocks[block]
        return math.pi / b.spacing

    # ========== DERIVED GRIDS ==========

    def spatial(self) -> "TorusGrid":
        return TorusGrid(self.blocks, None)

    def with_time(self, time: Optional[TimeAxis]) -> "TorusGrid":
        return TorusGrid(self.blocks, time)

    def refined(self, space: int = 2, time: int = 2) -> "TorusGrid":
        """Same domain with point counts multiplied by `space` and time steps by `time`"""
        blocks = [BlockAxes(b.extent, b.count * space, b.dim) for b in self.blocks]
        t = None
        if self.time is not None:
            t = TimeAxis(self.time.horizon, self.time.steps * time, self.time.start)
        return TorusGrid(blocks, t)

    def check_dims(self, dims: Sequence[int]):
        if tuple(dims) != self.dims:
            raise ArgumentError("grid blocks do not match the anisotropy",
                                {"grid": list(self.dims), "anisotropy": list(dims)})

    def sidecar(self) -> Dict[str, Any]:
        """Axis description written next to binary grid files"""
        extents, counts = [], []
        if self.time is not None:
            extents.append([self.time.start, self.time.end])
            counts.append(self.time.steps + 1)
        for i in range(self.total_dim):
            block = self.blocks[self.axis_blocks[i]]
            extents.append([0.0, block.extent])
            counts.append(block.count)
        return {
            "axis_names": self.axis_names,
            "extents": extents,
            "counts": counts,
            "periodic": ([False] if self.time is not None else []) + [True] * self.total_dim,
            "block_dims": list(self.dims),
        }


@dataclass
class GridFunction:
    """Values sampled on a TorusGrid"""
    grid: TorusGrid
    values: np.ndarray
    kind: FieldKind = FieldKind.space
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = FieldKind(self.kind)
        self.values = np.asarray(self.values)
        if self.kind == FieldKind.space_time and self.grid.time is None:
            raise ArgumentError("space-time values need a grid with a time axis")
        expected = self.grid.shape if self.kind == FieldKind.space_time else self.grid.spatial_shape
        if self.values.shape != expected:
            raise ArgumentError("value shape does not match the grid",
                                {"values": list(self.values.shape), "grid": list(expected)})

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    @property
    def axes(self) -> Tuple[int, ...]:
        return self.grid.spatial_axes(self.kind)

    def spectrum(self, workers: int = 1) -> np.ndarray:
        return sp_fft.fftn(self.values, axes=self.axes, workers=workers)

    def with_spectrum(self, spectrum: np.ndarray, real: Optional[bool] = None,
                      workers: int = 1, **metadata: Any) -> "GridFunction":
        """New function on the same grid from spatial Fourier coefficients"""
        values = sp_fft.ifftn(spectrum, axes=self.axes, workers=workers)
        keep_real = self.is_real if real is None else real
        if keep_real:
            values = values.real
        return GridFunction(self.grid, values, self.kind, {**self.metadata, **metadata})

    def time_slice(self, k: int) -> "GridFunction":
        if self.kind != FieldKind.space_time:
            raise ArgumentError("time_slice needs a space-time function")
        return GridFunction(self.grid.spatial(), self.values[k], FieldKind.space)

    def conjugate_symmetry_defect(self) -> float:
        """max |F(xi) - conj F(-xi)| / max |F| over the spatial spectrum"""
        spec = self.spectrum()
        flipped = np.conj(spec)
        for axis in self.axes:
            flipped = np.roll(np.flip(flipped, axis=axis), 1, axis=axis)
        scale = max(float(np.max(np.abs(spec))), np.finfo(float).tiny)
        return float(np.max(np.abs(spec - flipped)) / scale)


def discrete_lp_norm(values: np.ndarray, cell_volume: float, p: float) -> float:
    """(sum |v|^p * cell volume)^{1/p}; p = inf gives the max norm"""
    magnitude = np.abs(values)
    if math.isinf(p):
        return float(magnitude.max(initial=0.0))
    return float((np.sum(magnitude ** p) * cell_volume) ** (1.0 / p))
