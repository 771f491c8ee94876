"""
Anisotropic parabolic cubes Q_b(t, x) = (t - b, t + b) x prod_i B(x_i, kappa_i(b)) and mean oscillations
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.bernstein.anisotropy import Anisotropy
from src.bernstein.functions import kappa
from src.common.errors import ArgumentError
from src.operators.grid import FieldKind, GridFunction, TorusGrid

logger = logging.getLogger(__name__)

# grid-node centers: (time index, spatial indices)
Center = Tuple[int, ...]


def ball_volume(dim: int, radius: float) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0) * radius ** dim


@dataclass
class CubeFamily:
    """Cubes of every b-value around every center, centers snapped to grid nodes"""
    anisotropy: Anisotropy
    b_values: np.ndarray
    centers: List[Center]
    radii: np.ndarray = field(init=False)

    def __post_init__(self):
        self.b_values = np.asarray(self.b_values, dtype=float)
        if self.b_values.ndim != 1 or self.b_values.size == 0 or np.any(self.b_values <= 0.0):
            raise ArgumentError("b-values must be a nonempty list of positive scalars")
        if not self.centers:
            raise ArgumentError("a cube family needs at least one center")
        self.centers = [tuple(int(v) for v in c) for c in self.centers]
        # kappa_i(b) per b-value and block
        self.radii = np.array([[kappa(phi, float(b)) for phi in self.anisotropy.phis] for b in self.b_values])

    @classmethod
    def log_spaced(cls, a: Anisotropy, grid: TorusGrid, b_min: float, b_max: float, n_b: int = 12,
                   n_centers: int = 64, seed: int = 0) -> "CubeFamily":
        """
        Log-spaced b-values and seeded random grid-node centers

        Centers are drawn in the middle of the time axis, at least b_max away from
        both ends when the axis allows it.
        """
        if grid.time is None:
            raise ArgumentError("cubes live on space-time grids")
        grid.check_dims(a.dims)
        if not (0.0 < b_min < b_max):
            raise ArgumentError("need 0 < b_min < b_max", {"b_min": b_min, "b_max": b_max})
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(7,)))
        steps = grid.time.steps
        margin = min(int(math.ceil(b_max / grid.time.dt)), steps // 2)
        centers = []
        for _ in range(n_centers):
            k = int(rng.integers(margin, steps - margin + 1))
            spatial = [int(rng.integers(0, n)) for n in grid.spatial_shape]
            centers.append((k, *spatial))
        return cls(a, np.geomspace(b_min, b_max, n_b), centers)

    @property
    def decades(self) -> float:
        return float(math.log10(self.b_values[-1] / self.b_values[0]))

    def measure(self, b: float) -> float:
        """|Q_b| = 2 b prod_i vol(B_{kappa_i(b)})"""
        radii = [kappa(phi, b) for phi in self.anisotropy.phis]
        return 2.0 * b * float(np.prod([ball_volume(d, r) for d, r in zip(self.anisotropy.dims, radii)]))

    def resolved(self, grid: TorusGrid) -> np.ndarray:
        """
        Per b-value flag: the cube spans at least one time step and one cell per block

        A cube below the grid resolution degenerates to its center node and
        carries no oscillation.
        """
        half = np.ceil(self.b_values / grid.time.dt) - 1
        spacings = np.array([blk.spacing for blk in grid.blocks])
        reach = np.floor(self.radii / spacings)
        return (half >= 1) & np.all(reach >= 1, axis=1)

    def translated(self, shift: Sequence[int]) -> "CubeFamily":
        """Same cubes with centers moved by whole grid cells"""
        shift = tuple(int(s) for s in shift)
        centers = [tuple(c + s for c, s in zip(center, shift)) for center in self.centers]
        return CubeFamily(self.anisotropy, self.b_values, centers)


def _cube_values(values: np.ndarray, grid: TorusGrid, center: Center, b: float,
                 radii: np.ndarray) -> Optional[np.ndarray]:
    """Grid values inside one cube, None when the cube leaves the domain"""
    steps = grid.time.steps
    half = int(math.ceil(b / grid.time.dt)) - 1  # |k - k0| dt < b
    k0 = center[0]
    if k0 - half < 0 or k0 + half > steps:
        return None
    index = [np.arange(k0 - half, k0 + half + 1)]
    mask = np.ones(2 * half + 1, dtype=bool).reshape((-1,) + (1,) * grid.total_dim)
    for block in range(len(grid.blocks)):
        spacing = grid.blocks[block].spacing
        count = grid.blocks[block].count
        reach = int(math.floor(radii[block] / spacing))
        if 2 * reach + 1 > count:
            return None
        offsets = np.arange(-reach, reach + 1)
        dist_sq = 0.0
        for axis in grid.block_axes(block):
            index.append((center[1 + axis] + offsets) % count)
            shape = [1] * (grid.total_dim + 1)
            shape[1 + axis] = offsets.size
            dist_sq = dist_sq + (offsets * spacing).reshape(shape) ** 2
        mask = mask & (dist_sq < radii[block] ** 2)
    box = values[np.ix_(*index)]
    return box[np.broadcast_to(mask, box.shape)]


def oscillation_table(g: GridFunction, cubes: CubeFamily) -> pd.DataFrame:
    """
    Mean oscillation of g over every cube of the family

    Returns:
        DataFrame with columns b, center, oscillation, points; attrs["skipped"]
        counts cubes that leave the domain, attrs["unresolved"] lists the b-values
        whose cubes fall below the grid resolution
    """
    if g.kind != FieldKind.space_time:
        raise ArgumentError("mean oscillations need a space-time function")
    g.grid.check_dims(cubes.anisotropy.dims)
    values = np.asarray(g.values)
    resolved = cubes.resolved(g.grid)
    unresolved = [float(b) for b, ok in zip(cubes.b_values, resolved) if not ok]
    rows, skipped = [], 0
    for j, b in enumerate(cubes.b_values):
        if not resolved[j]:
            continue
        for center in cubes.centers:
            inside = _cube_values(values, g.grid, center, float(b), cubes.radii[j])
            if inside is None:
                skipped += 1
                continue
            oscillation = float(np.mean(np.abs(inside - inside.mean())))
            rows.append({"b": float(b), "center": str(center), "oscillation": oscillation,
                         "points": int(inside.size)})
    table = pd.DataFrame(rows, columns=["b", "center", "oscillation", "points"])
    table.attrs["skipped"] = skipped
    table.attrs["unresolved"] = unresolved
    if unresolved:
        logger.warning("%d of %d b-values below the grid resolution: %s",
                       len(unresolved), cubes.b_values.size, ", ".join(f"{b:.4g}" for b in unresolved))
    if skipped:
        logger.warning("skipped %d of %d cubes outside the grid domain",
                       skipped, cubes.b_values.size * len(cubes.centers))
    return table


def bmo_seminorm(g: GridFunction, cubes: CubeFamily) -> float:
    """max over the family of (1/|Q|) int_Q |g - g_Q| by Riemann sums"""
    table = oscillation_table(g, cubes)
    return float(table["oscillation"].max()) if len(table) else 0.0
