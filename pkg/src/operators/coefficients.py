"""
Time-measurable coefficients a_i, b_i of the anisotropic operator

b_i(t) is sampled on a time grid and must lie in [c1 b0_i, b0_i / c1].
a_i is either TIME_ONLY (time-grid samples in [c1, 1/c1]) or TIME_JUMP,
a callable a_i(t, y) with the same range, allowed on 1-D blocks only.
"""
import logging
import math
from enum import Enum
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from src.bernstein.anisotropy import Anisotropy
from src.common.errors import ArgumentError

logger = logging.getLogger(__name__)

RANGE_SLACK = 1e-12
# sample points used to range-check TIME_JUMP callables
SAMPLE_Y = np.concatenate([-np.geomspace(1e-4, 1e3, 32)[::-1], np.geomspace(1e-4, 1e3, 32)])

JumpCoefficient = Callable[[float, np.ndarray], np.ndarray]


class CoefficientMode(str, Enum):
    """How the jump coefficient a_i depends on its arguments"""
    TIME_ONLY = "time_only"
    TIME_JUMP = "time_jump"


class CoefficientSet:
    """Coefficients (c1, b0, b_i(t), a_i) on a shared time grid"""

    def __init__(
        self,
        c1: float,
        b0: Sequence[float],
        time_grid: Sequence[float],
        b: Sequence[Sequence[float]],
        a: Sequence[Union[Sequence[float], JumpCoefficient]],
        mode: CoefficientMode = CoefficientMode.TIME_ONLY,
    ):
        """
        Args:
            c1: Ellipticity constant in (0, 1]
            b0: Reference drifts b0_i (the effective drifts of phi_i)
            time_grid: Increasing sample times
            b: Per-block samples of b_i on time_grid
            a: Per-block samples (TIME_ONLY) or callables a_i(t, y) (TIME_JUMP)
            mode: Coefficient mode

        Raises:
            ArgumentError: naming the first violated constraint in details["constraint"]
        """
        self.mode = CoefficientMode(mode)
        self.c1 = float(c1)
        if not (0.0 < self.c1 <= 1.0):
            raise ArgumentError("c1 must lie in (0, 1]", {"constraint": "0 < c1 <= 1", "c1": c1})
        self.b0 = np.asarray(b0, dtype=float)
        if np.any(self.b0 < 0.0):
            raise ArgumentError("reference drifts must be nonnegative", {"constraint": "b0_i >= 0"})
        self.time_grid = np.asarray(time_grid, dtype=float)
        if self.time_grid.ndim != 1 or self.time_grid.size < 1 or np.any(np.diff(self.time_grid) <= 0):
            raise ArgumentError("coefficient time grid must be increasing", {"constraint": "time grid"})
        ell = self.b0.size
        if len(b) != ell or len(a) != ell:
            raise ArgumentError("one a_i and one b_i per block",
                                {"constraint": "block count", "b0": ell, "b": len(b), "a": len(a)})

        self.b = [np.asarray(bi, dtype=float) for bi in b]
        for i, bi in enumerate(self.b):
            self._check_b(i, bi)

        if self.mode == CoefficientMode.TIME_ONLY:
            self.a: List = [np.asarray(ai, dtype=float) for ai in a]
            for i, ai in enumerate(self.a):
                if ai.shape != self.time_grid.shape:
                    raise ArgumentError("a_i samples must match the time grid",
                                        {"constraint": "sample count", "block": i})
                self._check_range(i, ai, "c1 <= a_i <= 1/c1")
        else:
            self.a = list(a)
            for i, ai in enumerate(self.a):
                if not callable(ai):
                    raise ArgumentError("TIME_JUMP coefficients must be callables a(t, y)",
                                        {"constraint": "callable", "block": i})
                for t in self.time_grid:
                    self._check_range(i, np.asarray(ai(float(t), SAMPLE_Y), dtype=float),
                                      "c1 <= a_i(t, y) <= 1/c1")

    def __repr__(self) -> str:
        return f"CoefficientSet(mode={self.mode.value}, c1={self.c1:g}, b0={self.b0.tolist()})"

    def _check_b(self, i: int, bi: np.ndarray):
        if bi.shape != self.time_grid.shape:
            raise ArgumentError("b_i samples must match the time grid",
                                {"constraint": "sample count", "block": i})
        if self.b0[i] == 0.0:
            if np.any(bi != 0.0):
                raise ArgumentError("b0_i = 0 forces b_i to vanish identically",
                                    {"constraint": "b0_i = 0 implies b_i = 0", "block": i})
            return
        lo, hi = self.c1 * self.b0[i], self.b0[i] / self.c1
        if np.any(bi < lo * (1.0 - RANGE_SLACK)) or np.any(bi > hi * (1.0 + RANGE_SLACK)):
            raise ArgumentError("b_i outside [c1 b0_i, b0_i / c1]",
                                {"constraint": "c1 b0_i <= b_i <= b0_i / c1", "block": i,
                                 "min": float(bi.min()), "max": float(bi.max())})

    def _check_range(self, i: int, values: np.ndarray, constraint: str):
        lo, hi = self.c1, 1.0 / self.c1
        if not np.all(np.isfinite(values)) or np.any(values < lo * (1.0 - RANGE_SLACK)) \
                or np.any(values > hi * (1.0 + RANGE_SLACK)):
            raise ArgumentError("a_i outside [c1, 1/c1]",
                                {"constraint": constraint, "block": i,
                                 "min": float(np.min(values)), "max": float(np.max(values))})

    # ========== CONSTRUCTORS ==========

    @classmethod
    def constant(cls, anisotropy: Anisotropy, c1: float = 1.0, a: Union[float, Sequence[float]] = 1.0,
                 b: Optional[Sequence[float]] = None, time_grid: Sequence[float] = (0.0,)
                 ) -> "CoefficientSet":
        """Time-constant TIME_ONLY coefficients; b defaults to b0"""
        b0 = np.asarray(anisotropy.effective_drifts, dtype=float)
        ell = anisotropy.ell
        a_values = [float(a)] * ell if np.isscalar(a) else [float(v) for v in a]
        b_values = b0 if b is None else np.asarray(b, dtype=float)
        grid = np.asarray(time_grid, dtype=float)
        return cls(c1, b0, grid,
                   [np.full(grid.shape, bv) for bv in b_values],
                   [np.full(grid.shape, av) for av in a_values])

    @classmethod
    def unit(cls, anisotropy: Anisotropy) -> "CoefficientSet":
        """a = 1, b = b0: the operator phi . Delta itself"""
        return cls.constant(anisotropy)

    # ========== ACCESS ==========

    @property
    def ell(self) -> int:
        return int(self.b0.size)

    @property
    def is_time_constant(self) -> bool:
        if self.mode != CoefficientMode.TIME_ONLY:
            return False
        return all(np.all(v == v[0]) for v in self.a + self.b)

    def check_anisotropy(self, anisotropy: Anisotropy):
        """Reference drifts must be the effective drifts of the anisotropy"""
        if anisotropy.ell != self.ell:
            raise ArgumentError("coefficient blocks do not match the anisotropy",
                                {"coefficients": self.ell, "anisotropy": anisotropy.ell})
        drifts = np.asarray(anisotropy.effective_drifts, dtype=float)
        if not np.allclose(drifts, self.b0, rtol=1e-12, atol=0.0):
            raise ArgumentError("b0 must equal the effective drifts of phi_i",
                                {"b0": self.b0.tolist(), "drifts": drifts.tolist()})
        if self.mode == CoefficientMode.TIME_JUMP and any(d != 1 for d in anisotropy.dims):
            raise ArgumentError("TIME_JUMP coefficients are supported on 1-D blocks only",
                                {"dims": list(anisotropy.dims)})

    def _interp(self, samples: np.ndarray, t) -> np.ndarray:
        return np.interp(t, self.time_grid, samples)

    def b_at(self, i: int, t) -> np.ndarray:
        return self._interp(self.b[i], t)

    def a_at(self, i: int, t) -> np.ndarray:
        """TIME_ONLY value a_i(t)"""
        if self.mode != CoefficientMode.TIME_ONLY:
            raise ArgumentError("a_at needs TIME_ONLY coefficients; use jump_coefficient")
        return self._interp(self.a[i], t)

    def jump_coefficient(self, i: int, t: float) -> Callable[[np.ndarray], np.ndarray]:
        """y -> a_i(t, y) with t frozen (constant in y for TIME_ONLY)"""
        if self.mode == CoefficientMode.TIME_ONLY:
            value = float(self.a_at(i, t))
            return lambda y: np.full(np.shape(y), value)
        func = self.a[i]
        return lambda y: np.asarray(func(float(t), np.asarray(y, dtype=float)), dtype=float)

    def midpoint_values(self, t_lo: float, t_hi: float) -> List[float]:
        """Slab-frozen TIME_ONLY a_i at the slab midpoint"""
        mid = 0.5 * (t_lo + t_hi)
        return [float(self.a_at(i, mid)) for i in range(self.ell)]


def jump_step(c1: float, t_switch: float = -math.inf) -> JumpCoefficient:
    """a(t, y) = c1 + (1/c1 - c1) 1_{y > 0}, switched on for t >= t_switch"""
    def a(t: float, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if t < t_switch:
            return np.full(y.shape, c1)
        return np.where(y > 0.0, 1.0 / c1, c1)

    return a
