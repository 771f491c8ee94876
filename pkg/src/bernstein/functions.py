"""
Bernstein functions phi(lambda) = b*lambda + int (1 - e^{-lambda t}) mu(dt)

Three Levy families are supported: STABLE(alpha), finite ATOMS and a
DENSITY given either as a piecewise log-log-linear table or as a callable
with declared power-law end behaviour.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from src.common.errors import (
    AccuracyError,
    ArgumentError,
    DomainError,
    IntegrabilityError,
    RangeError,
)

logger = logging.getLogger(__name__)

# Quadrature targets for the DENSITY family
QUAD_EPSREL = 1e-11
QUAD_FAIL_REL = 1e-8

# eval_cache covers lambda in [1e-12, 1e12] at half-decade spacing
CACHE_EXPONENTS = np.arange(-12.0, 12.0 + 0.25, 0.5)

INVERSE_MAX_ITER = 200

# DENSITY integrals run over |log t| <= LOG_T_WINDOW; exp(u) stays finite there
LOG_T_WINDOW = 300.0


class LevyKind(str, Enum):
    """Levy data family"""
    stable = "stable"
    atoms = "atoms"
    density = "density"
    none = "none"


@dataclass(frozen=True)
class IntegrabilityCertificate:
    """Evidence that int min(1, t) mu(dt) is finite"""
    small_jump_moment: float  # int_0^1 t mu(dt)
    large_jump_mass: float    # int_1^inf mu(dt)
    head_slope: float         # power of the density near 0
    tail_slope: float         # power of the density near infinity

    @property
    def total(self) -> float:
        return self.small_jump_moment + self.large_jump_mass


class DensityTable:
    """
    Piecewise log-log-linear density on (0, inf), extrapolated with the end slopes
    """

    def __init__(self, table: Sequence[Sequence[float]]):
        """
        Args:
            table: Rows (t, w) with t strictly increasing, t > 0 and w > 0; at least 2 rows
        """
        rows = np.asarray(table, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2 or rows.shape[0] < 2:
            raise ArgumentError("density table needs at least two (t, w) rows", {"shape": list(rows.shape)})
        if np.any(rows[:, 0] <= 0) or np.any(rows[:, 1] <= 0):
            raise ArgumentError("density table entries must be positive")
        if np.any(np.diff(rows[:, 0]) <= 0):
            raise ArgumentError("density table t-values must be strictly increasing")
        self.rows = rows
        self.log_t = np.log(rows[:, 0])
        self.log_w = np.log(rows[:, 1])
        self.head_slope = float((self.log_w[1] - self.log_w[0]) / (self.log_t[1] - self.log_t[0]))
        self.tail_slope = float((self.log_w[-1] - self.log_w[-2]) / (self.log_t[-1] - self.log_t[-2]))

    @property
    def breakpoints(self) -> np.ndarray:
        return self.log_t

    def __call__(self, t):
        log_t = np.log(np.asarray(t, dtype=float))
        inside = np.interp(log_t, self.log_t, self.log_w)
        head = self.log_w[0] + self.head_slope * (log_t - self.log_t[0])
        tail = self.log_w[-1] + self.tail_slope * (log_t - self.log_t[-1])
        log_w = np.where(log_t < self.log_t[0], head, np.where(log_t > self.log_t[-1], tail, inside))
        return np.exp(log_w)

    def to_list(self) -> List[List[float]]:
        return self.rows.tolist()


class BernsteinFunction:
    """
    A Bernstein function with drift b >= 0 and Levy data of one family

    Instances are immutable after construction; the eval_cache is built eagerly.
    """

    def __init__(
        self,
        kind: LevyKind,
        drift: float = 0.0,
        alpha: Optional[float] = None,
        atoms: Optional[Sequence[Tuple[float, float]]] = None,
        density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        head_slope: Optional[float] = None,
        tail_slope: Optional[float] = None,
    ):
        """
        Args:
            kind: Levy family
            drift: Nonnegative drift b
            alpha: Stability index in (0, 1] for STABLE
            atoms: (t_k, w_k) pairs with t_k > 0, w_k > 0 for ATOMS
            density: Positive density on (0, inf) for DENSITY
            head_slope: Power of the density as t -> 0 (DENSITY callables)
            tail_slope: Power of the density as t -> inf (DENSITY callables)
        """
        if not (math.isfinite(drift) and drift >= 0.0):
            raise DomainError("drift must be a finite nonnegative number", {"drift": drift})
        self.kind = LevyKind(kind)
        self.drift = float(drift)
        self.alpha: Optional[float] = None
        self.atoms: Tuple[Tuple[float, float], ...] = ()
        self.density = density
        self.certificate: Optional[IntegrabilityCertificate] = None

        if self.kind == LevyKind.stable:
            if alpha is None or not (0.0 < alpha <= 1.0):
                raise DomainError("stable index alpha must lie in (0, 1]", {"alpha": alpha})
            self.alpha = float(alpha)
        elif self.kind == LevyKind.atoms:
            pairs = [(float(t), float(w)) for t, w in (atoms or [])]
            if not pairs:
                raise ArgumentError("ATOMS needs at least one (t, w) pair")
            if any(t <= 0 or w <= 0 or not (math.isfinite(t) and math.isfinite(w)) for t, w in pairs):
                raise DomainError("atom locations and weights must be positive and finite", {"atoms": pairs})
            self.atoms = tuple(pairs)
            self._atom_t = np.array([t for t, _ in pairs])
            self._atom_w = np.array([w for _, w in pairs])
        elif self.kind == LevyKind.density:
            if density is None:
                raise ArgumentError("DENSITY needs a density callable or table")
            if isinstance(density, DensityTable):
                head_slope, tail_slope = density.head_slope, density.tail_slope
            if head_slope is None or tail_slope is None:
                raise IntegrabilityError("DENSITY callables must declare head and tail slopes")
            self._head_slope = float(head_slope)
            self._tail_slope = float(tail_slope)
            self.certificate = self._certify()
        else:
            if self.drift <= 0.0:
                raise DomainError("drift-only Bernstein function needs a positive drift", {"drift": drift})

        self._cache_lambda = np.power(10.0, CACHE_EXPONENTS)
        self._cache_phi = self.evaluate(self._cache_lambda)
        logger.debug("Built %s with eval_cache of %d nodes", self, len(self._cache_lambda))

    # ========== CONSTRUCTORS ==========

    @classmethod
    def stable(cls, alpha: float, drift: float = 0.0) -> "BernsteinFunction":
        return cls(LevyKind.stable, drift=drift, alpha=alpha)

    @classmethod
    def from_atoms(cls, atoms: Sequence[Tuple[float, float]], drift: float = 0.0) -> "BernsteinFunction":
        return cls(LevyKind.atoms, drift=drift, atoms=atoms)

    @classmethod
    def from_table(cls, table: Sequence[Sequence[float]], drift: float = 0.0) -> "BernsteinFunction":
        return cls(LevyKind.density, drift=drift, density=DensityTable(table))

    @classmethod
    def from_density(cls, density: Callable, head_slope: float, tail_slope: float,
                     drift: float = 0.0) -> "BernsteinFunction":
        return cls(LevyKind.density, drift=drift, density=density,
                   head_slope=head_slope, tail_slope=tail_slope)

    @classmethod
    def drift_only(cls, drift: float = 1.0) -> "BernsteinFunction":
        return cls(LevyKind.none, drift=drift)

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "BernsteinFunction":
        """
        Build from a configuration record

        Args:
            record: {"kind": "stable", "alpha": .., "drift": ..} or the atoms/density/drift variants

        Returns:
            BernsteinFunction
        """
        kind = record.get("kind")
        drift = float(record.get("drift", 0.0))
        if kind == "stable":
            return cls.stable(float(record["alpha"]), drift)
        if kind == "atoms":
            return cls.from_atoms([tuple(p) for p in record["atoms"]], drift)
        if kind == "density":
            return cls.from_table(record["table"], drift)
        if kind == "drift":
            return cls.drift_only(drift)
        raise ArgumentError(f"unknown Bernstein record kind: {kind!r}", {"record": record})

    def to_record(self) -> Dict[str, Any]:
        if self.kind == LevyKind.stable:
            return {"kind": "stable", "alpha": self.alpha, "drift": self.drift}
        if self.kind == LevyKind.atoms:
            return {"kind": "atoms", "atoms": [list(p) for p in self.atoms], "drift": self.drift}
        if self.kind == LevyKind.density and isinstance(self.density, DensityTable):
            return {"kind": "density", "table": self.density.to_list(), "drift": self.drift}
        if self.kind == LevyKind.none:
            return {"kind": "drift", "drift": self.drift}
        raise ArgumentError("callable densities have no record form")

    def __repr__(self) -> str:
        if self.kind == LevyKind.stable:
            return f"BernsteinFunction(stable, alpha={self.alpha}, drift={self.drift})"
        if self.kind == LevyKind.atoms:
            return f"BernsteinFunction(atoms, n={len(self.atoms)}, drift={self.drift})"
        if self.kind == LevyKind.density:
            return f"BernsteinFunction(density, drift={self.drift})"
        return f"BernsteinFunction(drift={self.drift})"

    # ========== STRUCTURE ==========

    @property
    def effective_drift(self) -> float:
        """Coefficient of lambda, including the alpha = 1 stable term"""
        if self.kind == LevyKind.stable and self.alpha == 1.0:
            return self.drift + 1.0
        return self.drift

    @property
    def has_levy_measure(self) -> bool:
        if self.kind == LevyKind.stable:
            return self.alpha < 1.0
        return self.kind in (LevyKind.atoms, LevyKind.density)

    @property
    def levy_mass(self) -> float:
        """Total mass mu((0, inf)); inf for infinite activity"""
        if not self.has_levy_measure:
            return 0.0
        if self.kind == LevyKind.stable:
            return math.inf
        if self.kind == LevyKind.atoms:
            return float(self._atom_w.sum())
        if self._head_slope <= -1.0:
            return math.inf
        return self.levy_integral(lambda t: np.ones_like(t))

    @property
    def is_bounded(self) -> bool:
        return self.effective_drift == 0.0 and math.isfinite(self.levy_mass)

    @property
    def sup_value(self) -> float:
        """sup phi = total Levy mass when bounded, inf otherwise"""
        return self.levy_mass if self.is_bounded else math.inf

    def levy_density(self, t) -> np.ndarray:
        """Density of mu at t > 0 (STABLE and DENSITY only)"""
        t = np.asarray(t, dtype=float)
        if self.kind == LevyKind.stable and self.alpha < 1.0:
            return self.alpha / gamma_fn(1.0 - self.alpha) * np.power(t, -1.0 - self.alpha)
        if self.kind == LevyKind.density:
            return np.asarray(self.density(t), dtype=float)
        raise ArgumentError(f"{self} has no Levy density")

    # ========== EVALUATION ==========

    def eval(self, lam: float) -> float:
        """
        Evaluate phi at one point

        Args:
            lam: lambda > 0

        Returns:
            phi(lambda)
        """
        if not (lam > 0.0) or not math.isfinite(lam):
            raise DomainError("phi is evaluated at positive finite lambda only", {"lambda": lam})
        return float(self.effective_drift * lam + self._levy_scalar(float(lam)))

    def evaluate(self, lam) -> np.ndarray:
        """
        Vectorized evaluation; lambda = 0 maps to 0

        Args:
            lam: Array of lambda >= 0

        Returns:
            Array of phi values with the shape of lam
        """
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise DomainError("phi is evaluated at nonnegative finite lambda only")
        return self.effective_drift * lam + self.levy_evaluate(lam)

    def levy_evaluate(self, lam) -> np.ndarray:
        """Jump part phi(lambda) - effective_drift * lambda, vectorized"""
        lam = np.asarray(lam, dtype=float)
        if not self.has_levy_measure:
            return np.zeros_like(lam)
        if self.kind == LevyKind.stable:
            return np.power(lam, self.alpha)
        if self.kind == LevyKind.atoms:
            flat = lam.reshape(-1, 1)
            out = (-np.expm1(-flat * self._atom_t) * self._atom_w).sum(axis=1)
            return out.reshape(lam.shape)
        unique, inverse = np.unique(lam, return_inverse=True)
        values = np.array([self._levy_scalar(v) if v > 0 else 0.0 for v in unique])
        return values[inverse].reshape(lam.shape)

    def _levy_scalar(self, lam: float) -> float:
        if not self.has_levy_measure or lam == 0.0:
            return 0.0
        if self.kind == LevyKind.stable:
            return lam ** self.alpha
        if self.kind == LevyKind.atoms:
            return float((-np.expm1(-lam * self._atom_t) * self._atom_w).sum())
        return self.levy_integral(lambda t: -np.expm1(-lam * t), focus=1.0 / lam)

    def derivative(self, lam: float, n: int = 1) -> float:
        """
        n-th derivative of phi, n in {1, 2}

        Closed form for STABLE/ATOMS/drift; DENSITY uses central differences
        with step h = lambda * 1e-5 (phi' from phi, phi'' from the quadrature phi').
        """
        if n not in (1, 2):
            raise ArgumentError("derivative order must be 1 or 2", {"n": n})
        if not lam > 0:
            raise DomainError("derivatives are taken at positive lambda", {"lambda": lam})
        if self.kind == LevyKind.stable:
            a = self.alpha
            if n == 1:
                return self.effective_drift + (a * lam ** (a - 1.0) if a < 1.0 else 0.0)
            return a * (a - 1.0) * lam ** (a - 2.0) if a < 1.0 else 0.0
        if self.kind == LevyKind.atoms:
            decay = np.exp(-lam * self._atom_t) * self._atom_w
            if n == 1:
                return float(self.drift + (self._atom_t * decay).sum())
            return float(-(self._atom_t ** 2 * decay).sum())
        if self.kind == LevyKind.none:
            return self.drift if n == 1 else 0.0
        h = lam * 1e-5
        if n == 1:
            return (self.eval(lam + h) - self.eval(lam - h)) / (2.0 * h)
        return (self._first_derivative_quad(lam + h) - self._first_derivative_quad(lam - h)) / (2.0 * h)

    def _first_derivative_quad(self, lam: float) -> float:
        return self.drift + self.levy_integral(lambda t: t * np.exp(-lam * t), focus=1.0 / lam)

    # ========== INVERSION ==========

    def eval_inverse(self, y: float) -> float:
        """
        Solve phi(lambda) = y by monotone bisection in log-lambda

        Args:
            y: Target value > 0

        Returns:
            lambda with |phi(lambda) - y| <= 1e-12 * max(1, y)
        """
        if not (y > 0.0) or not math.isfinite(y):
            raise DomainError("eval_inverse needs a positive finite target", {"y": y})
        if y >= self.sup_value:
            raise RangeError("target lies above sup phi of a bounded Bernstein function",
                             {"y": y, "sup": self.sup_value})
        lo, hi = self._bracket(y)
        for _ in range(INVERSE_MAX_ITER):
            mid = math.sqrt(lo * hi)
            if mid <= lo or mid >= hi:
                break
            if self.eval(mid) < y:
                lo = mid
            else:
                hi = mid
            if hi / lo - 1.0 <= 1e-15:
                break
        f_lo, f_hi = self.eval(lo), self.eval(hi)
        return lo if abs(f_lo - y) <= abs(f_hi - y) else hi

    def _bracket(self, y: float) -> Tuple[float, float]:
        below = np.nonzero(self._cache_phi < y)[0]
        above = np.nonzero(self._cache_phi >= y)[0]
        if below.size and above.size:
            return float(self._cache_lambda[below[-1]]), float(self._cache_lambda[above[0]])
        if above.size:
            hi = float(self._cache_lambda[0])
            lo = hi / 10.0
            while self.eval(lo) >= y:
                hi, lo = lo, lo / 10.0
                if lo < 1e-300:
                    raise RangeError("could not bracket tiny target", {"y": y})
            logger.debug("eval_inverse bracket grown below cache to [%g, %g]", lo, hi)
            return lo, hi
        lo = float(self._cache_lambda[-1])
        hi = lo * 10.0
        while self.eval(hi) < y:
            lo, hi = hi, hi * 10.0
            if hi > 1e300:
                raise RangeError("could not bracket large target", {"y": y})
        logger.debug("eval_inverse bracket grown above cache to [%g, %g]", lo, hi)
        return lo, hi

    # ========== DENSITY QUADRATURE ==========

    def levy_integral(self, kernel: Callable[[np.ndarray], np.ndarray],
                      focus: Optional[float] = None) -> float:
        """int kernel(t) mu(dt) for the DENSITY family, in the variable u = log t"""
        density = self.density

        def integrand(u: float) -> float:
            t = math.exp(u)
            return float(kernel(np.asarray(t)) * density(np.asarray(t)) * t)

        if isinstance(density, DensityTable):
            u_lo, u_hi = float(density.breakpoints[0]), float(density.breakpoints[-1])
            inner_points = list(density.breakpoints[1:-1])
        else:
            u_lo, u_hi = -1.0, 1.0
            inner_points = [0.0]
        cuts = [u_lo, u_hi]
        if focus is not None:
            u_star = math.log(focus)
            if u_star < u_lo:
                cuts = [u_star - 5.0] + cuts
            elif u_star > u_hi:
                cuts = cuts + [u_star + 5.0]
            else:
                inner_points.append(u_star)

        total, error = 0.0, 0.0
        cuts = [min(max(c, -LOG_T_WINDOW + 1.0), LOG_T_WINDOW - 1.0) for c in cuts]
        pieces: List[Tuple[float, float, Optional[List[float]]]] = [(-LOG_T_WINDOW, cuts[0], None)]
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b <= a:
                continue
            pts = sorted(p for p in inner_points if a < p < b) or None
            pieces.append((a, b, pts))
        pieces.append((cuts[-1], LOG_T_WINDOW, None))
        for a, b, pts in pieces:
            if pts is not None:
                value, err = integrate.quad(integrand, a, b, points=pts, epsabs=0.0,
                                            epsrel=QUAD_EPSREL, limit=400)
            else:
                value, err = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
            total += value
            error += err
        if not math.isfinite(total):
            raise IntegrabilityError("Levy integral diverged", {"value": total})
        if error > QUAD_FAIL_REL * abs(total) and error > 1e-300:
            raise AccuracyError("DENSITY quadrature missed its tolerance", error, {"value": total})
        return total

    def _certify(self) -> IntegrabilityCertificate:
        # min(1, t) w(t) ~ t^{1 + head} near 0 and t^{tail} near infinity
        if self._head_slope <= -2.0:
            raise IntegrabilityError("density too singular at 0: int_0 t mu(dt) diverges",
                                     {"head_slope": self._head_slope})
        if self._tail_slope >= -1.0:
            raise IntegrabilityError("density tail too heavy: int^inf mu(dt) diverges",
                                     {"tail_slope": self._tail_slope})
        density = self.density

        def small(u: float) -> float:
            t = math.exp(u)
            return float(t * density(np.asarray(t)) * t)

        def large(u: float) -> float:
            t = math.exp(u)
            return float(density(np.asarray(t)) * t)

        # power-law remainders beyond the window, exact for tables
        small_moment, _ = integrate.quad(small, -LOG_T_WINDOW, 0.0, epsrel=1e-10, limit=400)
        small_moment += small(-LOG_T_WINDOW) / (2.0 + self._head_slope)
        large_mass, _ = integrate.quad(large, 0.0, LOG_T_WINDOW, epsrel=1e-10, limit=400)
        large_mass += large(LOG_T_WINDOW) / -(1.0 + self._tail_slope)
        if not (math.isfinite(small_moment) and math.isfinite(large_mass)):
            raise IntegrabilityError("int min(1, t) mu(dt) is not finite",
                                     {"small": small_moment, "large": large_mass})
        return IntegrabilityCertificate(small_moment, large_mass, self._head_slope, self._tail_slope)


def kappa(phi: BernsteinFunction, b: float) -> float:
    """
    Spatial radius of the anisotropic cube at time scale b

    Args:
        phi: Unbounded Bernstein function
        b: Time scale > 0

    Returns:
        1 / sqrt(phi^{-1}(1/b))
    """
    if not b > 0:
        raise DomainError("kappa needs b > 0", {"b": b})
    return 1.0 / math.sqrt(phi.eval_inverse(1.0 / b))
