"""
Subordinator increments: exact for STABLE and ATOMS, truncated compound Poisson for DENSITY
"""
import logging
import math
from typing import Optional

import numpy as np

from src.bernstein.functions import BernsteinFunction, LevyKind
from src.common.errors import AccuracyError

logger = logging.getLogger(__name__)

# neglected small-jump variance per unit time
NEGLECTED_VARIANCE = 1e-6
TABLE_NODES = 4096
TAIL_FRACTION = 1e-10


def positive_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Kanter's representation of S with E exp(-lam S) = exp(-lam^alpha), 0 < alpha < 1

        S = sin(a U) / sin(U)^{1/a} * (sin((1 - a) U) / E)^{(1 - a)/a}

    with U uniform on (0, pi) and E standard exponential.
    """
    u = math.pi * (1.0 - rng.random(size))
    e = rng.standard_exponential(size)
    log_s = (np.log(np.sin(alpha * u)) - np.log(np.sin(u)) / alpha
             + (1.0 - alpha) / alpha * (np.log(np.sin((1.0 - alpha) * u)) - np.log(e)))
    return np.exp(log_s)


class JumpSampler:
    """Jump part of a subordinator, sampled over a clock time tau"""

    def __init__(self, phi: BernsteinFunction):
        self.phi = phi
        self.epsilon = 0.0
        self.rate = 0.0
        self.small_mean = 0.0
        self.neglected_variance = 0.0
        self._cdf: Optional[np.ndarray] = None
        self._log_t: Optional[np.ndarray] = None
        if phi.kind == LevyKind.density:
            self._build_density_table()

    def __repr__(self) -> str:
        return f"JumpSampler({self.phi!r}, epsilon={self.epsilon:.3g})"

    # ========== DENSITY TABLE ==========

    def _small_variance(self, eps: float) -> float:
        return self.phi.levy_integral(lambda t: np.where(t <= eps, t * t, 0.0), focus=eps)

    def _build_density_table(self):
        phi = self.phi
        # smallest decade whose neglected variance clears the tolerance, then bisect in log
        lo, hi = -30.0, 0.0
        if self._small_variance(math.exp(hi)) <= NEGLECTED_VARIANCE:
            lo = hi
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if self._small_variance(math.exp(mid)) <= NEGLECTED_VARIANCE:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-3:
                    break
        eps = math.exp(lo)
        self.epsilon = eps
        self.neglected_variance = self._small_variance(eps)
        self.small_mean = phi.levy_integral(lambda t: np.where(t <= eps, t, 0.0), focus=eps)
        self.rate = phi.levy_integral(lambda t: np.where(t > eps, 1.0, 0.0), focus=eps)

        upper = eps * 10.0
        for _ in range(40):
            tail = phi.levy_integral(lambda t: np.where(t > upper, 1.0, 0.0), focus=upper)
            if tail <= TAIL_FRACTION * self.rate:
                break
            upper *= 10.0
        else:
            raise AccuracyError("density tail too heavy to tabulate", tail, {"upper": upper})

        log_t = np.linspace(math.log(eps), math.log(upper), TABLE_NODES)
        t = np.exp(log_t)
        weight = phi.levy_density(t) * t
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (weight[1:] + weight[:-1]) * np.diff(log_t))])
        self._cdf = cdf / cdf[-1]
        self._log_t = log_t
        logger.debug("density sampler: epsilon=%.3g, rate=%.3g, neglected variance=%.2e",
                     eps, self.rate, self.neglected_variance)

    def _jump_sizes(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return np.exp(np.interp(rng.random(count), self._cdf, self._log_t))

    # ========== SAMPLING ==========

    def increments(self, tau: float, size: int, rng: np.random.Generator) -> np.ndarray:
        """
        Jump-part increments S_tau (drift excluded) for `size` independent paths

        Args:
            tau: Clock time >= 0
            size: Number of paths
            rng: Stream for this cell

        Returns:
            Nonnegative array of shape (size,)
        """
        phi = self.phi
        if tau <= 0.0 or not phi.has_levy_measure:
            return np.zeros(size)
        if phi.kind == LevyKind.stable:
            return tau ** (1.0 / phi.alpha) * positive_stable(phi.alpha, size, rng)
        if phi.kind == LevyKind.atoms:
            out = np.zeros(size)
            for t_k, w_k in phi.atoms:
                out += t_k * rng.poisson(w_k * tau, size)
            return out
        counts = rng.poisson(self.rate * tau, size)
        total = int(counts.sum())
        sums = np.bincount(np.repeat(np.arange(size), counts), weights=self._jump_sizes(total, rng),
                           minlength=size)
        return sums + tau * self.small_mean


def subordinator_increments(phi: BernsteinFunction, sampler: JumpSampler, dt: float, size: int,
                            rng: np.random.Generator) -> np.ndarray:
    """S_{t + dt} - S_t: drift plus jump part"""
    return phi.effective_drift * dt + sampler.increments(dt, size, rng)
