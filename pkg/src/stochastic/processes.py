"""
Path ensembles: subordinators, independent arrays of SBMs and slab-frozen additive processes
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from src.bernstein.anisotropy import Anisotropy
from src.bernstein.functions import BernsteinFunction, LevyKind
from src.common.errors import ArgumentError
from src.common.parallel import ordered_map
from src.kernels.heat_kernel import jump_kernel_value, stable_jump_constant
from src.operators.coefficients import SAMPLE_Y, CoefficientMode, CoefficientSet
from src.operators.jump_quadrature import jump_multiplier
from src.stochastic import rng as streams
from src.stochastic.subordinators import NEGLECTED_VARIANCE, JumpSampler, subordinator_increments

logger = logging.getLogger(__name__)

MAX_SLAB_JUMPS = 256.0
REMAINDER_NODES = 2048
TAIL_FRACTION = 1e-10
# lower end of the small-jump variance integral, relative to epsilon (non-stable kinds)
VARIANCE_FLOOR = 1e-12


def _check_time_grid(time_grid: Sequence[float]) -> np.ndarray:
    nodes = np.asarray(time_grid, dtype=float)
    if nodes.ndim != 1 or nodes.size < 2 or nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0.0):
        raise ArgumentError("time grid must be increasing and start at 0", {"nodes": nodes.size})
    return nodes


def _check_paths(n_paths: int):
    if n_paths < 1:
        raise ArgumentError("n_paths must be positive", {"n_paths": n_paths})


@dataclass
class PathEnsemble:
    """n_paths sampled paths on a shared time grid, values shaped (paths, times, dim)"""
    time_grid: np.ndarray
    values: np.ndarray
    master_seed: int
    dims: Tuple[int, ...]
    stream_scheme: str = streams.STREAM_SCHEME
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return int(self.values.shape[0])

    @property
    def total_dim(self) -> int:
        return int(self.values.shape[2])

    def node_index(self, t: float) -> int:
        """Index of the time node equal to t (relative tolerance 1e-12)"""
        hits = np.flatnonzero(np.isclose(self.time_grid, t, rtol=1e-12, atol=1e-14))
        if hits.size == 0:
            raise ArgumentError("time is not a node of the path grid",
                                {"t": t, "horizon": float(self.time_grid[-1])})
        return int(hits[0])

    def at(self, t: float) -> np.ndarray:
        """Path values X_t, shape (paths, dim)"""
        return self.values[:, self.node_index(t), :]


# ========== ADDITIVE TRIPLET ==========

class RemainderJumps:
    """
    Jumps of (a(y) - floor) j(|y|) dy on a 1-D block: compound Poisson above epsilon
    plus the compensator drift over epsilon < |y| <= 1
    """

    def __init__(self, phi: BernsteinFunction, a_coeff, floor: float, dt: float):
        self.phi = phi
        self.floor = floor
        self._a = a_coeff
        self.rate = 0.0
        self.drift = 0.0
        self.epsilon = 0.0
        self.neglected_variance = 0.0
        self._sides: List[Tuple[float, np.ndarray, np.ndarray]] = []
        excess = np.asarray(a_coeff(SAMPLE_Y), dtype=float) - floor
        if not phi.has_levy_measure or np.all(excess <= 0.0):
            return
        self._build(dt)

    def _extra(self, sign: float, y: float) -> float:
        extra = float(np.asarray(self._a(np.array([sign * y])), dtype=float)[0]) - self.floor
        return max(extra, 0.0)

    def _weight(self, sign: float, y: float) -> float:
        return self._extra(sign, y) * jump_kernel_value(self.phi, 1, y)

    def _integrand(self, sign: float, power: int) -> Callable[[float], float]:
        """u -> y^(power+1) w(sign y) at y = e^u"""
        if self.phi.kind == LevyKind.stable:
            # j(y) = c y^{-1-2 alpha}
            c = stable_jump_constant(1, self.phi.alpha)
            slope = power - 2.0 * self.phi.alpha
            return lambda u: self._extra(sign, math.exp(u)) * c * math.exp(u * slope)
        return lambda u: math.exp(u * (power + 1)) * self._weight(sign, math.exp(u))

    def _integral(self, sign: float, power: int, lo: float, hi: float) -> float:
        """int_lo^hi y^power w(sign y) dy, in log y"""
        if hi <= lo:
            return 0.0
        value, _ = integrate.quad(self._integrand(sign, power),
                                  math.log(lo) if lo > 0.0 else -np.inf,
                                  math.log(hi) if math.isfinite(hi) else np.inf,
                                  epsabs=0.0, epsrel=1e-9, limit=400)
        return value

    def _variance(self, eps: float) -> float:
        lo = 0.0 if self.phi.kind == LevyKind.stable else eps * VARIANCE_FLOOR
        return sum(self._integral(s, 2, lo, eps) for s in (1.0, -1.0))

    def _mass(self, eps: float) -> float:
        return sum(self._integral(s, 0, eps, math.inf) for s in (1.0, -1.0))

    def _build(self, dt: float):
        # neglected-variance cutoff, then raised until the expected jump count per slab is capped
        lo, hi = -30.0, 0.0
        if self._variance(1.0) <= NEGLECTED_VARIANCE:
            lo = hi
        else:
            while hi - lo > 1e-3:
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if self._variance(math.exp(mid)) <= NEGLECTED_VARIANCE else (lo, mid)
        eps = math.exp(lo)
        if self._mass(eps) * dt > MAX_SLAB_JUMPS:
            lo2, hi2 = lo, 10.0
            while hi2 - lo2 > 1e-3:
                mid = 0.5 * (lo2 + hi2)
                lo2, hi2 = (lo2, mid) if self._mass(math.exp(mid)) * dt <= MAX_SLAB_JUMPS else (mid, hi2)
            eps = math.exp(hi2)
        self.epsilon = eps
        self.neglected_variance = self._variance(eps)
        self.drift = -sum(s * self._integral(s, 1, eps, 1.0) for s in (1.0, -1.0))

        for sign in (1.0, -1.0):
            mass = self._integral(sign, 0, eps, math.inf)
            if mass <= 0.0:
                continue
            upper = eps * 10.0
            for _ in range(40):
                if self._integral(sign, 0, upper, math.inf) <= TAIL_FRACTION * mass:
                    break
                upper *= 10.0
            log_y = np.linspace(math.log(eps), math.log(upper), REMAINDER_NODES)
            y = np.exp(log_y)
            w = np.array([self._weight(sign, v) for v in y]) * y
            cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(log_y))])
            if cdf[-1] <= 0.0:
                continue
            self._sides.append((sign * mass, cdf / cdf[-1], log_y))
            self.rate += mass
        logger.debug("remainder jumps: epsilon=%.3g, rate=%.3g, drift=%.3g, neglected variance=%.2e",
                     eps, self.rate, self.drift, self.neglected_variance)

    def increments(self, dt: float, size: int, rng: np.random.Generator) -> np.ndarray:
        out = np.full(size, self.drift * dt)
        for signed_mass, cdf, log_y in self._sides:
            counts = rng.poisson(abs(signed_mass) * dt, size)
            total = int(counts.sum())
            sizes = np.exp(np.interp(rng.random(total), cdf, log_y)) * math.copysign(1.0, signed_mass)
            out += np.bincount(np.repeat(np.arange(size), counts), weights=sizes, minlength=size)
        return out


class AdditiveTriplet:
    """
    Slab-frozen triplets: on [t_k, t_{k+1}) the coefficients are taken at the slab midpoint

    diffusion[k, i] is b_i(t_mid); clock[k, i] scales the block's jump clock (a_i(t_mid)
    for TIME_ONLY, the floor min_y a_i(t_mid, y) for TIME_JUMP, whose excess is carried by
    RemainderJumps).
    """

    def __init__(self, anisotropy: Anisotropy, coeffs: CoefficientSet, time_grid: np.ndarray,
                 diffusion: np.ndarray, clock: np.ndarray, remainders: Dict[Tuple[int, int], RemainderJumps]):
        self.anisotropy = anisotropy
        self.coeffs = coeffs
        self.time_grid = time_grid
        self.diffusion = diffusion
        self.clock = clock
        self.remainders = remainders
        self._multiplier_cache: Dict[Tuple[int, int, float], complex] = {}

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.time_grid[1:] + self.time_grid[:-1])

    @classmethod
    def from_coefficients(cls, coeffs: CoefficientSet, anisotropy: Anisotropy,
                          time_grid: Sequence[float]) -> "AdditiveTriplet":
        coeffs.check_anisotropy(anisotropy)
        nodes = _check_time_grid(time_grid)
        mids = 0.5 * (nodes[1:] + nodes[:-1])
        dts = np.diff(nodes)
        ell = anisotropy.ell
        diffusion = np.array([[float(coeffs.b_at(i, t)) for i in range(ell)] for t in mids])
        clock = np.zeros((mids.size, ell))
        remainders: Dict[Tuple[int, int], RemainderJumps] = {}
        cache: Dict[Tuple[int, bytes, float], RemainderJumps] = {}
        for k, t in enumerate(mids):
            for i, phi in enumerate(anisotropy.phis):
                if coeffs.mode == CoefficientMode.TIME_ONLY:
                    clock[k, i] = float(coeffs.a_at(i, t))
                    continue
                a_t = coeffs.jump_coefficient(i, float(t))
                sampled = np.asarray(a_t(SAMPLE_Y), dtype=float)
                floor = float(sampled.min())
                clock[k, i] = floor
                key = (i, np.round(sampled, 14).tobytes(), float(dts[k]))
                if key not in cache:
                    cache[key] = RemainderJumps(phi, a_t, floor, float(dts[k]))
                remainders[(k, i)] = cache[key]
        return cls(anisotropy, coeffs, nodes, diffusion, clock, remainders)

    @property
    def neglected_variance(self) -> float:
        return max((r.neglected_variance for r in self.remainders.values()), default=0.0)

    def _jump_exponent(self, k: int, i: int, xi: float) -> complex:
        """-m(xi) for the frozen TIME_JUMP coefficient of slab k"""
        key = (k, i, float(xi))
        if key not in self._multiplier_cache:
            a_t = self.coeffs.jump_coefficient(i, float(self.midpoints[k]))
            m = jump_multiplier(self.anisotropy.phis[i], np.array([xi]), a_t)[0]
            self._multiplier_cache[key] = -complex(m)
        return self._multiplier_cache[key]

    def slab_exponent(self, k: int, xi: Sequence[float]) -> complex:
        """psi_k(xi) with E exp(i xi . (Z_{t_{k+1}} - Z_{t_k})) = exp(-dt_k psi_k(xi))"""
        xi = np.asarray(xi, dtype=float)
        total = 0.0 + 0.0j
        for i, (phi, block) in enumerate(zip(self.anisotropy.phis, self.anisotropy.block_slices())):
            xi_sq = float(np.dot(xi[block], xi[block]))
            if xi_sq == 0.0:
                continue
            total += self.diffusion[k, i] * xi_sq
            if self.coeffs.mode == CoefficientMode.TIME_ONLY:
                total += self.clock[k, i] * (float(phi.evaluate(xi_sq)) - phi.effective_drift * xi_sq)
            else:
                total += self._jump_exponent(k, i, float(xi[block][0]))
        return total

    def exponent(self, xi: Sequence[float], t: float) -> complex:
        """Slab-integrated exponent sum_{t_k < t} dt_k psi_k(xi); t must be a node"""
        hits = np.flatnonzero(np.isclose(self.time_grid, t, rtol=1e-12, atol=1e-14))
        if hits.size == 0:
            raise ArgumentError("time is not a node of the triplet grid", {"t": t})
        dts = np.diff(self.time_grid)
        return sum((dts[k] * self.slab_exponent(k, xi) for k in range(int(hits[0]))), 0.0 + 0.0j)


# ========== SAMPLERS ==========

def _assemble(chunks: List[np.ndarray], n_times: int, dim: int) -> np.ndarray:
    values = np.zeros((sum(c.shape[0] for c in chunks), n_times, dim))
    start = 0
    for c in chunks:
        values[start:start + c.shape[0], 1:, :] = np.cumsum(c, axis=1)
        start += c.shape[0]
    return values


def sample_subordinator(phi: BernsteinFunction, time_grid: Sequence[float], n_paths: int, seed: int,
                        workers: int = 1, progress: bool = False) -> PathEnsemble:
    """
    Nondecreasing subordinator paths S_t on the time grid

    Args:
        phi: Laplace exponent
        time_grid: Increasing nodes starting at 0
        n_paths: Number of paths
        seed: Master seed
        workers: Chunk workers
        progress: Show a progress bar

    Returns:
        PathEnsemble with dim 1
    """
    nodes = _check_time_grid(time_grid)
    _check_paths(n_paths)
    sampler = JumpSampler(phi)
    dts = np.diff(nodes)

    def run(chunk):
        index, start, stop = chunk
        size = stop - start
        out = np.zeros((size, dts.size, 1))
        for k, dt in enumerate(dts):
            rng = streams.stream(seed, streams.SUBORDINATOR, 0, index, k)
            out[:, k, 0] = subordinator_increments(phi, sampler, float(dt), size, rng)
        return out

    parts = ordered_map(run, list(streams.chunks(n_paths)), workers, progress, "subordinator")
    return PathEnsemble(nodes, _assemble(parts, nodes.size, 1), seed, (1,),
                        metadata={"kind": "subordinator", "epsilon": sampler.epsilon,
                                  "neglected_variance": sampler.neglected_variance})


def sample_iasbm(a: Anisotropy, time_grid: Sequence[float], n_paths: int, seed: int,
                 workers: int = 1, progress: bool = False) -> PathEnsemble:
    """
    X = (B^1_{S^1}, ..., B^l_{S^l}) with independent streams per block

    Brownian increments have variance 2 dS per coordinate, so the generator is
    phi_i(Delta_i) with Delta the full Laplacian.
    """
    nodes = _check_time_grid(time_grid)
    _check_paths(n_paths)
    samplers = [JumpSampler(phi) for phi in a.phis]
    slices = a.block_slices()
    dts = np.diff(nodes)

    def run(chunk):
        index, start, stop = chunk
        size = stop - start
        out = np.zeros((size, dts.size, a.total_dim))
        for k, dt in enumerate(dts):
            for i, phi in enumerate(a.phis):
                ds = subordinator_increments(phi, samplers[i], float(dt), size,
                                             streams.stream(seed, streams.SUBORDINATOR, i, index, k))
                normal = streams.stream(seed, streams.GAUSSIAN, i, index, k).standard_normal((size, a.dims[i]))
                out[:, k, slices[i]] = np.sqrt(2.0 * ds)[:, None] * normal
        return out

    parts = ordered_map(run, list(streams.chunks(n_paths)), workers, progress, "iasbm")
    return PathEnsemble(nodes, _assemble(parts, nodes.size, a.total_dim), seed, a.dims,
                        metadata={"kind": "iasbm"})


def sample_additive(coeffs: CoefficientSet, a: Anisotropy, time_grid: Sequence[float], n_paths: int,
                    seed: int, workers: int = 1, progress: bool = False,
                    triplet: Optional[AdditiveTriplet] = None) -> PathEnsemble:
    """
    Additive process with slab-frozen coefficients

    Gaussian part: variance 2 b_i(t_mid) dt per coordinate. Jump part: the block's
    subordinated jumps run on the clock a_i(t_mid) dt (TIME_ONLY) or on the floor
    of a_i(t_mid, .) plus compound Poisson remainder jumps (TIME_JUMP).

    Args:
        coeffs: Coefficient set
        a: Anisotropy
        time_grid: Increasing nodes starting at 0
        n_paths: Number of paths
        seed: Master seed
        workers: Chunk workers
        progress: Show a progress bar
        triplet: Prebuilt triplet on the same grid

    Returns:
        PathEnsemble; metadata["neglected_variance"] records the TIME_JUMP truncation
    """
    nodes = _check_time_grid(time_grid)
    _check_paths(n_paths)
    triplet = triplet or AdditiveTriplet.from_coefficients(coeffs, a, nodes)
    samplers = [JumpSampler(phi) for phi in a.phis]
    slices = a.block_slices()
    dts = np.diff(nodes)

    def run(chunk):
        index, start, stop = chunk
        size = stop - start
        out = np.zeros((size, dts.size, a.total_dim))
        for k, dt in enumerate(dts):
            for i in range(a.ell):
                jumps = samplers[i].increments(triplet.clock[k, i] * float(dt), size,
                                               streams.stream(seed, streams.SUBORDINATOR, i, index, k))
                variance = 2.0 * (triplet.diffusion[k, i] * float(dt) + jumps)
                normal = streams.stream(seed, streams.GAUSSIAN, i, index, k).standard_normal((size, a.dims[i]))
                out[:, k, slices[i]] = np.sqrt(variance)[:, None] * normal
                remainder = triplet.remainders.get((k, i))
                if remainder is not None and remainder.rate + abs(remainder.drift) > 0.0:
                    rng = streams.stream(seed, streams.JUMPS, i, index, k)
                    out[:, k, slices[i].start] += remainder.increments(float(dt), size, rng)
        return out

    parts = ordered_map(run, list(streams.chunks(n_paths)), workers, progress, "additive")
    return PathEnsemble(nodes, _assemble(parts, nodes.size, a.total_dim), seed, a.dims,
                        metadata={"kind": "additive", "mode": coeffs.mode.value,
                                  "neglected_variance": triplet.neglected_variance})
