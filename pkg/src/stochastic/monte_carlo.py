"""
Monte Carlo solution u(t, x) = int_0^t E f(s, x + Z_t - Z_s) ds and transform checks
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import interpolate, ndimage

from src.bernstein.anisotropy import Anisotropy
from src.bernstein.functions import BernsteinFunction
from src.common.errors import ArgumentError
from src.common.parallel import ordered_map
from src.common.report import EstimateReport, RatioSample
from src.operators.coefficients import CoefficientSet
from src.operators.grid import FieldKind, GridFunction, TorusGrid
from src.stochastic import rng as streams
from src.stochastic.processes import AdditiveTriplet, PathEnsemble, sample_additive

logger = logging.getLogger(__name__)

ACTIVE_MODE_TOL = 1e-14
DEFAULT_STEPS = 32
SIGMA_FACTOR = 4.0

Forcing = Union[GridFunction, Callable[[float, np.ndarray], np.ndarray]]


class Interpolation(str, Enum):
    """How a gridded forcing is evaluated off the grid"""
    TRIGONOMETRIC = "trigonometric"
    MULTILINEAR = "multilinear"


@dataclass
class MonteCarloSolution:
    """Empirical mean u(t_eval, .) with its per-point standard error"""
    u: GridFunction
    standard_error: GridFunction
    n_paths: int
    seed: int
    t_eval: float
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class _Moments:
    """Count, mean and centered second moment, merged pairwise"""
    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, rows: np.ndarray, outer: bool) -> "_Moments":
        mean = rows.mean(axis=0)
        centered = rows - mean
        m2 = centered.T @ centered if outer else np.sum(centered * centered, axis=0)
        return cls(rows.shape[0], mean, m2)

    def merge(self, other: "_Moments", outer: bool) -> "_Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        spread = np.outer(delta, delta) if outer else delta * delta
        return _Moments(n, self.mean + delta * (other.count / n),
                        self.m2 + other.m2 + spread * (self.count * other.count / n))


def _reduce(parts: List[_Moments], outer: bool) -> _Moments:
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part, outer)
    return total


# ========== INTERPOLATION ==========

def periodic_interpolator(f: GridFunction) -> Callable[[float, np.ndarray], np.ndarray]:
    """
    Multilinear evaluation of a gridded function at arbitrary points

    Space is periodic; time is linear between nodes and clamped to the axis.

    Returns:
        g(s, x) with x of shape (..., d), returning shape (...)
    """
    grid = f.grid
    spacing = np.array([grid.blocks[grid.axis_blocks[k]].spacing for k in range(grid.total_dim)])
    values = np.asarray(f.values, dtype=float)

    def spatial(slab: np.ndarray, x: np.ndarray) -> np.ndarray:
        coords = (x / spacing).reshape(-1, grid.total_dim).T
        out = ndimage.map_coordinates(slab, coords, order=1, mode="grid-wrap")
        return out.reshape(x.shape[:-1])

    if f.kind == FieldKind.space:
        return lambda s, x: spatial(values, np.asarray(x, dtype=float))

    nodes = grid.time.nodes

    def space_time(s: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pos = float(np.clip((s - nodes[0]) / grid.time.dt, 0.0, grid.time.steps))
        lo = min(int(math.floor(pos)), grid.time.steps - 1)
        w = pos - lo
        return (1.0 - w) * spatial(values[lo], x) + w * spatial(values[lo + 1], x)

    return space_time


# ========== MONTE CARLO SOLUTION ==========

def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    dts = np.diff(nodes)
    w = np.zeros(nodes.size)
    w[:-1] += 0.5 * dts
    w[1:] += 0.5 * dts
    return w


def _points(grid: TorusGrid) -> np.ndarray:
    mesh = np.meshgrid(*[grid.coordinates(k) for k in range(grid.total_dim)], indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _active_spectrum(f: GridFunction, nodes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients c_k(s) on the path nodes for the active modes, and their frequencies"""
    spec = f.spectrum()
    grid = f.grid
    if f.kind == FieldKind.space:
        spec = np.broadcast_to(spec, (nodes.size,) + spec.shape)
    else:
        # linear in time between the forcing's own nodes
        real = interpolate.interp1d(grid.time.nodes, spec.real, axis=0, bounds_error=False,
                                    fill_value=(spec.real[0], spec.real[-1]))
        imag = interpolate.interp1d(grid.time.nodes, spec.imag, axis=0, bounds_error=False,
                                    fill_value=(spec.imag[0], spec.imag[-1]))
        spec = real(nodes) + 1j * imag(nodes)
    flat = spec.reshape(nodes.size, -1)
    peak = float(np.max(np.abs(flat), initial=0.0))
    active = np.flatnonzero(np.max(np.abs(flat), axis=0) > ACTIVE_MODE_TOL * peak) if peak > 0.0 \
        else np.zeros(0, dtype=int)
    waves = np.meshgrid(*[grid.wavenumbers(k) for k in range(grid.total_dim)], indexing="ij")
    xi = np.stack([w.ravel() for w in waves], axis=-1)[active]
    return flat[:, active] / float(np.prod(grid.spatial_shape)), xi


def _path_grid(f: Forcing, t_eval: float, time_grid: Optional[Sequence[float]]) -> np.ndarray:
    if time_grid is not None:
        return np.asarray(time_grid, dtype=float)
    if isinstance(f, GridFunction) and f.kind == FieldKind.space_time:
        return f.grid.time.nodes
    return np.linspace(0.0, t_eval, DEFAULT_STEPS + 1)


def mc_solve(f: Forcing, coeffs: Optional[CoefficientSet], a: Anisotropy, t_eval: float, x_grid: TorusGrid,
             n_paths: int, seed: int, time_grid: Optional[Sequence[float]] = None, workers: int = 1,
             progress: bool = False, interpolation: Interpolation = Interpolation.TRIGONOMETRIC,
             ensemble: Optional[PathEnsemble] = None) -> MonteCarloSolution:
    """
    Probabilistic solution of u_t = L(t) u + f, u(0) = 0, at time t_eval

    Every path's increments Z_t - Z_s are reused across all s; the s-integral is the
    trapezoid rule over the path nodes up to t_eval. A gridded f is expanded in its
    active Fourier modes (exact for trigonometric polynomials) unless MULTILINEAR
    interpolation is requested; callables are evaluated directly.

    Args:
        f: GridFunction (space or space-time) or callable f(s, x) with x of shape (..., d)
        coeffs: Coefficient set (None: a = 1, b = b0)
        a: Anisotropy
        t_eval: Evaluation time, a node of the path grid
        x_grid: Spatial output grid
        n_paths: Number of paths
        seed: Master seed
        time_grid: Path nodes (default: the forcing's time nodes, else 32 uniform steps to t_eval)
        workers: Chunk workers
        progress: Show progress bars
        interpolation: Off-grid evaluation of a gridded f
        ensemble: Presampled paths of the same process

    Returns:
        MonteCarloSolution on x_grid

    Raises:
        ArgumentError: t_eval beyond the path horizon or not a node
    """
    if x_grid.time is not None:
        x_grid = x_grid.spatial()
    x_grid.check_dims(a.dims)
    coeffs = coeffs or CoefficientSet.unit(a)
    if ensemble is None:
        nodes = _path_grid(f, t_eval, time_grid)
        if t_eval > nodes[-1] * (1.0 + 1e-12):
            raise ArgumentError("t_eval beyond the path horizon", {"t_eval": t_eval, "horizon": float(nodes[-1])})
        ensemble = sample_additive(coeffs, a, nodes, n_paths, seed, workers=workers, progress=progress)
    nodes = ensemble.time_grid
    if t_eval > nodes[-1] * (1.0 + 1e-12):
        raise ArgumentError("t_eval beyond the path horizon", {"t_eval": t_eval, "horizon": float(nodes[-1])})
    k_eval = ensemble.node_index(t_eval)
    s_nodes = nodes[:k_eval + 1]
    weights = _trapezoid_weights(s_nodes) if k_eval > 0 else np.zeros(1)
    points = _points(x_grid)
    path_chunks = list(streams.chunks(ensemble.n_paths))

    if isinstance(f, GridFunction) and interpolation == Interpolation.MULTILINEAR:
        f = periodic_interpolator(f)

    if isinstance(f, GridFunction):
        coeff_path, xi = _active_spectrum(f, s_nodes)
        route = "spectral"

        def run(chunk):
            _, start, stop = chunk
            z = ensemble.values[start:stop]
            g = np.zeros((stop - start, xi.shape[0]), dtype=complex)
            for j in range(k_eval + 1):
                phase = (z[:, k_eval, :] - z[:, j, :]) @ xi.T
                g += weights[j] * coeff_path[j] * np.exp(1j * phase)
            return _Moments.of(np.concatenate([g.real, g.imag], axis=1), outer=True)

        if xi.shape[0] == 0:
            zeros = np.zeros(x_grid.spatial_shape)
            u_values, se_values = zeros, zeros.copy()
        else:
            moments = _reduce(ordered_map(run, path_chunks, workers, progress, "mc_solve"), outer=True)
            k = xi.shape[0]
            plane = np.exp(1j * points @ xi.T)
            mean = moments.mean[:k] + 1j * moments.mean[k:]
            u_values = np.real(plane @ mean).reshape(x_grid.spatial_shape)
            load = np.concatenate([plane.real, -plane.imag], axis=1)
            cov = moments.m2 / max(moments.count - 1, 1)
            var = np.einsum("xi,ij,xj->x", load, cov, load)
            se_values = np.sqrt(np.maximum(var, 0.0) / moments.count).reshape(x_grid.spatial_shape)
    else:
        route = "direct"

        def run(chunk):
            _, start, stop = chunk
            z = ensemble.values[start:stop]
            acc = np.zeros((stop - start, points.shape[0]))
            for j in range(k_eval + 1):
                shifted = points[None, :, :] + (z[:, k_eval, :] - z[:, j, :])[:, None, :]
                acc += weights[j] * np.real(np.asarray(f(float(s_nodes[j]), shifted)))
            return _Moments.of(acc, outer=False)

        moments = _reduce(ordered_map(run, path_chunks, workers, progress, "mc_solve"), outer=False)
        u_values = moments.mean.reshape(x_grid.spatial_shape)
        var = moments.m2 / max(moments.count - 1, 1)
        se_values = np.sqrt(np.maximum(var, 0.0) / moments.count).reshape(x_grid.spatial_shape)

    logger.info("mc_solve: %d paths, t=%g, route=%s, max SE %.3e",
                ensemble.n_paths, t_eval, route, float(np.max(se_values)))
    metadata = {"route": route, "neglected_variance": ensemble.metadata.get("neglected_variance", 0.0)}
    return MonteCarloSolution(GridFunction(x_grid, u_values), GridFunction(x_grid, se_values),
                              ensemble.n_paths, ensemble.master_seed, float(t_eval), metadata)


# ========== TRANSFORM CHECKS ==========

def _check_lists(**lists: Sequence) -> None:
    for name, values in lists.items():
        if values is None or len(values) == 0:
            raise ArgumentError(f"{name} must be nonempty")


def char_function_check(ensemble: PathEnsemble, model: Union[Anisotropy, AdditiveTriplet],
                        xi_list: Sequence[Sequence[float]], t_list: Sequence[float]) -> EstimateReport:
    """
    max over (xi, t) of |mean exp(i xi . X_t) - exp(-exponent)|, passing below 4 / sqrt(N)

    The exponent is t sum_i phi_i(|xi_i|^2) for an Anisotropy and the slab-integrated
    exponent for an AdditiveTriplet.
    """
    _check_lists(xi_list=xi_list, t_list=t_list)
    samples: List[RatioSample] = []
    for xi, t in itertools.product(xi_list, t_list):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (ensemble.total_dim,):
            raise ArgumentError("frequency vector has the wrong dimension",
                                {"expected": ensemble.total_dim, "got": list(xi.shape)})
        empirical = np.mean(np.exp(1j * (ensemble.at(t) @ xi)))
        if isinstance(model, AdditiveTriplet):
            target = np.exp(-model.exponent(xi, t))
        else:
            target = math.exp(-t * model.symbol_at(xi))
        samples.append(RatioSample(tag=f"xi={xi.tolist()},t={t:g}", value=float(abs(empirical - target))))
    threshold = SIGMA_FACTOR / math.sqrt(ensemble.n_paths)
    report = EstimateReport.evaluate("char_function", samples, threshold=threshold,
                                     metadata={"n_paths": ensemble.n_paths, "seed": ensemble.master_seed,
                                               "stream_scheme": ensemble.stream_scheme})
    report.metadata["max_deviation"] = report.sup
    logger.info("char_function_check: max deviation %.3e vs %.3e", report.sup, threshold)
    return report


def laplace_check(ensemble: PathEnsemble, phi: BernsteinFunction, lambdas: Sequence[float],
                  times: Sequence[float]) -> EstimateReport:
    """max |mean exp(-lam S_t) - exp(-t phi(lam))| over a subordinator ensemble"""
    _check_lists(lambdas=lambdas, times=times)
    if ensemble.total_dim != 1:
        raise ArgumentError("laplace_check needs a one-dimensional subordinator ensemble")
    samples = []
    for lam, t in itertools.product(lambdas, times):
        empirical = float(np.mean(np.exp(-lam * ensemble.at(t)[:, 0])))
        target = math.exp(-t * float(phi.evaluate(lam)))
        samples.append(RatioSample(tag=f"lambda={lam:g},t={t:g}", value=abs(empirical - target)))
    return EstimateReport.evaluate("laplace_transform", samples,
                                   threshold=SIGMA_FACTOR / math.sqrt(ensemble.n_paths),
                                   metadata={"n_paths": ensemble.n_paths, "seed": ensemble.master_seed})
