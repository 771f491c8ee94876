"""
Jump integral with a y-dependent coefficient on a 1-D block

    (A u)(x) = int (u(x+y) - u(x) - u'(x) y 1_{|y|<=1}) a(y) j(|y|) dy

acts on e^{i xi x} as multiplication by

    m(xi) = 2 int_0^inf [(cos xi y - 1) a_s(y) + i (sin xi y - xi y 1_{y<=1}) a_a(y)] j(y) dy

with a_s, a_a the even and odd parts of a. The zone [0, h] is summed from
Taylor moments with an explicit remainder bound; [h, inf) uses Fourier-weighted
quadrature. Periodic u is integrated over the whole line, so no truncation
at half the period is needed.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import integrate

from src.bernstein.functions import BernsteinFunction
from src.common.errors import AccuracyError, ArgumentError
from src.kernels.heat_kernel import jump_kernel_value
from src.operators.grid import GridFunction

logger = logging.getLogger(__name__)

INNER_TOL = 1e-8
MAX_HALVINGS = 40
OUTER_EPSABS = 1e-11
SPECTRAL_TAIL_TOL = 1e-6
ODD_SAMPLES = np.geomspace(1e-4, 1e3, 48)

Coefficient = Callable[[np.ndarray], np.ndarray]


def _unit(y):
    return np.ones(np.shape(y))


@dataclass(frozen=True)
class _Parts:
    even: Callable[[float], float]
    odd: Callable[[float], float]
    has_odd: bool


def _split(a_coeff: Optional[Coefficient]) -> _Parts:
    a = a_coeff or _unit

    def scalar(y: float) -> float:
        return float(np.asarray(a(np.array([y])), dtype=float)[0])

    def even(y: float) -> float:
        return 0.5 * (scalar(y) + scalar(-y))

    def odd(y: float) -> float:
        return 0.5 * (scalar(y) - scalar(-y))

    odd_part = np.asarray(a(ODD_SAMPLES), dtype=float) - np.asarray(a(-ODD_SAMPLES), dtype=float)
    return _Parts(even=even, odd=odd, has_odd=bool(np.any(odd_part != 0.0)))


def _moment(weight: Callable[[float], float], j: Callable[[float], float], n: int, h: float) -> float:
    value, _ = integrate.quad(lambda y: y ** n * weight(y) * j(y), 0.0, h,
                              epsabs=0.0, epsrel=1e-12, limit=200)
    return value


def _inner_zone(parts: _Parts, j, xi_max: float) -> Tuple[float, Dict[int, float], Dict[int, float], float]:
    """Pick h with Taylor remainder below tolerance; return h, even/odd moments, bound"""
    h = 1.0 if xi_max <= 1.0 else 1.0 / xi_max
    scale = None
    for _ in range(MAX_HALVINGS):
        even = {n: _moment(parts.even, j, n, h) for n in (2, 4, 6)}
        odd = {n: _moment(parts.odd, j, n, h) for n in (3, 5)} if parts.has_odd else {3: 0.0, 5: 0.0}
        odd_abs7 = _moment(lambda y: abs(parts.odd(y)), j, 7, h) if parts.has_odd else 0.0
        bound = 2.0 * (xi_max ** 6 / 720.0 * abs(even[6]) + xi_max ** 7 / 5040.0 * odd_abs7)
        if scale is None:
            # size of the multiplier at the largest frequency
            scale = max(1.0, xi_max ** 2 * abs(even[2]))
        if bound < INNER_TOL * scale:
            return h, even, odd, bound
        h *= 0.5
    raise AccuracyError("inner Taylor zone did not reach its tolerance", bound, {"h": h})


def jump_multiplier(phi: BernsteinFunction, xi, a_coeff: Optional[Coefficient] = None) -> np.ndarray:
    """
    m(xi) for the 1-D jump operator with coefficient a(y)

    Args:
        phi: Bernstein function of the block (its Levy part supplies j)
        xi: Frequencies (any sign)
        a_coeff: Vectorized y -> a(y); None means a = 1

    Returns:
        Complex array shaped like xi; with a = 1 it equals -(phi(xi^2) - b xi^2)
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape, dtype=complex)
    if not phi.has_levy_measure:
        return out
    magnitudes = np.unique(np.abs(xi[xi != 0.0]))
    if magnitudes.size == 0:
        return out

    def j(y: float) -> float:
        return jump_kernel_value(phi, 1, y)

    parts = _split(a_coeff)
    h, even, odd, bound = _inner_zone(parts, j, float(magnitudes[-1]))

    def even_j(y: float) -> float:
        return parts.even(y) * j(y)

    def odd_j(y: float) -> float:
        return parts.odd(y) * j(y)

    # xi-independent pieces of the outer zone
    even_mass = sum(integrate.quad(even_j, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
                    for lo, hi in ((h, max(h, 1.0)), (max(h, 1.0), math.inf)) if hi > lo)
    odd_first = 0.0
    if parts.has_odd and h < 1.0:
        odd_first = integrate.quad(lambda y: y * odd_j(y), h, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)[0]

    values = {}
    for w in magnitudes:
        cos_part, _ = integrate.quad(even_j, h, math.inf, weight="cos", wvar=w,
                                     epsabs=OUTER_EPSABS, limlst=200)
        real = 2.0 * (cos_part - even_mass) + 2.0 * (-w ** 2 / 2.0 * even[2] + w ** 4 / 24.0 * even[4])
        imag = 0.0
        if parts.has_odd:
            sin_part, _ = integrate.quad(odd_j, h, math.inf, weight="sin", wvar=w,
                                         epsabs=OUTER_EPSABS, limlst=200)
            imag = 2.0 * (sin_part - w * odd_first) + 2.0 * (-w ** 3 / 6.0 * odd[3] + w ** 5 / 120.0 * odd[5])
        values[float(w)] = complex(real, imag)
    logger.debug("jump multiplier: %d frequencies, h=%.3g, inner bound %.2e", magnitudes.size, h, bound)

    flat = xi.reshape(-1)
    result = out.reshape(-1)
    for idx, x in enumerate(flat):
        if x == 0.0:
            continue
        m = values[float(abs(x))]
        result[idx] = m if x > 0.0 else m.conjugate()
    return result.reshape(xi.shape)


def top_octave_energy(u: GridFunction, axis: int) -> float:
    """Share of spectral energy above half the Nyquist frequency along a spatial axis"""
    spec = np.abs(u.spectrum()) ** 2
    xi = u.grid.wavenumbers(axis)
    nyquist = np.max(np.abs(xi))
    mask = np.abs(xi) > 0.5 * nyquist
    array_axis = u.axes[axis]
    shape = [1] * spec.ndim
    shape[array_axis] = xi.size
    total = float(spec.sum())
    if total == 0.0:
        return 0.0
    return float((spec * mask.reshape(shape)).sum() / total)


def apply_jump_quadrature(u: GridFunction, phi: BernsteinFunction, a_coeff: Optional[Coefficient] = None,
                          block: int = 0, workers: int = 1) -> GridFunction:
    """
    Apply the jump integral with coefficient a(y) along one 1-D block of u

    Args:
        u: Grid function (space or space-time)
        phi: Bernstein function of the block
        a_coeff: y -> a(y) in [c1, 1/c1]; None means a = 1
        block: Index of a 1-D block of u.grid
        workers: FFT workers

    Returns:
        GridFunction; metadata["accuracy_warning"] is set when the top octave
        carries more than 1e-6 of the spectral energy
    """
    grid = u.grid
    if grid.dims[block] != 1:
        raise ArgumentError("jump quadrature needs a 1-D block", {"block": block, "dim": grid.dims[block]})
    axis = grid.block_axes(block)[0]
    xi = grid.wavenumbers(axis)
    multiplier = jump_multiplier(phi, xi, a_coeff)

    shape = [1] * u.values.ndim
    shape[u.axes[axis]] = xi.size
    spec = u.spectrum(workers=workers) * multiplier.reshape(shape)

    tail = top_octave_energy(u, axis)
    metadata = {}
    if tail > SPECTRAL_TAIL_TOL:
        logger.warning("jump quadrature input not band-limited: top-octave energy %.2e", tail)
        metadata["accuracy_warning"] = f"top-octave energy {tail:.3e} exceeds {SPECTRAL_TAIL_TOL:g}"
    # m(-xi) = conj m(xi), so real input stays real
    return u.with_spectrum(spec, workers=workers, **metadata)
