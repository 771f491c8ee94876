"""
Heat kernels of subordinate Brownian motion by radial Fourier inversion

p(t, r) is recovered from its symbol e^{-t phi(|xi|^2)}:
    d=1: (1/pi)      int_0^Xi g(rho) cos(rho r) drho
    d=2: (1/(2 pi))  int_0^Xi rho g(rho) J0(rho r) drho
    d=3: (1/(2pi^2)) int_0^Xi rho^2 g(rho) j0(rho r) drho
with g = e^{-t phi(rho^2)} and Xi cut where t phi(Xi^2) reaches the truncation level.
Operator powers and axis derivatives enter as extra factors of g.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import jvp, spherical_jn

from src.bernstein.anisotropy import Anisotropy
from src.bernstein.functions import BernsteinFunction, LevyKind
from src.common.errors import AccuracyError, ArgumentError, DomainError

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-10
QUAD_FAIL = 1e-8
# e^{-46} < 1e-20
TRUNCATION_LEVEL = 46.0
MAX_POWER = 4
NU_MENU = (0.25, 0.5, 0.75, 1.0)
MAX_PANELS = 2000

SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


@dataclass(frozen=True)
class KernelQuery:
    """One kernel evaluation phi(Delta)^{nu k} D^m p(t, r)"""
    phi: BernsteinFunction
    dim: int
    t: float
    r: float
    k: int = 0
    m: int = 0
    nu: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ArgumentError("kernel dimension must be 1, 2 or 3", {"dim": self.dim})
        if not (self.t > 0.0) or not math.isfinite(self.t):
            raise DomainError("kernel time must be positive", {"t": self.t})
        if not (self.r >= 0.0) or not math.isfinite(self.r):
            raise DomainError("kernel radius must be nonnegative", {"r": self.r})
        if not (0 <= self.k <= MAX_POWER and 0 <= self.m <= MAX_POWER):
            raise ArgumentError("operator power and derivative order are limited to 0..4",
                                {"k": self.k, "m": self.m})
        if not (0.0 < self.nu <= 1.0):
            raise ArgumentError("nu must lie in (0, 1]", {"nu": self.nu})


@dataclass(frozen=True)
class KernelValue:
    value: float
    abs_error_estimate: float
    zero_measure: bool = False


def _check_has_density(phi: BernsteinFunction):
    # a bounded phi belongs to a compound Poisson subordinator with an atom at S_t = 0
    if phi.is_bounded:
        raise DomainError("bounded phi has no transition density", {"phi": repr(phi)})


def _phi_at(phi: BernsteinFunction, lam: float) -> float:
    return 0.0 if lam <= 0.0 else phi.eval(lam)


def cutoff(phi: BernsteinFunction, t: float, k: int = 0, m: int = 0) -> float:
    """Frequency Xi with t phi(Xi^2) equal to the truncation level (raised for polynomial factors)"""
    level = (TRUNCATION_LEVEL + 4.0 * (k + m)) / t
    return math.sqrt(phi.eval_inverse(level))


def _spherical_j0_derivative(order: int) -> Callable[[float], float]:
    """d^m/dz^m j0(z) as a finite sum of spherical Bessel functions"""
    # j0^{(m)}(z) = (1/2) int_{-1}^1 (is)^m e^{izs} ds and s^m = sum_n c_n P_n(s)
    coeffs = legendre.poly2leg([0.0] * order + [1.0])
    terms = [(n, c * ((1j) ** (order + n)).real) for n, c in enumerate(coeffs) if abs(c) > 0.0]

    def derivative(z: float) -> float:
        return float(sum(w * spherical_jn(n, z) for n, w in terms))

    return derivative


def _symbol_factor(q: KernelQuery) -> Callable[[float], float]:
    """g(rho) = (-1)^k phi(rho^2)^{nu k} e^{-t phi(rho^2)}"""
    sign = -1.0 if q.k % 2 else 1.0
    power = q.nu * q.k

    def g(rho: float) -> float:
        value = _phi_at(q.phi, rho * rho)
        factor = value ** power if power > 0.0 else 1.0
        return sign * factor * math.exp(-q.t * value)

    return g


def _quad_panels(integrand: Callable[[float], float], edges: Sequence[float],
                 epsabs: float) -> Tuple[float, float]:
    total, error = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, err = integrate.quad(integrand, a, b, epsabs=epsabs, epsrel=QUAD_EPSREL, limit=200)
        total += value
        error += err
    return total, error


def _panel_edges(xi: float, r: float) -> np.ndarray:
    if r <= 0.0:
        return np.array([0.0, xi])
    n_panels = int(math.ceil(xi * r / math.pi))
    if n_panels <= 1:
        return np.array([0.0, xi])
    if n_panels > MAX_PANELS:
        logger.debug("panel count %d capped at %d", n_panels, MAX_PANELS)
        return np.linspace(0.0, xi, MAX_PANELS + 1)
    edges = np.arange(n_panels) * (math.pi / r)
    return np.append(edges, xi)


def _invert_1d(q: KernelQuery, g, xi: float, epsabs: float) -> Tuple[float, float]:
    m = q.m
    if m % 2 == 0:
        sign = (-1.0) ** (m // 2)
        weight = "cos"
    else:
        sign = (-1.0) ** ((m + 1) // 2)
        weight = "sin"

    def integrand(rho: float) -> float:
        return rho ** m * g(rho) if m else g(rho)

    if q.r == 0.0:
        if weight == "sin":
            return 0.0, 0.0
        value, err = integrate.quad(integrand, 0.0, xi, epsabs=epsabs, epsrel=QUAD_EPSREL, limit=400)
    else:
        value, err = integrate.quad(integrand, 0.0, xi, weight=weight, wvar=q.r,
                                    epsabs=epsabs, epsrel=QUAD_EPSREL, limit=1000)
    return sign * value / math.pi, err / math.pi


def _invert_2d(q: KernelQuery, g, xi: float, epsabs: float) -> Tuple[float, float]:
    m, r = q.m, q.r

    def integrand(rho: float) -> float:
        return rho ** (m + 1) * g(rho) * float(jvp(0, rho * r, m))

    value, err = _quad_panels(integrand, _panel_edges(xi, r), epsabs)
    return value / (2.0 * math.pi), err / (2.0 * math.pi)


def _invert_3d(q: KernelQuery, g, xi: float, epsabs: float) -> Tuple[float, float]:
    m, r = q.m, q.r
    j0m = _spherical_j0_derivative(m)

    def integrand(rho: float) -> float:
        return rho ** (m + 2) * g(rho) * j0m(rho * r)

    value, err = _quad_panels(integrand, _panel_edges(xi, r), epsabs)
    scale = 2.0 * math.pi ** 2
    return value / scale, err / scale


_INVERTERS = {1: _invert_1d, 2: _invert_2d, 3: _invert_3d}


def _gaussian(q: KernelQuery) -> float:
    b = q.phi.effective_drift
    return (4.0 * math.pi * b * q.t) ** (-q.dim / 2.0) * math.exp(-q.r ** 2 / (4.0 * b * q.t))


def kernel_with_operator_powers(q: KernelQuery, epsabs: float = QUAD_EPSABS) -> KernelValue:
    """
    phi(Delta)^{nu k} D^m p(t, .) at radius r, derivative along the first axis

    Args:
        q: Kernel query
        epsabs: Absolute quadrature target (mass sweeps pass a scale-aware value)

    Returns:
        KernelValue

    Raises:
        DomainError: phi bounded (no density)
        AccuracyError: quadrature missed 1e-8 * max(1, |value|)
    """
    _check_has_density(q.phi)
    if q.k == 0 and q.m == 0 and not q.phi.has_levy_measure:
        return KernelValue(value=_gaussian(q), abs_error_estimate=0.0)

    xi = cutoff(q.phi, q.t, q.k, q.m)
    value, error = _INVERTERS[q.dim](q, _symbol_factor(q), xi, epsabs)
    if not math.isfinite(value) or error > QUAD_FAIL * max(1.0, abs(value)):
        raise AccuracyError("kernel quadrature did not converge", error,
                            {"t": q.t, "r": q.r, "dim": q.dim, "k": q.k, "m": q.m, "value": value})
    return KernelValue(value=float(value), abs_error_estimate=float(error))


def heat_kernel(q: KernelQuery, epsabs: float = QUAD_EPSABS) -> KernelValue:
    """p(t, r); the query must carry k = m = 0"""
    if q.k or q.m:
        raise ArgumentError("heat_kernel takes k = m = 0; use kernel_with_operator_powers",
                            {"k": q.k, "m": q.m})
    return kernel_with_operator_powers(q, epsabs)


def heat_kernel_value(phi: BernsteinFunction, dim: int, t: float, r: float) -> float:
    return heat_kernel(KernelQuery(phi=phi, dim=dim, t=t, r=r)).value


# ========== JUMP KERNELS ==========

def stable_jump_constant(dim: int, alpha: float) -> float:
    """c(d, alpha) in j(r) = c r^{-d-2 alpha} for phi = lambda^alpha"""
    return (alpha * 4.0 ** alpha * gamma_fn(dim / 2.0 + alpha)
            / (math.pi ** (dim / 2.0) * gamma_fn(1.0 - alpha)))


def jump_kernel(phi: BernsteinFunction, dim: int, r: float) -> KernelValue:
    """
    j(r) = int (4 pi t)^{-d/2} e^{-r^2/4t} mu(dt)

    Args:
        phi: Bernstein function
        dim: Block dimension 1..3
        r: Radius > 0

    Returns:
        KernelValue; zero_measure is set when phi has no Levy part
    """
    if dim not in (1, 2, 3):
        raise ArgumentError("kernel dimension must be 1, 2 or 3", {"dim": dim})
    if not (r > 0.0):
        raise DomainError("jump kernel needs r > 0", {"r": r})
    if not phi.has_levy_measure:
        return KernelValue(value=0.0, abs_error_estimate=0.0, zero_measure=True)

    if phi.kind == LevyKind.stable:
        value = stable_jump_constant(dim, phi.alpha) * r ** (-dim - 2.0 * phi.alpha)
        return KernelValue(value=float(value), abs_error_estimate=0.0)
    if phi.kind == LevyKind.atoms:
        value = sum(w * (4.0 * math.pi * t) ** (-dim / 2.0) * math.exp(-r * r / (4.0 * t))
                    for t, w in phi.atoms)
        return KernelValue(value=float(value), abs_error_estimate=0.0)

    def gaussian_in_t(t):
        t = np.asarray(t, dtype=float)
        return (4.0 * math.pi * t) ** (-dim / 2.0) * np.exp(-r * r / (4.0 * t))

    value = phi.levy_integral(gaussian_in_t, focus=r * r / 4.0)
    return KernelValue(value=float(value), abs_error_estimate=abs(value) * QUAD_FAIL)


def jump_kernel_value(phi: BernsteinFunction, dim: int, r: float) -> float:
    return jump_kernel(phi, dim, r).value


# ========== PRODUCT KERNEL ==========

def product_kernel(a: Anisotropy, t: float, x: Sequence[float]) -> KernelValue:
    """
    prod_i p_i(t, |x_i|) over the blocks of x

    Args:
        a: Anisotropy
        t: Time > 0
        x: Point of length a.total_dim

    Returns:
        KernelValue with a first-order error estimate
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (a.total_dim,):
        raise ArgumentError("point does not match the anisotropy", {"len": int(x.size), "d": a.total_dim})
    parts: List[KernelValue] = []
    for phi, dim, block in zip(a.phis, a.dims, a.block_slices()):
        r = float(np.linalg.norm(x[block]))
        parts.append(heat_kernel(KernelQuery(phi=phi, dim=dim, t=t, r=r)))
    values = [p.value for p in parts]
    value = float(np.prod(values))
    error = 0.0
    for i, part in enumerate(parts):
        error += part.abs_error_estimate * float(np.prod([abs(v) for j, v in enumerate(values) if j != i]))
    return KernelValue(value=value, abs_error_estimate=error)


# ========== MASS AND SEMIGROUP ==========

def kernel_scale(phi: BernsteinFunction, t: float) -> float:
    """Natural spatial scale (phi^{-1}(1/t))^{-1/2}"""
    return 1.0 / math.sqrt(phi.eval_inverse(1.0 / t))


def _mass_on_grid(values: np.ndarray, radii: np.ndarray, dim: int, step: float) -> float:
    area = SPHERE_AREA[dim]
    # int |q| r^{d-1} dr = int |q| r^d du with u = log r
    body = np.abs(values) * radii ** dim
    total = area * step * (body.sum() - 0.5 * (body[0] + body[-1]))
    head = area * body[0] / dim
    tail = 0.0
    if body[-1] >= 1e-12 and values[-2] != 0.0:
        slope = (math.log(abs(values[-1])) - math.log(abs(values[-2]))) / step
        if slope + dim < 0.0:
            tail = area * body[-1] / (-slope - dim)
        else:
            tail = math.inf
    return float(total + head + tail)


def kernel_mass(phi: BernsteinFunction, dim: int, t: float, k: int = 0, nu: float = 1.0,
                step: float = 0.1) -> float:
    """
    t^{nu k} int |phi(Delta)^{nu k} p(t, .)| dx by log-radius trapezoid

    Radii run from 1e-6 to 1e4 kernel scales; the head is closed by a constant
    extension and the tail by the local power law of the last two nodes.

    Args:
        phi: Bernstein function with a density
        dim: Block dimension
        t: Time > 0
        k: Operator power
        nu: Fractional exponent
        step: Log-radius spacing

    Returns:
        The L1 quantity (1 for k = 0 up to quadrature error)
    """
    scale = kernel_scale(phi, t)
    u = np.arange(math.log(1e-6 * scale), math.log(1e4 * scale) + 0.5 * step, step)
    radii = np.exp(u)
    origin = kernel_with_operator_powers(KernelQuery(phi=phi, dim=dim, t=t, r=0.0, k=k, nu=nu))
    epsabs = max(1e-14 * abs(origin.value), 1e-300)
    values = np.array([
        kernel_with_operator_powers(KernelQuery(phi=phi, dim=dim, t=t, r=float(r), k=k, nu=nu),
                                    epsabs=epsabs).value
        for r in radii
    ])
    mass = _mass_on_grid(values, radii, dim, step)
    logger.debug("kernel_mass t=%g k=%d step=%g -> %.10g", t, k, step, mass)
    return t ** (nu * k) * mass


def chapman_kolmogorov_defect(phi: BernsteinFunction, s: float, t: float, x: float) -> float:
    """|int p(s, x-y) p(t, y) dy - p(s+t, x)| for a 1-D block"""
    def integrand(y: float) -> float:
        return heat_kernel_value(phi, 1, s, abs(x - y)) * heat_kernel_value(phi, 1, t, abs(y))

    lhs = 0.0
    for a, b in ((-math.inf, min(0.0, x)), (min(0.0, x), max(0.0, x)), (max(0.0, x), math.inf)):
        if a == b:
            continue
        value, _ = integrate.quad(integrand, a, b, epsabs=1e-11, epsrel=1e-9, limit=400)
        lhs += value
    return abs(lhs - heat_kernel_value(phi, 1, s + t, abs(x)))
