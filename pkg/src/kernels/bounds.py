"""
Kernel bound sweeps and the Levy power integral

Constants in the kernel upper bounds are not explicit, so a bound is
reported as the supremum of value / bound over (t, r) log-grids together
with its change under x2 grid refinement.
"""
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from src.bernstein.functions import BernsteinFunction
from src.bernstein.scaling import certificate_for
from src.common.errors import ArgumentError
from src.common.parallel import ordered_map
from src.common.report import EstimateReport, RatioSample, relative_delta
from src.kernels.heat_kernel import NU_MENU, KernelQuery, kernel_mass, kernel_with_operator_powers

logger = logging.getLogger(__name__)

BOUND_DELTA_CAP = 0.10


def kernel_bound(phi: BernsteinFunction, dim: int, t: float, r: float, k: int = 0, m: int = 0,
                 nu: float = 1.0, bound_nu: float = 0.5) -> float:
    """
    min(t^{-nu k} (phi^{-1}(1/t))^{(d+m)/2}, t^{b - nu k} phi(r^{-2})^b r^{-d-m}) with b = bound_nu
    """
    power = nu * k
    near = t ** (-power) * phi.eval_inverse(1.0 / t) ** ((dim + m) / 2.0)
    if r <= 0.0:
        return near
    far = t ** (bound_nu - power) * phi.eval(r ** -2) ** bound_nu * r ** (-dim - m)
    return min(near, far)


def bound_ratio(phi: BernsteinFunction, dim: int, t: float, r: float, k: int = 0, m: int = 0,
                nu: float = 1.0, bound_nu: float = 0.5) -> Tuple[float, float, float]:
    """(|phi(Delta)^{nu k} D^m p| / bound, value, error estimate) at one (t, r)"""
    kv = kernel_with_operator_powers(KernelQuery(phi=phi, dim=dim, t=t, r=r, k=k, m=m, nu=nu))
    return abs(kv.value) / kernel_bound(phi, dim, t, r, k, m, nu, bound_nu), kv.value, kv.abs_error_estimate


def _check_inputs(phi: BernsteinFunction, nu: float, bound_nu: float):
    if nu not in NU_MENU or bound_nu not in NU_MENU:
        raise ArgumentError("nu and bound_nu must be one of 0.25, 0.5, 0.75, 1",
                            {"nu": nu, "bound_nu": bound_nu})
    cert = certificate_for(phi)
    if not cert.passed:
        raise ArgumentError("scaling certificate failed; kernel bounds do not apply",
                            {"phi": repr(phi), "delta0": cert.delta0})


def kernel_bound_sweep(phi: BernsteinFunction, dim: int, k: int = 0, m: int = 0, nu: float = 1.0,
                       bound_nu: float = 0.5, t_range: Tuple[float, float] = (0.1, 10.0),
                       r_range: Tuple[float, float] = (0.01, 10.0), n_t: int = 5, n_r: int = 5,
                       include_origin: bool = False, mass_times: Optional[Sequence[float]] = None,
                       workers: int = 1, progress: bool = False
                       ) -> Tuple[EstimateReport, List[Dict[str, float]]]:
    """
    Sweep the pointwise bound over the refined grid and, optionally, the L1 quantity

    The refined grid has 2n-1 log-spaced points per axis; every other point
    forms the coarse grid, so one sweep yields both suprema.

    Args:
        phi: Bernstein function passing its scaling certificate
        dim: Block dimension
        k, m, nu: Operator power, axis derivative order, fractional exponent
        bound_nu: Exponent of the far-field bound
        t_range, r_range: Log-grid ends
        n_t, n_r: Coarse grid sizes
        include_origin: Add r = 0 to the radius grid
        mass_times: Times for the L1 quantity (empty or None skips it)
        workers: Ordered pool size
        progress: tqdm bar

    Returns:
        (EstimateReport, rows of t, r, value, err_est on the refined grid)
    """
    _check_inputs(phi, nu, bound_nu)
    if n_t < 2 or n_r < 2:
        raise ArgumentError("kernel sweeps need at least two points per axis", {"n_t": n_t, "n_r": n_r})

    ts = np.geomspace(t_range[0], t_range[1], 2 * n_t - 1)
    rs = np.geomspace(r_range[0], r_range[1], 2 * n_r - 1)
    if include_origin:
        rs = np.concatenate([[0.0], rs])
    points = [(i, j) for i in range(ts.size) for j in range(rs.size)]

    def work(point):
        i, j = point
        return bound_ratio(phi, dim, float(ts[i]), float(rs[j]), k, m, nu, bound_nu)

    results = ordered_map(work, points, workers=workers, progress=progress, desc="kernel grid")

    offset = 1 if include_origin else 0
    fine_sup, coarse_sup = 0.0, 0.0
    samples: List[RatioSample] = []
    rows: List[Dict[str, float]] = []
    for (i, j), (ratio, value, err) in zip(points, results):
        rows.append({"t": float(ts[i]), "r": float(rs[j]), "value": value, "err_est": err})
        fine_sup = max(fine_sup, ratio)
        on_coarse = i % 2 == 0 and (j < offset or (j - offset) % 2 == 0)
        if on_coarse:
            coarse_sup = max(coarse_sup, ratio)
            samples.append(RatioSample(tag=f"t={ts[i]:.6g},r={rs[j]:.6g}", value=ratio))
    grid_delta = relative_delta(coarse_sup, fine_sup)

    metadata: Dict[str, Any] = {
        "phi": repr(phi), "dim": dim, "k": k, "m": m, "nu": nu, "bound_nu": bound_nu,
        "grid_delta": grid_delta, "coarse_sup": coarse_sup,
    }
    delta = grid_delta
    if mass_times:
        coarse_mass = [kernel_mass(phi, dim, float(t), k, nu, step=0.1) for t in mass_times]
        fine_mass = [kernel_mass(phi, dim, float(t), k, nu, step=0.05) for t in mass_times]
        l1_delta = relative_delta(max(coarse_mass), max(fine_mass))
        metadata.update({"l1_sup": max(fine_mass), "l1_delta": l1_delta,
                         "l1_times": [float(t) for t in mass_times]})
        delta = max(delta, l1_delta)
        if not math.isfinite(max(fine_mass)):
            fine_sup = math.inf

    logger.info("kernel bound sweep: sup_ratio=%.6g delta=%.3g", fine_sup, delta)
    report = EstimateReport.evaluate(
        name="kernel_bound",
        samples=samples,
        refinement_delta=delta,
        delta_cap=BOUND_DELTA_CAP,
        sup=fine_sup,
        metadata=metadata,
    )
    return report, rows


def kernel_bound_report(phi: BernsteinFunction, dim: int, k: int = 0, m: int = 0, nu: float = 1.0,
                        bound_nu: float = 0.5, **sweep: Any) -> EstimateReport:
    """Bound report of kernel_bound_sweep without the grid rows"""
    report, _ = kernel_bound_sweep(phi, dim, k, m, nu, bound_nu, **sweep)
    return report


def levy_power_ratio(phi: BernsteinFunction, nu: float, lam: float) -> float:
    """int_{1/lam}^inf r^{-1} phi(r^{-2})^nu dr / phi(lam^2)^nu, in u = log r"""
    def integrand(u: float) -> float:
        return float(phi.evaluate(np.array([math.exp(-2.0 * u)]))[0]) ** nu

    lower = -math.log(lam)
    value, _ = integrate.quad(integrand, lower, math.inf, epsabs=0.0, epsrel=1e-10, limit=400)
    return value / phi.eval(lam * lam) ** nu


def levy_integral_check(phi: BernsteinFunction, nu: float, lambdas: Sequence[float],
                        refine: bool = True) -> EstimateReport:
    """
    Sup over lambda of the Levy power ratio (1/(2 alpha nu) for STABLE(alpha))

    Args:
        phi: Bernstein function passing its scaling certificate
        nu: Exponent from the nu menu
        lambdas: Positive log-spaced lambdas
        refine: Compare against the x2 refined lambda grid

    Returns:
        EstimateReport; a divergent integral is a failing report
    """
    _check_inputs(phi, nu, 0.5)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < 1 or np.any(lambdas <= 0.0):
        raise ArgumentError("lambda grid must be positive and nonempty")

    samples = [RatioSample(tag=f"lambda={lam:.6g}", value=levy_power_ratio(phi, nu, float(lam)))
               for lam in lambdas]
    sup = max(s.value for s in samples)
    delta = 0.0
    if refine and lambdas.size > 1:
        fine = np.geomspace(lambdas[0], lambdas[-1], 2 * lambdas.size - 1)
        delta = relative_delta(sup, max(levy_power_ratio(phi, nu, float(lam)) for lam in fine))
    return EstimateReport.evaluate(
        name="levy_integral",
        samples=samples,
        refinement_delta=delta,
        delta_cap=BOUND_DELTA_CAP if refine else None,
        metadata={"phi": repr(phi), "nu": nu},
    )
