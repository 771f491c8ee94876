"""
Scaling certificates and derivative-ratio checks for Bernstein functions
"""
import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.bernstein.functions import BernsteinFunction
from src.common.errors import ArgumentError
from src.common.report import EstimateReport, RatioSample, relative_delta

logger = logging.getLogger(__name__)

DELTA_RESOLUTION = 1e-3
# log c over all pairs may fall below log c over the short pairs by this much
CONSTANT_SLACK = 1e-4
DERIVATIVE_DELTA_CAP = 0.05


class ScalingCertificate(BaseModel):
    """Verified c0 (R/r)^delta0 <= min_i phi_i(R)/phi_i(r) <= R/r on a log grid"""
    model_config = ConfigDict(
        populate_by_name=True,
        json_schema_extra={
            "example": {
                "c0": 1.0, "delta0": 0.3, "grid_lo": 1e-6, "grid_hi": 1e6,
                "pass": True, "worst_pair": [1e-6, 1e6], "upper_ok": True,
            }
        },
    )

    c0: float = Field(..., ge=0.0, description="Constant of the lower scaling bound")
    delta0: float = Field(..., ge=0.0, le=1.0, description="Certified exponent, resolution 1e-3")
    grid_lo: float = Field(..., gt=0.0, description="Smallest r searched")
    grid_hi: float = Field(..., gt=0.0, description="Largest R searched")
    passed: bool = Field(..., alias="pass", description="A positive exponent was certified")
    worst_pair: Tuple[float, float] = Field(..., description="(r, R) attaining c0")
    upper_ok: bool = Field(True, description="phi(R)/phi(r) <= R/r held at every pair")


def _log_ratios(phis: Sequence[BernsteinFunction], grid: np.ndarray):
    log_phi = np.stack([np.log(phi.evaluate(grid)) for phi in phis])
    i, j = np.triu_indices(len(grid), k=1)
    log_x = np.log(grid[j]) - np.log(grid[i])
    log_rho = (log_phi[:, j] - log_phi[:, i]).min(axis=0)
    return i, j, log_x, log_rho


def scaling_certificate(phis: Sequence[BernsteinFunction], grid_lo: float, grid_hi: float,
                        n_grid: int = 64) -> ScalingCertificate:
    """
    Certify the lower scaling condition on log-spaced (r, R) pairs

    For each candidate delta the constant c(delta) = min over pairs of
    rho * x^{-delta} (x = R/r) is compared with the same minimum over the
    pairs spanning at most half the log-range. A true power bound keeps the
    two equal; a failing exponent makes c(delta) decay with the span.
    delta0 is the largest delta on the 1e-3 lattice below which every
    candidate passes. A bounded phi (no drift, finite Levy mass) has
    phi(R)/phi(r) -> 1 as R -> inf and never passes, whatever the grid.

    Args:
        phis: Bernstein functions phi_1..phi_l
        grid_lo: Smallest r
        grid_hi: Largest R
        n_grid: Number of log-spaced points (>= 16)

    Returns:
        ScalingCertificate
    """
    if not phis:
        raise ArgumentError("scaling_certificate needs at least one Bernstein function")
    if not (0.0 < grid_lo < grid_hi):
        raise ArgumentError("need 0 < grid_lo < grid_hi", {"grid_lo": grid_lo, "grid_hi": grid_hi})
    if n_grid < 16:
        raise ArgumentError("n_grid must be at least 16", {"n_grid": n_grid})

    grid = np.geomspace(grid_lo, grid_hi, n_grid)
    i, j, log_x, log_rho = _log_ratios(phis, grid)
    half = log_x <= 0.5 * (math.log(grid_hi) - math.log(grid_lo)) + 1e-12
    upper_ok = bool(np.all(log_rho <= log_x + 1e-9))

    bounded = [repr(phi) for phi in phis if phi.is_bounded]
    deltas = np.round(np.arange(1, int(round(1.0 / DELTA_RESOLUTION)) + 1) * DELTA_RESOLUTION, 3)
    delta0, log_c0, worst = 0.0, -math.inf, 0
    for delta in ([] if bounded else deltas):
        margin = log_rho - delta * log_x
        log_c_full = margin.min()
        log_c_half = margin[half].min()
        if log_c_full < log_c_half - CONSTANT_SLACK:
            break
        delta0, log_c0, worst = float(delta), float(log_c_full), int(margin.argmin())

    if bounded:
        logger.debug("scaling certificate: bounded %s", ", ".join(bounded))
    passed = delta0 > 0.0 and upper_ok
    worst_pair = (float(grid[i[worst]]), float(grid[j[worst]]))
    c0 = math.exp(log_c0) if delta0 > 0.0 else 0.0
    logger.debug("scaling certificate: delta0=%.3f c0=%.6f upper_ok=%s", delta0, c0, upper_ok)
    return ScalingCertificate(c0=c0, delta0=delta0, grid_lo=grid_lo, grid_hi=grid_hi,
                              passed=passed, worst_pair=worst_pair, upper_ok=upper_ok)


def _derivative_sup(phi: BernsteinFunction, n: int, grid: np.ndarray) -> Tuple[float, List[RatioSample]]:
    samples = []
    for lam in grid:
        ratio = lam ** n * abs(phi.derivative(float(lam), n)) / phi.eval(float(lam))
        samples.append(RatioSample(tag=f"lambda={lam:.6g}", value=float(ratio)))
    return max(s.value for s in samples), samples


def derivative_ratio_check(phi: BernsteinFunction, n: int, grid: Sequence[float],
                           refine: bool = True) -> EstimateReport:
    """
    sup over the grid of lambda^n |phi^(n)(lambda)| / phi(lambda)

    Args:
        phi: Bernstein function
        n: Derivative order, 1 or 2
        grid: Log-spaced positive lambdas
        refine: Compare against the x2 refined grid

    Returns:
        EstimateReport (pass: finite sup, <5% change under refinement)
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or np.any(grid <= 0):
        raise ArgumentError("grid needs at least two positive points")
    sup, samples = _derivative_sup(phi, n, grid)
    delta = 0.0
    if refine:
        fine = np.geomspace(grid[0], grid[-1], 2 * grid.size - 1)
        fine_sup, _ = _derivative_sup(phi, n, fine)
        delta = relative_delta(sup, fine_sup)
    return EstimateReport.evaluate(
        name=f"derivative_ratio_n{n}",
        samples=samples,
        refinement_delta=delta,
        delta_cap=DERIVATIVE_DELTA_CAP if refine else None,
        metadata={"phi": repr(phi), "n": n},
    )


def shape_check(phi: BernsteinFunction, grid: Sequence[float], tol: float = 1e-12) -> EstimateReport:
    """
    Monotonicity and concavity of phi on a sampled grid (finite differences)

    The report's sup is the largest violation: a negative increment or a
    positive second divided difference, relative to the local scale of phi.

    Args:
        phi: Bernstein function
        grid: Increasing positive lambdas (at least three)
        tol: Allowed relative violation

    Returns:
        EstimateReport
    """
    lam = np.asarray(grid, dtype=float)
    if lam.size < 3 or np.any(np.diff(lam) <= 0) or lam[0] <= 0:
        raise ArgumentError("shape_check needs three or more increasing positive points")
    values = phi.evaluate(lam)
    scale = np.maximum(np.abs(values), np.finfo(float).tiny)
    slopes = np.diff(values) / np.diff(lam)
    decrease = np.maximum(-np.diff(values), 0.0) / scale[1:]
    # divided-difference concavity: slopes must not increase
    convexity = np.maximum(np.diff(slopes), 0.0) * np.diff(lam)[1:] / scale[2:]
    violation = float(max(decrease.max(initial=0.0), convexity.max(initial=0.0)))
    return EstimateReport.evaluate(
        name="shape",
        samples=[RatioSample(tag="max_violation", value=violation)],
        threshold=tol,
        metadata={"phi": repr(phi), "phi_at_1e-12": phi.eval(1e-12)},
    )


def certificate_for(phi: BernsteinFunction, grid_lo: float = 1e-4, grid_hi: float = 1e4,
                    n_grid: int = 48) -> ScalingCertificate:
    """Single-function certificate used as a precondition by the kernel checks"""
    return scaling_certificate([phi], grid_lo, grid_hi, n_grid)
