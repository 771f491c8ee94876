"""
Multiplier diagnostics: coefficient-ratio bounds and the Mikhlin / Marcinkiewicz growth checks
"""
import logging
import math
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy import integrate
from scipy.stats import qmc

from src.bernstein.anisotropy import Anisotropy
from src.common.errors import ArgumentError
from src.common.report import EstimateReport, RatioSample
from src.operators.coefficients import CoefficientMode, CoefficientSet
from src.operators.grid import TorusGrid
from src.operators.jump_quadrature import jump_multiplier

logger = logging.getLogger(__name__)

MULTIPLIER_TOL = 1e-3
ANNULUS_POINTS = 2 ** 16
MIN_FIT_POINTS = 8
SLOPE_MARGIN = 0.15
RESIDUAL_LIMIT = 0.2
DYADIC_SAMPLES = 6


# ========== COEFFICIENT MULTIPLIER ==========

def _numerator_and_denominator(coeffs: CoefficientSet, a: Anisotropy, t: float, xi: np.ndarray):
    """Per-block (numerator, denominator) summed over blocks for frequency vectors xi (n, d)"""
    num = np.zeros(xi.shape[0])
    den = np.zeros(xi.shape[0])
    for i, (phi, block) in enumerate(zip(a.phis, a.block_slices())):
        xi_sq = np.sum(xi[:, block] ** 2, axis=1)
        phi_vals = phi.evaluate(xi_sq)
        b0 = coeffs.b0[i]
        den += phi_vals
        num += float(coeffs.b_at(i, t)) * xi_sq
        if coeffs.mode == CoefficientMode.TIME_ONLY:
            num += float(coeffs.a_at(i, t)) * (phi_vals - b0 * xi_sq)
        else:
            m = jump_multiplier(phi, xi[:, block.start], coeffs.jump_coefficient(i, t))
            num += -m.real
    return num, den


def coefficient_multiplier_bound(coeffs: CoefficientSet, a: Anisotropy, t: float,
                                 xi_grid: Sequence[Sequence[float]], tol: float = MULTIPLIER_TOL) -> EstimateReport:
    """
    Sample m(t, xi) = [jump part with a + sum b_i |xi_i|^2] / [jump part with a = 1 + sum b0_i |xi_i|^2]

    Args:
        coeffs: Coefficients (TIME_JUMP blocks go through the jump quadrature)
        a: Anisotropy
        t: Time at which the coefficients are frozen
        xi_grid: Frequency vectors in R^d; xi = 0 is dropped
        tol: Slack on both range ends

    Returns:
        EstimateReport with sup, metadata["inf"]; pass iff inf >= c1 - tol and sup <= 1/c1 + tol
    """
    coeffs.check_anisotropy(a)
    xi = np.atleast_2d(np.asarray(xi_grid, dtype=float))
    if xi.shape[1] != a.total_dim:
        raise ArgumentError("frequency vectors do not match the anisotropy",
                            {"expected": a.total_dim, "got": xi.shape[1]})
    xi = xi[np.any(xi != 0.0, axis=1)]
    if xi.shape[0] == 0:
        raise ArgumentError("frequency grid has no nonzero vector")

    num, den = _numerator_and_denominator(coeffs, a, t, xi)
    ratio = num / den
    samples = [RatioSample(tag="xi=" + ",".join(f"{v:g}" for v in row), value=float(r))
               for row, r in zip(xi, ratio)]
    inf = float(ratio.min())
    report = EstimateReport.evaluate(
        name="coefficient_multiplier",
        samples=samples,
        threshold=1.0 / coeffs.c1 + tol,
        metadata={"inf": inf, "lower": coeffs.c1 - tol, "t": t, "mode": coeffs.mode.value},
    )
    if inf < coeffs.c1 - tol:
        report = report.model_copy(update={"passed": False})
    return report


def multiplier_xi_grid(grid: TorusGrid, per_axis: int = 8) -> np.ndarray:
    """Log-spaced frequency vectors per axis below half the Nyquist frequency (top octave excluded)"""
    axes_values = []
    for axis in range(grid.total_dim):
        xi = grid.wavenumbers(axis)
        step = float(xi[1])
        limit = 0.5 * float(np.max(np.abs(xi)))
        k = np.unique(np.round(np.geomspace(1.0, limit / step, per_axis)))
        axes_values.append(np.concatenate([[0.0], k * step, -k * step]))
    mesh = np.meshgrid(*axes_values, indexing="ij")
    rows = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return rows[np.any(rows != 0.0, axis=1)]


# ========== MIKHLIN / MARCINKIEWICZ ==========

class DerivativeForm(str, Enum):
    """Denominator used for Re d/dxi1 m: tau^2 + S^2 (REDUCED) or (tau^2 + S^2)^2 (EXACT)"""
    REDUCED = "reduced"
    EXACT = "exact"


class MultiplierDiagnostics(BaseModel):
    """Growth of the derivative of m = S / (i tau + S), S = |xi1|^{2 d1} + |xi2|^{2 d2}"""
    delta1: float = Field(..., gt=0.0, lt=1.0)
    delta2: float = Field(..., gt=0.0, lt=1.0)
    form: DerivativeForm = Field(DerivativeForm.REDUCED, description="Derivative denominator")
    radii: List[float] = Field(default_factory=list, description="Annulus radii R")
    annulus: List[float] = Field(default_factory=list, description="Annulus quantity per R")
    annulus_slope: float = Field(0.0, description="Fitted d log Q / d log R")
    annulus_residual: float = Field(0.0, ge=0.0, description="RMS residual of the annulus fit")
    annulus_threshold: float = Field(0.0, description="Lower bound asserted for the slope")
    dyadic_j: List[int] = Field(default_factory=list, description="Dyadic levels j")
    dyadic: List[float] = Field(default_factory=list, description="Dyadic quantity per j")
    dyadic_slope: float = Field(0.0, description="Fitted d log Q / d j")
    dyadic_residual: float = Field(0.0, ge=0.0)
    dyadic_threshold: float = Field(0.0)
    divergence_expected: bool = Field(False, description="delta1 > 1/4 or delta1 + delta2 > 1/2")
    diverges: bool = Field(False, description="Both slopes clear their thresholds")
    low_confidence: bool = Field(False, description="A fit residual exceeded 0.2")
    qmc_seed: int = Field(0, description="Scrambled Sobol seed")

    @property
    def passed(self) -> bool:
        return self.diverges or not self.divergence_expected


def derivative_real_part(tau, xi1, xi2, delta1: float, delta2: float,
                         form: DerivativeForm = DerivativeForm.REDUCED) -> np.ndarray:
    """Re d/dxi1 m(tau, xi1, xi2), closed form"""
    tau, xi1, xi2 = (np.asarray(v, dtype=float) for v in (tau, xi1, xi2))
    s = np.abs(xi1) ** (2.0 * delta1) + np.abs(xi2) ** (2.0 * delta2)
    den = tau ** 2 + s ** 2
    if DerivativeForm(form) == DerivativeForm.EXACT:
        den = den ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = 4.0 * delta1 * np.abs(xi1) ** (2.0 * delta1 - 1.0) * np.sign(xi1)
        out = lead * tau ** 2 * s / den
    return np.where(np.isfinite(out), out, 0.0)


def _fit(x: np.ndarray, y: np.ndarray):
    coef, residuals, *_ = np.polyfit(x, y, 1, full=True)
    rms = math.sqrt(float(residuals[0]) / x.size) if residuals.size else 0.0
    return float(coef[0]), rms


def _annulus_points(seed: int) -> np.ndarray:
    """Scrambled Sobol points mapped uniformly onto the shell 1 < |z| < 2"""
    u = qmc.Sobol(d=3, scramble=True, seed=seed).random(ANNULUS_POINTS)
    radius = np.cbrt(1.0 + 7.0 * u[:, 0])
    cos_theta = 1.0 - 2.0 * u[:, 1]
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - cos_theta ** 2))
    angle = 2.0 * math.pi * u[:, 2]
    return np.stack([radius * cos_theta,
                     radius * sin_theta * np.cos(angle),
                     radius * sin_theta * np.sin(angle)], axis=1)


def annulus_quantity(radius: float, delta1: float, delta2: float, points: np.ndarray,
                     form: DerivativeForm = DerivativeForm.REDUCED) -> float:
    """R^{-1/2} (int_{R<|z|<2R} |Re d/dxi1 m|^2)^{1/2} over (tau, xi1, xi2)"""
    z = radius * points
    values = derivative_real_part(z[:, 0], z[:, 1], z[:, 2], delta1, delta2, form)
    volume = 28.0 * math.pi / 3.0 * radius ** 3
    return radius ** -0.5 * math.sqrt(volume * float(np.mean(values ** 2)))


def dyadic_quantity(j: int, delta1: float, delta2: float,
                    form: DerivativeForm = DerivativeForm.REDUCED) -> float:
    """sup over sampled 2^j <= tau, xi2 < 2^{j+1} of int_{2^j}^{2^{j+1}} |Re d/dxi1 m| dxi1"""
    lo, hi = 2.0 ** j, 2.0 ** (j + 1)
    best = 0.0
    for tau in np.linspace(lo, hi, DYADIC_SAMPLES, endpoint=False):
        for xi2 in np.linspace(lo, hi, DYADIC_SAMPLES, endpoint=False):
            value, _ = integrate.quad(
                lambda x: abs(float(derivative_real_part(tau, x, xi2, delta1, delta2, form))),
                lo, hi, epsabs=0.0, epsrel=1e-10)
            best = max(best, value)
    return best


def mikhlin_marcinkiewicz_diagnostic(delta1: float, delta2: float,
                                     radii: Optional[Sequence[float]] = None,
                                     levels: Optional[Sequence[int]] = None,
                                     form: DerivativeForm = DerivativeForm.REDUCED,
                                     seed: int = 0) -> MultiplierDiagnostics:
    """
    Fit the growth of the annulus and dyadic derivative quantities

    Divergence is asserted only when delta1 > 1/4 or delta1 + delta2 > 1/2; the
    thresholds are the lower-bound exponent 2 d1 - 1 + 2 max(d1, d2) (per log R)
    and the same times ln 2 (per dyadic level), each less 0.15.

    Args:
        delta1, delta2: Exponents in (0, 1)
        radii: Annulus radii spanning >= 3 decades (default 12 points on [10, 1e4])
        levels: Dyadic levels (default 2..13)
        form: Derivative denominator
        seed: Sobol scrambling seed

    Returns:
        MultiplierDiagnostics
    """
    if not (0.0 < delta1 < 1.0 and 0.0 < delta2 < 1.0):
        raise ArgumentError("delta1 and delta2 must lie in (0, 1)", {"delta1": delta1, "delta2": delta2})
    radii = np.asarray(radii if radii is not None else np.geomspace(10.0, 1e4, 12), dtype=float)
    levels = np.asarray(levels if levels is not None else np.arange(2, 14), dtype=int)
    if radii.size < MIN_FIT_POINTS or levels.size < MIN_FIT_POINTS:
        raise ArgumentError("slope fits need at least 8 points", {"radii": radii.size, "levels": levels.size})
    if math.log10(radii.max() / radii.min()) < 3.0 - 1e-12:
        raise ArgumentError("annulus radii must span at least three decades")

    points = _annulus_points(seed)
    annulus = np.array([annulus_quantity(float(r), delta1, delta2, points, form) for r in radii])
    dyadic = np.array([dyadic_quantity(int(j), delta1, delta2, form) for j in levels])

    annulus_slope, annulus_residual = _fit(np.log(radii), np.log(annulus))
    dyadic_slope, dyadic_residual = _fit(levels.astype(float), np.log(dyadic))

    exponent = 2.0 * delta1 - 1.0 + 2.0 * max(delta1, delta2)
    annulus_threshold = exponent - SLOPE_MARGIN
    dyadic_threshold = exponent * math.log(2.0) - SLOPE_MARGIN
    expected = delta1 > 0.25 or delta1 + delta2 > 0.5
    low_confidence = max(annulus_residual, dyadic_residual) > RESIDUAL_LIMIT
    if low_confidence:
        logger.warning("multiplier slope fit residual above %.1f (annulus %.3f, dyadic %.3f)",
                       RESIDUAL_LIMIT, annulus_residual, dyadic_residual)
    diverges = annulus_slope >= annulus_threshold and dyadic_slope >= dyadic_threshold

    return MultiplierDiagnostics(
        delta1=delta1, delta2=delta2, form=form,
        radii=radii.tolist(), annulus=annulus.tolist(),
        annulus_slope=annulus_slope, annulus_residual=annulus_residual,
        annulus_threshold=annulus_threshold,
        dyadic_j=[int(j) for j in levels], dyadic=dyadic.tolist(),
        dyadic_slope=dyadic_slope, dyadic_residual=dyadic_residual,
        dyadic_threshold=dyadic_threshold,
        divergence_expected=expected, diverges=diverges,
        low_confidence=low_confidence, qmc_seed=seed,
    )
