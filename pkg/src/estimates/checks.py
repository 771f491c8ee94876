"""
Inequality checks for the solution operator G over forcing ensembles
"""
import logging
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.bernstein.anisotropy import Anisotropy
from src.common.errors import ArgumentError
from src.common.parallel import ordered_map
from src.common.report import EstimateReport, RatioSample, relative_delta
from src.estimates.cubes import CubeFamily, oscillation_table
from src.estimates.ensembles import ForcingEnsemble
from src.operators.grid import FieldKind, GridFunction, TorusGrid, discrete_lp_norm
from src.solver.parabolic import apply_G

logger = logging.getLogger(__name__)

L2_THRESHOLD = 1.0 + 1e-6
REFINEMENT_CAP = 0.1
TREND_CAP = 0.1
# fewest decades of resolved b-values a trend is fitted over
MIN_DECADES = 3.0

Forcings = Union[ForcingEnsemble, Sequence[GridFunction]]


def _members(forcings: Forcings, grid: Optional[TorusGrid]) -> List[GridFunction]:
    if isinstance(forcings, ForcingEnsemble):
        if grid is None:
            raise ArgumentError("sampling a forcing ensemble needs a grid")
        return list(forcings.members(grid))
    members = list(forcings)
    if not members:
        raise ArgumentError("forcing ensemble is empty")
    for f in members:
        if f.kind != FieldKind.space_time:
            raise ArgumentError("forcings must be space-time functions")
    return members


def conjugate(p: float) -> float:
    return p / (p - 1.0)


def mixed_norm(u: GridFunction, p: float, q: float) -> float:
    """|| ||u(t)||_{L_p(space)} ||_{L_q(time)} by Riemann sums on the grid nodes"""
    grid = u.grid
    inner = np.array([discrete_lp_norm(u.values[k], grid.cell_volume, p) for k in range(u.values.shape[0])])
    return discrete_lp_norm(inner, grid.time.dt, q)


def _ratio(f: GridFunction, a: Anisotropy, pairs: Sequence[Tuple[float, float]],
           blocks: Optional[Sequence[int]] = None) -> List[float]:
    g = apply_G(f, a, blocks=blocks)
    out = []
    for p, q in pairs:
        denominator = mixed_norm(f, p, q)
        out.append(mixed_norm(g, p, q) / denominator if denominator > 0.0 else 0.0)
    return out


# ========== L2 ==========

def l2_check(forcings: Forcings, a: Anisotropy, grid: Optional[TorusGrid] = None,
             workers: int = 1, progress: bool = False) -> EstimateReport:
    """
    max over the ensemble of ||G f||_2 / ||f||_2, threshold 1 + 1e-6

    Args:
        forcings: ForcingEnsemble (sampled on grid) or space-time GridFunctions
        a: Anisotropy
        grid: Space-time grid for a ForcingEnsemble
        workers: Member workers
        progress: Show a progress bar

    Returns:
        EstimateReport "l2_contraction"
    """
    members = _members(forcings, grid)
    ratios = ordered_map(lambda f: _ratio(f, a, [(2.0, 2.0)])[0], members, workers, progress, "l2_check")
    samples = [RatioSample(tag=f"member={i}", value=r) for i, r in enumerate(ratios)]
    report = EstimateReport.evaluate("l2_contraction", samples, threshold=L2_THRESHOLD,
                                     metadata={"members": len(members)})
    logger.info("l2_check: max ratio %.8f over %d forcings", report.sup, len(members))
    return report


# ========== MIXED NORMS ==========

def lqlp_report(ensemble: ForcingEnsemble, a: Anisotropy, p: float, q: float, grid: TorusGrid,
                workers: int = 1, progress: bool = False) -> EstimateReport:
    """
    max ||G f||_{L_q(L_p)} / ||f||_{L_q(L_p)} on the grid and on its x2 refinement

    The conjugate pair (p', q') is evaluated alongside; the report passes when both
    suprema are finite and change by less than 10% under refinement. For p = q = 2
    the L2 threshold 1 + 1e-6 applies as well.

    Args:
        ensemble: Forcings, re-sampled on both grids
        a: Anisotropy
        p: Spatial exponent in (1, inf)
        q: Temporal exponent in (1, inf)
        grid: Coarse space-time grid
        workers: Member workers
        progress: Show progress bars

    Returns:
        EstimateReport "lqlp"
    """
    for name, value in (("p", p), ("q", q)):
        if not (1.0 < value < math.inf):
            raise ArgumentError(f"{name} must lie in (1, inf)", {name: value})
    pairs = [(float(p), float(q))]
    dual = (conjugate(p), conjugate(q))
    if not np.allclose(dual, pairs[0], rtol=1e-12):
        pairs.append(dual)

    def sweep(g: TorusGrid) -> np.ndarray:
        rows = ordered_map(lambda f: _ratio(f, a, pairs), list(ensemble.members(g)), workers, progress, "lqlp")
        return np.array(rows)

    coarse = sweep(grid)
    fine = sweep(grid.refined())
    samples = []
    per_pair: Dict[str, Any] = {}
    deltas = []
    for j, (pp, qq) in enumerate(pairs):
        label = f"p={pp:g},q={qq:g}"
        samples += [RatioSample(tag=f"{label},member={i}", value=float(v)) for i, v in enumerate(coarse[:, j])]
        delta = relative_delta(float(coarse[:, j].max()), float(fine[:, j].max()))
        deltas.append(delta)
        per_pair[label] = {"sup": float(coarse[:, j].max()), "refined_sup": float(fine[:, j].max()),
                           "refinement_delta": delta}
    threshold = L2_THRESHOLD if pairs == [(2.0, 2.0)] else None
    report = EstimateReport.evaluate("lqlp", samples, refinement_delta=max(deltas), threshold=threshold,
                                     delta_cap=REFINEMENT_CAP,
                                     metadata={"p": p, "q": q, "pairs": per_pair, "members": len(ensemble)})
    logger.info("lqlp_report(p=%g, q=%g): sup %.4f, refinement delta %.3f", p, q, report.sup, max(deltas))
    return report


# ========== BMO ==========

def trend_slope(b_values: Sequence[float], maxima: Sequence[float]) -> float:
    """Least-squares slope of the maxima against log10 b (change per decade), NaN maxima left out"""
    b_values = np.asarray(b_values, dtype=float)
    maxima = np.asarray(maxima, dtype=float)
    keep = np.isfinite(maxima)
    b_values, maxima = b_values[keep], maxima[keep]
    if b_values.size < 2:
        return 0.0
    return float(np.polyfit(np.log10(b_values), maxima, 1)[0])


def _oscillation_maxima(members: Iterable[GridFunction], a: Anisotropy, cubes: CubeFamily,
                        blocks: Optional[Sequence[int]], workers: int, progress: bool):
    def run(f: GridFunction):
        table = oscillation_table(apply_G(f, a, blocks=blocks), cubes)
        return table.groupby("b")["oscillation"].max(), table.attrs.get("skipped", 0)

    results = ordered_map(run, list(members), workers, progress, "bmo_check")
    # NaN where no cube of that b-value was evaluated
    per_b = np.full(cubes.b_values.size, np.nan)
    for series, _ in results:
        for j, b in enumerate(cubes.b_values):
            if float(b) in series.index:
                per_b[j] = np.fmax(per_b[j], float(series.loc[float(b)]))
    skipped = sum(s for _, s in results)
    return per_b, skipped


def bmo_check(forcings: Forcings, a: Anisotropy, cubes: CubeFamily, grid: Optional[TorusGrid] = None,
              block: int = 0, workers: int = 1, progress: bool = False) -> EstimateReport:
    """
    Mean oscillation of G_block f over the cube family, maximized over forcings and centers

    Passes when the per-decade trend of the per-b maxima against log10 b lies within
    +-0.1 of zero. Only b-values with at least one evaluated cube enter the fit; they
    must span MIN_DECADES decades. The same statistic for the full G is reported
    under metadata["extrapolated"].

    Args:
        forcings: Forcings with sup norm 1
        a: Anisotropy
        cubes: Cube family
        grid: Space-time grid for a ForcingEnsemble
        block: Block whose generator acts outside the Duhamel integral
        workers: Member workers
        progress: Show progress bars

    Returns:
        EstimateReport "bmo" with sup the overall maximum and threshold None

    Raises:
        ArgumentError: bad block index, or resolved b-values spanning fewer than MIN_DECADES decades
    """
    if not 0 <= block < a.ell:
        raise ArgumentError("block index out of range", {"block": block, "ell": a.ell})
    members = _members(forcings, grid)
    per_b, skipped = _oscillation_maxima(members, a, cubes, [block], workers, progress)
    evaluated = np.isfinite(per_b)
    b_eval = cubes.b_values[evaluated]
    decades = float(math.log10(b_eval[-1] / b_eval[0])) if b_eval.size else 0.0
    if decades < MIN_DECADES - 1e-9:
        raise ArgumentError("resolved b-values span too few decades for a trend",
                            {"decades": decades, "required": MIN_DECADES,
                             "unevaluated": [float(b) for b in cubes.b_values[~evaluated]]})
    full_b, _ = _oscillation_maxima(members, a, cubes, None, workers, progress)
    slope = trend_slope(cubes.b_values, per_b)
    full_slope = trend_slope(cubes.b_values, full_b)
    samples = [RatioSample(tag=f"b={b:.4g}", value=float(v)) for b, v in zip(b_eval, per_b[evaluated])]
    full_kept = full_b[np.isfinite(full_b)]
    report = EstimateReport.evaluate(
        "bmo", samples,
        metadata={"block": block, "trend_slope": slope, "trend_cap": TREND_CAP, "decades": decades,
                  "centers": len(cubes.centers), "skipped_cubes": skipped, "members": len(members),
                  "unevaluated_b": [float(b) for b in cubes.b_values[~evaluated]],
                  "extrapolated": {"operator": "full", "sup": float(full_kept.max(initial=0.0)),
                                   "trend_slope": full_slope,
                                   "per_b": [float(v) for v in full_kept]}})
    if abs(slope) > TREND_CAP:
        report.passed = False
    logger.info("bmo_check: sup %.4f, trend slope %.4f per decade over %.2f decades, %d cubes skipped",
                report.sup, slope, decades, skipped)
    return report
