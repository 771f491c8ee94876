"""
Task runners behind the subcommands and the `run` entry that writes the manifest
"""
import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence

import numpy as np

from src.bernstein import certificate_for
from src.cli import io
from src.cli.config import Experiment, ProcessKind, SolveMethod, SuiteKind, TaskKind, load_config
from src.cli.models import FileRecord, RunManifest
from src.common import __version__
from src.common.errors import ConfigValidationError
from src.common.report import EstimateReport, RatioSample
from src.common.settings import Settings
from src.estimates import CubeFamily, bmo_check, l2_check, lqlp_report
from src.kernels import kernel_bound_report, kernel_bound_sweep, levy_integral_check
from src.operators import CoefficientMode, coefficient_multiplier_bound, discrete_lp_norm, lp_norm
from src.operators import mikhlin_marcinkiewicz_diagnostic, multiplier_xi_grid
from src.solver import residual, solve_elliptic, solve_parabolic
from src.stochastic import (
    AdditiveTriplet,
    PathEnsemble,
    char_function_check,
    laplace_check,
    mc_solve,
    sample_additive,
    sample_iasbm,
    sample_subordinator,
)

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
RESOLVENT_THRESHOLD = 1.0 + 1e-3
MC_RELATIVE_FLOOR = 0.02
MC_SE_FACTOR = 3.0


class Timings:
    """Wall-clock seconds per named stage"""

    def __init__(self):
        self.stages: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        logger.info("Stage %s started", name)
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.stages[name] = self.stages.get(name, 0.0) + elapsed
            logger.info("Stage %s finished in %.3fs", name, elapsed)


def _suite_record(suite: str, reports: Sequence[EstimateReport], labels: Sequence[Optional[str]]) -> Dict:
    records = [r.to_record(label=label) if label else r.to_record() for r, label in zip(reports, labels)]
    return {"suite": suite, "pass": all(r.passed for r in reports), "reports": records}


# ========== KERNEL ==========

def run_kernel(exp: Experiment, out: Path, settings: Settings, timings: Timings) -> bool:
    """kernel_grid.csv (t, r, value, err_est) and bound_report.json"""
    p = exp.config.kernel
    block = exp.block(p.block)
    phi, dim = exp.anisotropy.phis[block], exp.anisotropy.dims[block]
    with timings.stage("certificate"):
        certificate = certificate_for(phi)
    with timings.stage("kernel_sweep"):
        report, rows = kernel_bound_sweep(phi, dim, p.k, p.m, p.nu, p.bound_nu, t_range=p.t_range,
                                          r_range=p.r_range, n_t=p.n_t, n_r=p.n_r,
                                          include_origin=p.include_origin, mass_times=p.mass_times,
                                          workers=settings.workers, progress=settings.progress)
    with timings.stage("write"):
        io.write_csv(out / "kernel_grid.csv", rows, ["t", "r", "value", "err_est"])
        io.write_json(out / "bound_report.json",
                      report.to_record(sup_ratio=report.sup, block=block,
                                       scaling=certificate.model_dump(mode="json", by_alias=True)))
    return report.passed


# ========== SOLVE ==========

def _norms(u, exponents: Sequence[float]) -> Dict[str, float]:
    return {f"L{p:g}": lp_norm(u, p) for p in exponents}


def run_solve(exp: Experiment, out: Path, settings: Settings, timings: Timings) -> bool:
    """u.grid (+ sidecar) and solve_report.json"""
    p = exp.config.solve
    a, coeffs = exp.anisotropy, exp.coefficients
    if p.method == SolveMethod.parabolic:
        f = exp.forcing()
        with timings.stage("solve"):
            u = solve_parabolic(f, a, coeffs, workers=settings.workers)
        final = u.time_slice(exp.grid.time.steps)
        samples = []
        if p.residual:
            with timings.stage("residual"):
                samples.append(RatioSample(tag="relative_residual",
                                           value=residual(u, f, a, coeffs, workers=settings.workers)))
        report = EstimateReport.evaluate("solve", samples, metadata={"method": p.method.value})
        extra = {"norms_at_T": _norms(final, p.norms), "T": float(exp.grid.time.end),
                 "u_range_at_T": [float(final.values.min()), float(final.values.max())]}
        units = "u(t, x) on the time nodes"
    else:
        f = exp.spatial_forcing()
        with timings.stage("solve"):
            u = solve_elliptic(f, a, p.lam, coeffs, workers=settings.workers)
        # lambda ||u||_p <= ||f||_p
        samples = []
        for q in p.norms:
            norm_f = lp_norm(f, q)
            samples.append(RatioSample(tag=f"p={q:g}", value=p.lam * lp_norm(u, q) / norm_f if norm_f > 0 else 0.0))
        report = EstimateReport.evaluate("resolvent_bound", samples, threshold=RESOLVENT_THRESHOLD,
                                         metadata={"method": p.method.value, "lambda": p.lam})
        extra = {"norms": _norms(u, p.norms),
                 "u_range": [float(u.values.min()), float(u.values.max())]}
        units = "u(x) of the resolvent equation"
    with timings.stage("write"):
        io.write_grid_function(out / "u.grid", u, units)
        io.write_json(out / "solve_report.json", report.to_record(**extra))
    return report.passed


# ========== SIMULATE ==========

def _check_frequencies(exp: Experiment, dim: int) -> List[List[float]]:
    xi = exp.config.simulate.xi
    if xi is not None:
        return xi
    out = []
    for scale in (1.0, 2.0):
        for k in range(dim):
            e = [0.0] * dim
            e[k] = scale
            out.append(e)
    out.append([1.0] * dim)
    return out


def _check_times(exp: Experiment, nodes: np.ndarray) -> List[float]:
    times = exp.config.simulate.times
    if times is not None:
        return times
    return [float(nodes[(nodes.size - 1) // 2]), float(nodes[-1])]


def _write_paths(out: Path, ensemble: PathEnsemble, units: str):
    shape = list(ensemble.values.shape)
    axes = {
        "axis_names": ["path", "t", "component"],
        "extents": [[0, shape[0] - 1], [float(ensemble.time_grid[0]), float(ensemble.time_grid[-1])],
                    [0, shape[2] - 1]],
        "counts": shape,
        "time_nodes": ensemble.time_grid.tolist(),
        "block_dims": list(ensemble.dims),
        "seed": ensemble.master_seed,
        "stream_scheme": ensemble.stream_scheme,
    }
    io.write_grid(out / "paths.grid", ensemble.values, axes, "paths", units)


def _monte_carlo(exp: Experiment, out: Path, settings: Settings, timings: Timings,
                 ensemble: Optional[PathEnsemble]) -> Optional[EstimateReport]:
    p = exp.config.simulate
    a, coeffs = exp.anisotropy, exp.coefficients
    f = exp.forcing()
    t_eval = float(exp.grid.time.end)
    with timings.stage("monte_carlo"):
        mc = mc_solve(f, coeffs, a, t_eval, exp.grid.spatial(), p.n_paths, exp.config.seed,
                      workers=settings.workers, progress=settings.progress,
                      interpolation=p.interpolation, ensemble=ensemble)
    io.write_grid_function(out / "mc_u.grid", mc.u, f"Monte Carlo u(T, x), T={t_eval:g}")
    io.write_grid_function(out / "mc_se.grid", mc.standard_error, "standard error of mc_u")
    if coeffs.mode != CoefficientMode.TIME_ONLY:
        logger.info("No spectral reference for %s coefficients; Monte Carlo field written only",
                    coeffs.mode.value)
        return None
    with timings.stage("spectral_reference"):
        reference = solve_parabolic(f, a, coeffs, workers=settings.workers).time_slice(exp.grid.time.steps)
    volume = reference.grid.cell_volume
    scale = discrete_lp_norm(reference.values, volume, 2.0)
    scale = scale if scale > 0.0 else 1.0
    rel = discrete_lp_norm(np.real(mc.u.values) - reference.values, volume, 2.0) / scale
    rel_se = discrete_lp_norm(np.real(mc.standard_error.values), volume, 2.0) / scale
    threshold = max(MC_SE_FACTOR * rel_se, MC_RELATIVE_FLOOR)
    return EstimateReport.evaluate(
        "mc_vs_spectral", [RatioSample(tag="relative_l2", value=rel)], threshold=threshold,
        metadata={"relative_se": rel_se, "n_paths": mc.n_paths, "seed": mc.seed, "t_eval": t_eval,
                  **{k: v for k, v in mc.metadata.items() if k in ("route", "neglected_variance")}})


def run_simulate(exp: Experiment, out: Path, settings: Settings, timings: Timings) -> bool:
    """paths.grid (+ sidecar) and charfn_report.json (laplace_report.json for subordinators)"""
    p = exp.config.simulate
    a, seed = exp.anisotropy, exp.config.seed
    nodes = exp.grid.time.nodes
    times = _check_times(exp, nodes)
    mc_ensemble = None
    with timings.stage("sample"):
        if p.process == ProcessKind.subordinator:
            block = exp.block(p.block)
            phi = a.phis[block]
            ensemble = sample_subordinator(phi, nodes, p.n_paths, seed, settings.workers, settings.progress)
        elif p.process == ProcessKind.iasbm:
            ensemble = sample_iasbm(a, nodes, p.n_paths, seed, settings.workers, settings.progress)
        else:
            triplet = AdditiveTriplet.from_coefficients(exp.coefficients, a, nodes)
            ensemble = sample_additive(exp.coefficients, a, nodes, p.n_paths, seed, settings.workers,
                                       settings.progress, triplet=triplet)
            mc_ensemble = ensemble
    with timings.stage("check"):
        if p.process == ProcessKind.subordinator:
            report = laplace_check(ensemble, phi, p.lambdas, times)
            name = "laplace_report.json"
        else:
            model = a if p.process == ProcessKind.iasbm else triplet
            report = char_function_check(ensemble, model, _check_frequencies(exp, ensemble.total_dim), times)
            name = "charfn_report.json"
    reports = [report]
    with timings.stage("write"):
        if p.write_paths:
            _write_paths(out, ensemble, "subordinator value" if p.process == ProcessKind.subordinator
                         else "displacement per coordinate")
        io.write_json(out / name, report.to_record(max_deviation=report.sup, n_paths=ensemble.n_paths,
                                                   seed=seed, process=p.process.value,
                                                   neglected_variance=ensemble.metadata.get("neglected_variance", 0.0)))
    if p.monte_carlo and p.process != ProcessKind.subordinator:
        mc_report = _monte_carlo(exp, out, settings, timings, mc_ensemble)
        if mc_report is not None:
            io.write_json(out / "mc_report.json", mc_report.to_record())
            reports.append(mc_report)
    return all(r.passed for r in reports)


# ========== VERIFY ==========

def _verify_suite(suite: SuiteKind, exp: Experiment, settings: Settings):
    v = exp.config.verify
    a, grid = exp.anisotropy, exp.grid
    workers, progress = settings.workers, settings.progress
    if suite == SuiteKind.l2:
        return [l2_check(exp.ensemble(v.ensemble), a, grid, workers, progress)], [None]
    if suite == SuiteKind.lqlp:
        ensemble = exp.ensemble(v.ensemble)
        reports = [lqlp_report(ensemble, a, p, q, grid, workers, progress) for p, q in v.lqlp_pairs]
        return reports, [f"p={p:g},q={q:g}" for p, q in v.lqlp_pairs]
    if suite == SuiteKind.bmo:
        b = v.bmo
        block = exp.block(b.block)
        cubes = CubeFamily.log_spaced(a, grid, b.b_min, b.b_max, b.n_b, b.n_centers, exp.config.seed)
        report = bmo_check(exp.ensemble(b.ensemble), a, cubes, grid, block, workers, progress)
        return [report], [f"block={block}"]
    if suite == SuiteKind.kernel:
        k = v.kernel
        reports, labels = [], []
        for i, (phi, dim) in enumerate(zip(a.phis, a.dims)):
            for power, order in v.kernel_cases:
                reports.append(kernel_bound_report(phi, dim, power, order, k.nu, k.bound_nu, t_range=k.t_range,
                                                   r_range=k.r_range, n_t=k.n_t, n_r=k.n_r,
                                                   include_origin=k.include_origin, mass_times=k.mass_times,
                                                   workers=workers, progress=progress))
                labels.append(f"block={i},k={power},m={order}")
        return reports, labels
    lv = v.levy
    lambdas = np.geomspace(lv.lambda_range[0], lv.lambda_range[1], lv.n_lambda)
    reports, labels = [], []
    for i, phi in enumerate(a.phis):
        for nu in lv.nus:
            reports.append(levy_integral_check(phi, nu, lambdas))
            labels.append(f"block={i},nu={nu:g}")
    return reports, labels


def run_verify(exp: Experiment, out: Path, settings: Settings, timings: Timings,
               suites: Optional[Sequence[SuiteKind]] = None) -> bool:
    """One `<suite>_report.json` per suite, then summary.csv and digest.txt over the directory"""
    passed = True
    for suite in suites or exp.config.verify.suites:
        suite = SuiteKind(suite)
        with timings.stage(f"suite_{suite.value}"):
            reports, labels = _verify_suite(suite, exp, settings)
        record = _suite_record(suite.value, reports, labels)
        io.write_json(out / f"{suite.value}{io.REPORT_SUFFIX}", record)
        passed = passed and record["pass"]
        logger.info("Suite %s: %s", suite.value, "PASS" if record["pass"] else "FAIL")
    with timings.stage("render"):
        _, rendered = io.report_render(out)
    return passed and rendered


# ========== MULTIPLIER ==========

def run_multiplier(exp: Experiment, out: Path, settings: Settings, timings: Timings) -> bool:
    """mikhlin.csv (R, quantity), dyadic.csv (j, quantity), slope.json and coefficient bounds"""
    p = exp.config.multiplier
    with timings.stage("diagnostic"):
        diag = mikhlin_marcinkiewicz_diagnostic(p.delta1, p.delta2, p.radii, p.levels, p.form,
                                                seed=exp.config.seed)
    io.write_csv(out / "mikhlin.csv", [{"R": r, "quantity": q} for r, q in zip(diag.radii, diag.annulus)],
                 ["R", "quantity"])
    io.write_csv(out / "dyadic.csv", [{"j": j, "quantity": q} for j, q in zip(diag.dyadic_j, diag.dyadic)],
                 ["j", "quantity"])
    io.write_json(out / "slope.json", {
        "slope": diag.annulus_slope, "residual": diag.annulus_residual, "threshold": diag.annulus_threshold,
        "diverges": diag.diverges, "divergence_expected": diag.divergence_expected, "pass": diag.passed,
        "low_confidence": diag.low_confidence, "form": diag.form.value, "qmc_seed": diag.qmc_seed,
        "dyadic": {"slope": diag.dyadic_slope, "residual": diag.dyadic_residual,
                   "threshold": diag.dyadic_threshold},
    })
    passed = diag.passed
    if p.coefficient_times:
        xi = multiplier_xi_grid(exp.grid)
        with timings.stage("coefficient_bound"):
            reports = [coefficient_multiplier_bound(exp.coefficients, exp.anisotropy, float(t), xi)
                       for t in p.coefficient_times]
        record = _suite_record("multiplier", reports, [f"t={t:g}" for t in p.coefficient_times])
        io.write_json(out / f"multiplier{io.REPORT_SUFFIX}", record)
        passed = passed and record["pass"]
    return passed


RUNNERS: Dict[TaskKind, Callable[..., bool]] = {
    TaskKind.kernel: run_kernel,
    TaskKind.solve: run_solve,
    TaskKind.simulate: run_simulate,
    TaskKind.verify: run_verify,
    TaskKind.multiplier: run_multiplier,
}


# ========== RUN ==========

def run(config_path: Path, out_dir: Path, settings: Settings, task: Optional[TaskKind] = None,
        seed: Optional[int] = None, suites: Optional[Sequence[SuiteKind]] = None) -> RunManifest:
    """
    Load, validate and execute one config, then write manifest.json

    Args:
        config_path: JSON run configuration
        out_dir: Output directory (created if missing)
        settings: Worker count and progress flag
        task: Subcommand; must match the config's task when given
        seed: Override of the config's master seed
        suites: Override of the verify suites

    Returns:
        RunManifest; manifest.passed is the exit verdict

    Raises:
        ConfigError: parse or validation failure
        AnisoheatError: task failure
    """
    timings = Timings()
    with timings.stage("build"):
        config = load_config(config_path)
        if seed is not None:
            config = config.model_copy(update={"seed": int(seed)})
        if task is not None and TaskKind(task) != config.task:
            raise ConfigValidationError("task", f"config declares task {config.task.value!r}, "
                                                f"not {TaskKind(task).value!r}")
        exp = Experiment.from_config(config)
    logger.info("Running %s: %s", config.task.value, exp.summary())

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = RUNNERS[config.task]
    if config.task == TaskKind.verify:
        passed = runner(exp, out_dir, settings, timings, suites)
    else:
        passed = runner(exp, out_dir, settings, timings)

    files = [FileRecord(**record) for record in io.inventory(out_dir, exclude=[MANIFEST])]
    manifest = RunManifest(config_hash=config.config_hash(), version=__version__, task=config.task.value,
                           seed=config.seed, passed=bool(passed),
                           timings={k: round(v, 6) for k, v in timings.stages.items()}, files=files)
    io.write_json(out_dir / MANIFEST, manifest.model_dump(mode="json", by_alias=True))
    logger.info("Run %s finished: %s, %d files", config.task.value, "PASS" if passed else "FAIL", len(files))
    return manifest
