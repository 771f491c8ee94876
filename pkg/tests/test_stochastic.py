"""Tests for path sampling, the Monte Carlo solution and the transform checks"""
import math

import numpy as np
import pytest
from scipy import stats

from src.bernstein import Anisotropy, BernsteinFunction
from src.common.errors import ArgumentError
from src.operators import (
    BlockAxes,
    CoefficientMode,
    CoefficientSet,
    FieldKind,
    GridFunction,
    TimeAxis,
    TorusGrid,
    jump_step,
)
from src.solver import solve_parabolic
from src.stochastic import (
    CHUNK_SIZE,
    AdditiveTriplet,
    Interpolation,
    RemainderJumps,
    char_function_check,
    chunks,
    laplace_check,
    mc_solve,
    periodic_interpolator,
    positive_stable,
    sample_additive,
    sample_iasbm,
    sample_subordinator,
    stream,
)

TWO_PI = 2.0 * math.pi
N = 20000


def tolerance(n):
    return 4.0 / math.sqrt(n)


def relative_l2(u, v):
    return float(np.linalg.norm(u - v) / np.linalg.norm(v))


def step_coefficients(a, c1=0.5, switch=0.5):
    """a_i(t) = c1 + (1/c1 - c1) 1_{t > switch}, b = b0"""
    times = [0.0, switch, switch + 1e-9, 1.0]
    a_values = [c1, c1, 1.0 / c1, 1.0 / c1]
    b0 = list(a.effective_drifts)
    return CoefficientSet(c1, b0, times, [[b] * 4 for b in b0], [a_values] * a.ell)


# ========== STREAMS ==========

def test_streams_are_keyed_by_cell():
    first = stream(7, 1, 0, 0, 0).random(4)
    assert np.array_equal(first, stream(7, 1, 0, 0, 0).random(4))
    assert not np.array_equal(first, stream(7, 1, 0, 0, 1).random(4))
    assert not np.array_equal(first, stream(7, 2, 0, 0, 0).random(4))
    assert not np.array_equal(first, stream(8, 1, 0, 0, 0).random(4))


def test_chunks_cover_paths():
    parts = list(chunks(2 * CHUNK_SIZE + 5))
    assert [p[0] for p in parts] == [0, 1, 2]
    assert parts[0][1] == 0 and parts[-1][2] == 2 * CHUNK_SIZE + 5
    assert all(a[2] == b[1] for a, b in zip(parts, parts[1:]))


def test_positive_stable_laplace_transform():
    rng = stream(1, 1, 0, 0, 0)
    for alpha in (0.3, 0.5, 0.8):
        s = positive_stable(alpha, N, rng)
        assert np.all(s > 0.0)
        assert abs(np.mean(np.exp(-s)) - math.exp(-1.0)) < tolerance(N)


# ========== SUBORDINATORS ==========

def test_drift_only_subordinator_is_deterministic(gaussian_phi):
    nodes = np.linspace(0.0, 2.0, 9)
    ensemble = sample_subordinator(gaussian_phi, nodes, 100, seed=3)
    assert ensemble.values.shape == (100, 9, 1)
    assert np.allclose(ensemble.values[:, :, 0], nodes[None, :], rtol=0.0, atol=1e-14)


def test_stable_subordinator_laplace(cauchy_phi):
    ensemble = sample_subordinator(cauchy_phi, [0.0, 0.5, 1.0], N, seed=11)
    assert np.all(np.diff(ensemble.values[:, :, 0], axis=1) >= 0.0)
    assert np.all(ensemble.values[:, 0, :] == 0.0)
    report = laplace_check(ensemble, cauchy_phi, [0.5, 1.0, 2.0], [0.5, 1.0])
    assert report.passed
    assert report.threshold == pytest.approx(tolerance(N))


def test_atom_subordinator_laplace(single_atom):
    ensemble = sample_subordinator(single_atom, [0.0, 1.0, 2.0], N, seed=5)
    empirical = np.mean(np.exp(-ensemble.at(2.0)[:, 0]))
    assert abs(empirical - math.exp(-2.0 * (1.0 - math.exp(-1.0)))) < tolerance(N)
    assert np.all(np.mod(ensemble.values, 1.0) == 0.0)


def test_density_subordinator_laplace(power_table):
    ensemble = sample_subordinator(power_table, [0.0, 1.0], N, seed=2)
    assert 0.0 < ensemble.metadata["neglected_variance"] <= 1e-6
    assert np.all(np.diff(ensemble.values[:, :, 0], axis=1) >= 0.0)
    assert laplace_check(ensemble, power_table, [0.25, 1.0, 4.0], [1.0]).passed


def test_subordinator_rejects_bad_grid(cauchy_phi):
    with pytest.raises(ArgumentError):
        sample_subordinator(cauchy_phi, [0.5, 1.0], 10, seed=0)
    with pytest.raises(ArgumentError):
        sample_subordinator(cauchy_phi, [0.0, 1.0, 1.0], 10, seed=0)
    with pytest.raises(ArgumentError):
        sample_subordinator(cauchy_phi, [0.0, 1.0], 0, seed=0)


# ========== IASBM ==========

def test_iasbm_marginals(gaussian_phi, cauchy_phi):
    a = Anisotropy([1, 1], [gaussian_phi, cauchy_phi])
    ensemble = sample_iasbm(a, [0.0, 0.5, 1.0], N, seed=9)
    assert ensemble.dims == (1, 1)
    x = ensemble.at(1.0)
    # Brownian block: variance 2t
    ks = stats.kstest(x[:, 0], stats.norm(scale=math.sqrt(2.0)).cdf).statistic
    assert ks < 1.63 / math.sqrt(N)
    # Cauchy block: median |X| = tan(pi / 4)
    assert abs(np.median(np.abs(x[:, 1])) - 1.0) < 0.05
    # independent blocks
    assert abs(np.mean(np.sin(x[:, 0]) * np.sin(x[:, 1]))) < tolerance(N)


def test_iasbm_char_function(mixed_anisotropy):
    ensemble = sample_iasbm(mixed_anisotropy, np.linspace(0.0, 1.0, 5), N, seed=4)
    report = char_function_check(ensemble, mixed_anisotropy, [[1.0, 1.0], [0.5, 0.0], [0.0, 2.0]], [0.5, 1.0])
    assert report.passed
    assert report.name == "char_function"
    assert report.metadata["max_deviation"] == report.sup
    assert report.metadata["n_paths"] == N


def test_iasbm_is_reproducible_across_workers(mixed_anisotropy):
    nodes = [0.0, 0.5, 1.0]
    n = CHUNK_SIZE + 100
    one = sample_iasbm(mixed_anisotropy, nodes, n, seed=21, workers=1)
    many = sample_iasbm(mixed_anisotropy, nodes, n, seed=21, workers=4)
    assert np.array_equal(one.values, many.values)
    other = sample_iasbm(mixed_anisotropy, nodes, n, seed=22)
    assert not np.array_equal(one.values, other.values)


def test_ensemble_at_needs_a_node(mixed_anisotropy):
    ensemble = sample_iasbm(mixed_anisotropy, [0.0, 1.0], 10, seed=0)
    assert np.all(ensemble.at(0.0) == 0.0)
    with pytest.raises(ArgumentError):
        ensemble.at(0.3)


# ========== CHARACTERISTIC FUNCTION ==========

def test_char_function_at_zero_frequency(mixed_anisotropy):
    ensemble = sample_iasbm(mixed_anisotropy, [0.0, 1.0], 50, seed=1)
    report = char_function_check(ensemble, mixed_anisotropy, [[0.0, 0.0]], [1.0])
    assert report.sup == pytest.approx(0.0, abs=1e-15)


def test_char_function_gaussian_blocks(gaussian_phi):
    a = Anisotropy([2], [gaussian_phi])
    ensemble = sample_iasbm(a, [0.0, 1.0], N, seed=6)
    assert char_function_check(ensemble, a, [[1.0, 0.0], [0.5, 0.5]], [1.0]).passed


def test_char_function_target(mixed_anisotropy):
    ensemble = sample_iasbm(mixed_anisotropy, [0.0, 1.0], N, seed=8)
    report = char_function_check(ensemble, mixed_anisotropy, [[1.0, 1.0]], [1.0])
    empirical = np.mean(np.cos(ensemble.at(1.0) @ np.array([1.0, 1.0])))
    assert abs(empirical - math.exp(-2.0)) < tolerance(N)
    assert report.passed


def test_char_function_rejects_bad_inputs(mixed_anisotropy):
    ensemble = sample_iasbm(mixed_anisotropy, [0.0, 1.0], 10, seed=0)
    with pytest.raises(ArgumentError):
        char_function_check(ensemble, mixed_anisotropy, [], [1.0])
    with pytest.raises(ArgumentError):
        char_function_check(ensemble, mixed_anisotropy, [[1.0, 0.0]], [])
    with pytest.raises(ArgumentError):
        char_function_check(ensemble, mixed_anisotropy, [[1.0]], [1.0])


# ========== ADDITIVE PROCESSES ==========

def test_unit_coefficients_reproduce_iasbm(mixed_anisotropy):
    nodes = [0.0, 0.25, 0.5, 1.0]
    unit = CoefficientSet.unit(mixed_anisotropy)
    additive = sample_additive(unit, mixed_anisotropy, nodes, 500, seed=13)
    iasbm = sample_iasbm(mixed_anisotropy, nodes, 500, seed=13)
    assert np.allclose(additive.values, iasbm.values, rtol=1e-12, atol=0.0)


def test_scaled_coefficients_scale_the_exponent(mixed_anisotropy):
    c1 = 0.5
    b = [c1 * d for d in mixed_anisotropy.effective_drifts]
    coeffs = CoefficientSet.constant(mixed_anisotropy, c1=c1, a=c1, b=b)
    nodes = np.linspace(0.0, 1.0, 5)
    triplet = AdditiveTriplet.from_coefficients(coeffs, mixed_anisotropy, nodes)
    xi = [1.0, 1.0]
    assert triplet.exponent(xi, 1.0).real == pytest.approx(c1 * mixed_anisotropy.symbol_at(xi), rel=1e-12)
    ensemble = sample_additive(coeffs, mixed_anisotropy, nodes, N, seed=17, triplet=triplet)
    empirical = np.mean(np.cos(ensemble.at(1.0) @ np.array(xi)))
    assert abs(empirical - math.exp(-c1 * 2.0)) < tolerance(N)
    assert char_function_check(ensemble, triplet, [xi, [2.0, 0.0]], [0.5, 1.0]).passed


def test_zero_reference_drift_has_no_gaussian_part(cauchy_phi):
    a = Anisotropy([1, 1], [cauchy_phi, BernsteinFunction.stable(0.7)])
    coeffs = CoefficientSet.constant(a, c1=0.5, a=0.8)
    triplet = AdditiveTriplet.from_coefficients(coeffs, a, [0.0, 0.5, 1.0])
    assert np.all(triplet.diffusion == 0.0)
    assert np.allclose(triplet.clock, 0.8)


def test_time_dependent_exponent_is_slab_integrated(mixed_anisotropy):
    coeffs = step_coefficients(mixed_anisotropy)
    nodes = np.linspace(0.0, 1.0, 17)
    triplet = AdditiveTriplet.from_coefficients(coeffs, mixed_anisotropy, nodes)
    xi = [1.0, 1.0]
    # jump part of stable(0.5) runs at 0.5 then 2; stable(1) is pure drift
    expected = 0.5 * (0.5 + 2.0) * 1.0 + 1.0 * 1.0
    assert triplet.exponent(xi, 1.0).real == pytest.approx(expected, rel=1e-12)
    assert triplet.exponent(xi, 0.0) == 0.0
    with pytest.raises(ArgumentError):
        triplet.exponent(xi, 0.3)


def test_time_dependent_char_function(mixed_anisotropy):
    coeffs = step_coefficients(mixed_anisotropy)
    nodes = np.linspace(0.0, 1.0, 9)
    triplet = AdditiveTriplet.from_coefficients(coeffs, mixed_anisotropy, nodes)
    ensemble = sample_additive(coeffs, mixed_anisotropy, nodes, N, seed=23, triplet=triplet)
    report = char_function_check(ensemble, triplet, [[1.0, 1.0], [2.0, 0.0], [0.5, 0.5]], [0.5, 1.0])
    assert report.passed


def test_time_jump_remainder_sampling(cauchy_phi):
    a = Anisotropy([1], [cauchy_phi])
    coeffs = CoefficientSet(0.5, [0.0], [0.0, 1.0], [[0.0, 0.0]], [jump_step(0.5)],
                            mode=CoefficientMode.TIME_JUMP)
    nodes = np.linspace(0.0, 1.0, 5)
    triplet = AdditiveTriplet.from_coefficients(coeffs, a, nodes)
    assert np.allclose(triplet.clock, 0.5)
    remainder = triplet.remainders[(0, 0)]
    assert remainder.rate * 0.25 <= 256.0 * (1.0 + 1e-2)
    assert remainder.drift < 0.0
    assert 0.0 < triplet.neglected_variance < 1e-3
    # odd coefficient part makes the exponent complex
    assert abs(triplet.exponent([1.0], 1.0).imag) > 0.1

    n = 4000
    ensemble = sample_additive(coeffs, a, nodes, n, seed=29, triplet=triplet)
    assert ensemble.metadata["neglected_variance"] == triplet.neglected_variance
    assert ensemble.metadata["mode"] == "time_jump"
    report = char_function_check(ensemble, triplet, [[0.5], [1.0], [-1.0]], [0.5, 1.0])
    assert report.passed


def test_remainder_variance_matches_stable_closed_form(cauchy_phi):
    step = jump_step(0.5)
    remainder = RemainderJumps(cauchy_phi, lambda y: step(1.0, y), 0.5, 0.25)
    # excess 1.5 on y > 0 against j(y) = y^{-2} / pi
    assert remainder.neglected_variance == pytest.approx(1.5 / math.pi * remainder.epsilon, rel=1e-6)
    assert remainder.rate == pytest.approx(1.5 / (math.pi * remainder.epsilon), rel=1e-6)
    assert remainder.drift == pytest.approx(1.5 / math.pi * math.log(remainder.epsilon), rel=1e-6)


def test_additive_is_reproducible_across_workers(mixed_anisotropy):
    coeffs = step_coefficients(mixed_anisotropy)
    nodes = np.linspace(0.0, 1.0, 5)
    n = CHUNK_SIZE + 7
    one = sample_additive(coeffs, mixed_anisotropy, nodes, n, seed=31, workers=1)
    many = sample_additive(coeffs, mixed_anisotropy, nodes, n, seed=31, workers=8)
    assert np.array_equal(one.values, many.values)


# ========== MONTE CARLO SOLUTION ==========

@pytest.fixture
def mc_grid():
    return TorusGrid([BlockAxes(TWO_PI, 16), BlockAxes(TWO_PI, 16)], TimeAxis(1.0, 64))


def test_mc_constant_forcing(mixed_anisotropy, mc_grid):
    f = GridFunction(mc_grid, np.full(mc_grid.shape, 3.0), FieldKind.space_time)
    solution = mc_solve(f, None, mixed_anisotropy, 0.5, mc_grid.spatial(), 300, seed=1)
    assert np.allclose(solution.u.values, 1.5, rtol=1e-12)
    assert np.all(solution.standard_error.values < 1e-10)
    assert solution.metadata["route"] == "spectral"
    assert solution.n_paths == 300 and solution.seed == 1

    direct = mc_solve(lambda s, x: np.full(x.shape[:-1], 3.0), None, mixed_anisotropy, 0.5,
                      mc_grid.spatial(), 300, seed=1, time_grid=mc_grid.time.nodes)
    assert direct.metadata["route"] == "direct"
    assert np.allclose(direct.u.values, 1.5, rtol=1e-12)

    linear = mc_solve(f, None, mixed_anisotropy, 0.5, mc_grid.spatial(), 300, seed=1,
                      interpolation=Interpolation.MULTILINEAR)
    assert np.allclose(linear.u.values, 1.5, rtol=1e-12)


def test_mc_zero_forcing(mixed_anisotropy, mc_grid):
    f = GridFunction(mc_grid, np.zeros(mc_grid.shape), FieldKind.space_time)
    solution = mc_solve(f, None, mixed_anisotropy, 1.0, mc_grid.spatial(), 50, seed=0)
    assert np.all(solution.u.values == 0.0)
    assert np.all(solution.standard_error.values == 0.0)


def single_mode_forcing(grid):
    x1, x2 = grid.spatial().mesh()
    envelope = np.sin(math.pi * grid.time.nodes).reshape(-1, 1, 1)
    return GridFunction(grid, envelope * np.cos(x1 + x2), FieldKind.space_time)


def test_mc_matches_spectral_solver(mixed_anisotropy, mc_grid):
    f = single_mode_forcing(mc_grid)
    oracle = solve_parabolic(f, mixed_anisotropy).values[-1]
    solution = mc_solve(f, None, mixed_anisotropy, 1.0, mc_grid.spatial(), 8000, seed=37)
    se = float(np.linalg.norm(solution.standard_error.values) / np.linalg.norm(oracle))
    assert relative_l2(solution.u.values, oracle) <= max(3.0 * se, 0.02)


def test_mc_standard_error_shrinks(mixed_anisotropy, mc_grid):
    f = single_mode_forcing(mc_grid)
    coarse = mc_solve(f, None, mixed_anisotropy, 1.0, mc_grid.spatial(), 2000, seed=41)
    fine = mc_solve(f, None, mixed_anisotropy, 1.0, mc_grid.spatial(), 8000, seed=41)
    ratio = float(np.mean(coarse.standard_error.values) / np.mean(fine.standard_error.values))
    assert 1.6 <= ratio <= 2.4


def test_mc_is_reproducible_across_workers(mixed_anisotropy, mc_grid):
    f = single_mode_forcing(mc_grid)
    n = CHUNK_SIZE + 50
    one = mc_solve(f, None, mixed_anisotropy, 1.0, mc_grid.spatial(), n, seed=43, workers=1)
    many = mc_solve(f, None, mixed_anisotropy, 1.0, mc_grid.spatial(), n, seed=43, workers=3)
    assert np.array_equal(one.u.values, many.u.values)
    assert np.array_equal(one.standard_error.values, many.standard_error.values)


def test_mc_rejects_bad_times(mixed_anisotropy, mc_grid):
    f = single_mode_forcing(mc_grid)
    with pytest.raises(ArgumentError):
        mc_solve(f, None, mixed_anisotropy, 2.0, mc_grid.spatial(), 10, seed=0)
    with pytest.raises(ArgumentError):
        mc_solve(f, None, mixed_anisotropy, 0.3, mc_grid.spatial(), 10, seed=0)


def test_periodic_interpolator(mc_grid):
    x1, x2 = mc_grid.spatial().mesh()
    values = np.cos(x1) * np.sin(2.0 * x2)
    g = periodic_interpolator(GridFunction(mc_grid.spatial(), values))
    points = np.stack(np.meshgrid(mc_grid.coordinates(0), mc_grid.coordinates(1), indexing="ij"), axis=-1)
    assert np.allclose(g(0.0, points), values, atol=1e-12)
    # periodic wrap
    assert np.allclose(g(0.0, points + TWO_PI), values, atol=1e-12)


@pytest.mark.slow
def test_mc_acceptance_scale(mixed_anisotropy):
    grid = TorusGrid([BlockAxes(TWO_PI, 32), BlockAxes(TWO_PI, 32)], TimeAxis(1.0, 64))
    f = single_mode_forcing(grid)
    oracle = solve_parabolic(f, mixed_anisotropy).values[-1]
    solution = mc_solve(f, None, mixed_anisotropy, 1.0, grid.spatial(), 100000, seed=2024, workers=4)
    se = float(np.linalg.norm(solution.standard_error.values) / np.linalg.norm(oracle))
    assert relative_l2(solution.u.values, oracle) <= max(3.0 * se, 0.02)


@pytest.mark.slow
def test_char_function_acceptance_scale(mixed_anisotropy):
    n = 100000
    xi_list = [[1.0, 1.0], [0.5, 0.0], [0.0, 1.5], [2.0, 1.0], [0.25, 0.25]]
    ensemble = sample_iasbm(mixed_anisotropy, [0.0, 0.5, 1.0], n, seed=2024, workers=4)
    assert char_function_check(ensemble, mixed_anisotropy, xi_list, [0.5, 1.0]).passed
    coeffs = step_coefficients(mixed_anisotropy)
    nodes = np.linspace(0.0, 1.0, 17)
    triplet = AdditiveTriplet.from_coefficients(coeffs, mixed_anisotropy, nodes)
    additive = sample_additive(coeffs, mixed_anisotropy, nodes, n, seed=2024, workers=4, triplet=triplet)
    assert char_function_check(additive, triplet, xi_list, [0.5, 1.0]).passed
