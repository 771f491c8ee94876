"""Tests for the spectral parabolic/elliptic solvers and the quadrature residual"""
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from src.bernstein import Anisotropy, BernsteinFunction
from src.common.errors import ArgumentError, UnsupportedModeError
from src.operators import (
    BlockAxes,
    CoefficientMode,
    CoefficientSet,
    FieldKind,
    GridFunction,
    TimeAxis,
    TorusGrid,
    apply_anisotropic_symbol,
    jump_step,
)
from src.solver import (
    apply_G,
    duhamel_weights,
    laplace_weighted_parabolic,
    observed_order,
    residual,
    solve_elliptic,
    solve_parabolic,
)

TWO_PI = 2.0 * math.pi


def space_time_grid(counts, horizon=1.0, steps=32):
    return TorusGrid([BlockAxes(TWO_PI, n) for n in counts], TimeAxis(horizon, steps))


def random_modes(grid, rng, max_mode=2, terms=4):
    mesh = grid.spatial().mesh()
    values = np.zeros(grid.spatial_shape)
    for _ in range(terms):
        ks = rng.integers(-max_mode, max_mode + 1, size=grid.total_dim)
        arg = sum(k * x for k, x in zip(ks, mesh)) + rng.uniform(0.0, TWO_PI)
        values = values + rng.normal() * np.cos(arg)
    return values


def smooth_forcing(grid, rng):
    """sin(pi t / T) envelope times a random trigonometric polynomial"""
    envelope = np.sin(math.pi * grid.time.nodes / grid.time.end)
    space = random_modes(grid, rng)
    return GridFunction(grid, envelope.reshape((-1,) + (1,) * grid.total_dim) * space, FieldKind.space_time)


def in_time(grid, space_values, time_values=None):
    time_values = np.ones(grid.time.steps + 1) if time_values is None else time_values
    values = time_values.reshape((-1,) + (1,) * grid.total_dim) * space_values
    return GridFunction(grid, values, FieldKind.space_time)


def varying_coefficients(a, nodes, c1=0.5):
    b0 = np.asarray(a.effective_drifts)
    b = [b0i * (1.0 + 0.5 * np.sin(nodes)) for b0i in b0]
    coef = [1.0 + 0.5 * np.cos(nodes + i) for i in range(a.ell)]
    return CoefficientSet(c1, b0, nodes, b, coef)


# ========== DUHAMEL WEIGHTS ==========

def test_duhamel_weights_series_matches_closed_form():
    z = np.array([9.9e-4, 1.01e-3])
    w_prev, w_next = duhamel_weights(z)
    assert w_prev[0] == pytest.approx(w_prev[1], rel=1e-4)
    assert w_next[0] == pytest.approx(w_next[1], rel=1e-4)
    w_prev0, w_next0 = duhamel_weights(np.array([0.0]))
    assert w_prev0[0] == 0.5 and w_next0[0] == 0.5


# ========== PARABOLIC ==========

def test_constant_forcing_grows_linearly(mixed_anisotropy):
    grid = space_time_grid([16, 16], horizon=2.0, steps=20)
    f = in_time(grid, np.full(grid.spatial_shape, 1.5))
    coeffs = varying_coefficients(mixed_anisotropy, grid.time.nodes)
    u = solve_parabolic(f, mixed_anisotropy, coeffs, horizon=2.0)
    expected = 1.5 * grid.time.nodes.reshape(-1, 1, 1) * np.ones(grid.shape)
    assert np.allclose(u.values, expected, atol=1e-12)


def test_single_mode_constant_symbol(mixed_anisotropy):
    grid = space_time_grid([32, 16], horizon=1.0, steps=8)
    x1, x2 = grid.spatial().mesh()
    mode = np.cos(3.0 * x1) * np.cos(2.0 * x2)
    u = solve_parabolic(in_time(grid, mode), mixed_anisotropy)
    psi = 3.0 + 4.0
    t = grid.time.nodes.reshape(-1, 1, 1)
    assert np.allclose(u.values, mode * (1.0 - np.exp(-t * psi)) / psi, atol=1e-12)


def test_oscillating_coefficients_match_ode_oracle():
    phi = BernsteinFunction.stable(0.5, drift=1.0)
    aniso = Anisotropy([1], [phi])
    grid = space_time_grid([16], horizon=2.0, steps=4000)
    nodes = grid.time.nodes
    coeffs = CoefficientSet(0.5, [1.0], nodes, [1.0 + 0.5 * np.sin(nodes)], [1.0 + 0.5 * np.cos(nodes)])
    (x,) = grid.spatial().mesh()
    u = solve_parabolic(in_time(grid, np.cos(2.0 * x)), aniso, coeffs)

    def rhs(t, y):
        psi = (1.0 + 0.5 * math.sin(t)) * 4.0 + (1.0 + 0.5 * math.cos(t)) * 2.0
        return [-psi * y[0] + 1.0]

    oracle = solve_ivp(rhs, (0.0, 2.0), [0.0], method="DOP853", rtol=1e-12, atol=1e-14,
                       t_eval=nodes[::500])
    assert np.allclose(u.values[::500, 0], oracle.y[0], rtol=1e-6, atol=1e-12)


def test_solver_is_linear_causal_and_real(mixed_anisotropy):
    rng = np.random.default_rng(0)
    grid = space_time_grid([16, 16], steps=24)
    f, g = smooth_forcing(grid, rng), smooth_forcing(grid, rng)
    coeffs = varying_coefficients(mixed_anisotropy, grid.time.nodes)
    uf = solve_parabolic(f, mixed_anisotropy, coeffs)
    ug = solve_parabolic(g, mixed_anisotropy, coeffs)
    combo = GridFunction(grid, 2.0 * f.values - 3.0 * g.values, FieldKind.space_time)
    u_combo = solve_parabolic(combo, mixed_anisotropy, coeffs)
    assert np.allclose(u_combo.values, 2.0 * uf.values - 3.0 * ug.values, atol=1e-12)
    assert uf.is_real

    tail = f.values.copy()
    tail[13:] += 5.0
    perturbed = solve_parabolic(GridFunction(grid, tail, FieldKind.space_time), mixed_anisotropy, coeffs)
    assert np.allclose(perturbed.values[:13], uf.values[:13], rtol=0.0, atol=1e-13)


def test_solver_rejects_time_jump_and_initial_data(cauchy_phi):
    aniso = Anisotropy([1], [cauchy_phi])
    grid = space_time_grid([16])
    f = in_time(grid, np.zeros(16))
    coeffs = CoefficientSet(0.5, [0.0], [0.0], [[0.0]], [jump_step(0.5)], CoefficientMode.TIME_JUMP)
    with pytest.raises(UnsupportedModeError):
        solve_parabolic(f, aniso, coeffs)
    with pytest.raises(ArgumentError):
        solve_parabolic(f, aniso, initial=GridFunction(grid.spatial(), np.ones(16)))
    with pytest.raises(ArgumentError):
        solve_parabolic(f, aniso, horizon=3.0)


# ========== G ==========

def test_apply_G_single_mode(mixed_anisotropy):
    grid = space_time_grid([32, 16], steps=10)
    x1, x2 = grid.spatial().mesh()
    mode = np.cos(3.0 * x1) * np.cos(2.0 * x2)
    gf = apply_G(in_time(grid, mode), mixed_anisotropy)
    t = grid.time.nodes.reshape(-1, 1, 1)
    assert np.allclose(gf.values, -(1.0 - np.exp(-7.0 * t)) * mode, atol=1e-12)


def test_apply_G_kills_spatial_constants(mixed_anisotropy):
    grid = space_time_grid([16, 16])
    gf = apply_G(in_time(grid, np.ones(grid.spatial_shape), np.linspace(0.0, 1.0, 33)), mixed_anisotropy)
    assert np.max(np.abs(gf.values)) < 1e-12


def test_apply_G_is_generator_of_solution(mixed_anisotropy):
    grid = space_time_grid([16, 16])
    f = smooth_forcing(grid, np.random.default_rng(1))
    gf = apply_G(f, mixed_anisotropy)
    lu = apply_anisotropic_symbol(solve_parabolic(f, mixed_anisotropy), mixed_anisotropy, 1)
    assert np.max(np.abs(gf.spectrum() - lu.spectrum())) <= 1e-12 * np.max(np.abs(gf.spectrum()))


def test_apply_G_splits_over_blocks(mixed_anisotropy):
    grid = space_time_grid([32, 16], steps=10)
    x1, x2 = grid.spatial().mesh()
    mode = np.cos(3.0 * x1) * np.cos(2.0 * x2)
    f = in_time(grid, mode)
    t = grid.time.nodes.reshape(-1, 1, 1)
    # phi_1(9) = 3 and phi_2(4) = 4 out of psi = 7
    g1 = apply_G(f, mixed_anisotropy, blocks=[0])
    assert np.allclose(g1.values, -(3.0 / 7.0) * (1.0 - np.exp(-7.0 * t)) * mode, atol=1e-12)
    total = g1.values + apply_G(f, mixed_anisotropy, blocks=[1]).values
    assert np.allclose(total, apply_G(f, mixed_anisotropy).values, atol=1e-12)


def test_apply_G_contracts_in_l2(mixed_anisotropy):
    rng = np.random.default_rng(2)
    grid = space_time_grid([16, 16], horizon=2.0, steps=128)
    for _ in range(5):
        f = smooth_forcing(grid, rng)
        gf = apply_G(f, mixed_anisotropy)
        assert np.linalg.norm(gf.values) <= (1.0 + 1e-6) * np.linalg.norm(f.values)


# ========== ELLIPTIC ==========

def test_elliptic_constant_and_single_mode(mixed_anisotropy):
    grid = TorusGrid([BlockAxes(TWO_PI, 32), BlockAxes(TWO_PI, 16)])
    u = solve_elliptic(GridFunction(grid, np.full(grid.spatial_shape, 2.0)), mixed_anisotropy, 4.0)
    assert np.allclose(u.values, -0.5, atol=1e-14)

    x1, x2 = grid.mesh()
    mode = np.cos(3.0 * x1) * np.sin(2.0 * x2)
    u = solve_elliptic(GridFunction(grid, mode), mixed_anisotropy, 1.0)
    assert np.allclose(u.values, -mode / 8.0, atol=1e-13)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_elliptic_resolvent_bound(mixed_anisotropy, lam):
    rng = np.random.default_rng(3)
    grid = TorusGrid([BlockAxes(TWO_PI, 32), BlockAxes(TWO_PI, 32)])
    for _ in range(20):
        f = GridFunction(grid, random_modes(grid.with_time(TimeAxis(1.0, 1)), rng))
        u = solve_elliptic(f, mixed_anisotropy, lam)
        assert lam * np.linalg.norm(u.values) <= (1.0 + 1e-12) * np.linalg.norm(f.values)


def test_elliptic_rejects_bad_inputs(mixed_anisotropy):
    grid = TorusGrid([BlockAxes(TWO_PI, 16), BlockAxes(TWO_PI, 16)])
    f = GridFunction(grid, np.ones(grid.spatial_shape))
    with pytest.raises(ArgumentError):
        solve_elliptic(f, mixed_anisotropy, 0.0)
    varying = varying_coefficients(mixed_anisotropy, np.linspace(0.0, 1.0, 5))
    with pytest.raises(ArgumentError):
        solve_elliptic(f, mixed_anisotropy, 1.0, varying)


def test_laplace_weighted_parabolic_recovers_resolvent(mixed_anisotropy):
    grid = TorusGrid([BlockAxes(TWO_PI, 16), BlockAxes(TWO_PI, 16)])
    f = GridFunction(grid, random_modes(grid.with_time(TimeAxis(1.0, 1)), np.random.default_rng(4)))
    lam, horizon = 1.0, 25.0
    direct = solve_elliptic(f, mixed_anisotropy, lam)
    weighted = laplace_weighted_parabolic(f, mixed_anisotropy, lam, horizon, 2000)
    gap = np.linalg.norm(weighted.values - direct.values) / np.linalg.norm(direct.values)
    assert gap < math.exp(-lam * horizon) + 1e-5


# ========== RESIDUAL ==========

def test_residual_trivial_cases(mixed_anisotropy):
    grid = space_time_grid([16, 16], steps=8)
    zero = in_time(grid, np.zeros(grid.spatial_shape))
    assert residual(zero, zero, mixed_anisotropy) == 0.0

    u = in_time(grid, np.full(grid.spatial_shape, 0.7), grid.time.nodes)
    f = in_time(grid, np.full(grid.spatial_shape, 0.7))
    assert residual(u, f, mixed_anisotropy) < 1e-12


def test_residual_converges_at_second_order(mixed_anisotropy):
    rng = np.random.default_rng(5)
    space = None
    residuals = []
    for steps in (16, 32, 64):
        grid = space_time_grid([16, 16], steps=steps)
        if space is None:
            space = random_modes(grid, rng)
        envelope = np.sin(math.pi * grid.time.nodes)
        f = in_time(grid, space, envelope)
        coeffs = varying_coefficients(mixed_anisotropy, grid.time.nodes)
        u = solve_parabolic(f, mixed_anisotropy, coeffs)
        residuals.append(residual(u, f, mixed_anisotropy, coeffs))
    orders = observed_order(residuals)
    assert all(order > 1.7 for order in orders)


def test_residual_time_jump_with_unit_step_matches_unit(cauchy_phi):
    aniso = Anisotropy([1], [cauchy_phi])
    grid = space_time_grid([32], steps=32)
    f = in_time(grid, random_modes(grid, np.random.default_rng(6)), np.sin(math.pi * grid.time.nodes))
    u = solve_parabolic(f, aniso)
    unit_jump = CoefficientSet(1.0, [0.0], [0.0], [[0.0]], [jump_step(1.0)], CoefficientMode.TIME_JUMP)
    assert residual(u, f, aniso, unit_jump) == pytest.approx(residual(u, f, aniso), rel=1e-6)


def test_observed_order():
    assert observed_order([1.0, 0.25, 0.0625]) == pytest.approx([2.0, 2.0])
    assert observed_order([1.0, 0.0]) == [math.inf]
