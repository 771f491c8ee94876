"""Tests for periodic grids, spectral symbols, the jump quadrature and multiplier diagnostics"""
import math

import numpy as np
import pytest

from src.bernstein import Anisotropy, BernsteinFunction
from src.common.errors import ArgumentError
from src.operators import (
    BlockAxes,
    CoefficientMode,
    CoefficientSet,
    DerivativeForm,
    FieldKind,
    GridFunction,
    SymbolMode,
    TimeAxis,
    TorusGrid,
    apply_anisotropic_symbol,
    apply_jump_quadrature,
    coefficient_multiplier_bound,
    coordinate_split_norms,
    jump_multiplier,
    jump_step,
    lp_norm,
    mikhlin_marcinkiewicz_diagnostic,
    multiplier_xi_grid,
    sobolev_norm,
)

TWO_PI = 2.0 * math.pi


def torus(*counts, dims=None):
    dims = dims or [1] * len(counts)
    return TorusGrid([BlockAxes(TWO_PI, n, d) for n, d in zip(counts, dims)])


def band_limited(grid, rng, max_mode=4, terms=6):
    """Random real trigonometric polynomial with integer modes |k| <= max_mode"""
    mesh = grid.mesh()
    values = np.zeros(grid.spatial_shape)
    for _ in range(terms):
        ks = rng.integers(-max_mode, max_mode + 1, size=grid.total_dim)
        phase = rng.uniform(0.0, TWO_PI)
        arg = sum(k * x for k, x in zip(ks, mesh)) + phase
        values = values + rng.normal() * np.cos(arg)
    return GridFunction(grid, values)


# ========== GRID ==========

def test_grid_shapes_and_sidecar():
    grid = TorusGrid([BlockAxes(4.0, 16, 1), BlockAxes(TWO_PI, 32, 2)], TimeAxis(1.0, 8))
    assert grid.dims == (1, 2)
    assert grid.shape == (9, 16, 32, 32)
    assert grid.axis_names == ["t", "x1_1", "x2_1", "x2_2"]
    assert grid.volume == pytest.approx(4.0 * TWO_PI ** 2)
    sidecar = grid.sidecar()
    assert sidecar["counts"] == [9, 16, 32, 32]
    assert sidecar["periodic"] == [False, True, True, True]
    assert sidecar["extents"][0] == [0.0, 1.0]


def test_grid_frequencies_are_integer_multiples():
    grid = torus(16)
    xi = grid.wavenumbers(0)
    assert np.allclose(xi[:8], np.arange(8))
    assert xi[8] == pytest.approx(-8.0)


@pytest.mark.parametrize("count", [8, 24, 8192])
def test_block_axes_rejects_bad_counts(count):
    with pytest.raises(ArgumentError):
        BlockAxes(1.0, count)


def test_grid_function_shape_checked():
    with pytest.raises(ArgumentError):
        GridFunction(torus(16), np.zeros(32))
    with pytest.raises(ArgumentError):
        GridFunction(torus(16), np.zeros(16), FieldKind.space_time)


def test_real_function_has_conjugate_symmetric_spectrum():
    u = band_limited(torus(32, 16), np.random.default_rng(3))
    assert u.conjugate_symmetry_defect() < 1e-12


# ========== SPECTRAL SYMBOL ==========

def test_generator_on_single_mode(mixed_anisotropy):
    grid = torus(32, 32)
    x1, x2 = grid.mesh()
    u = GridFunction(grid, np.cos(3.0 * x1) * np.cos(2.0 * x2))
    out = apply_anisotropic_symbol(u, mixed_anisotropy, 1, SymbolMode.GENERATOR)
    # phi_1(9) + phi_2(4) = 3 + 4
    assert np.allclose(out.values, -7.0 * u.values, atol=1e-12)


def test_bessel_zero_power_is_identity(mixed_anisotropy):
    u = band_limited(torus(16, 16), np.random.default_rng(0))
    out = apply_anisotropic_symbol(u, mixed_anisotropy, 0, SymbolMode.BESSEL)
    assert np.allclose(out.values, u.values, atol=1e-13)


def test_generator_kills_constants(mixed_anisotropy):
    u = GridFunction(torus(16, 16), np.full((16, 16), 2.5))
    out = apply_anisotropic_symbol(u, mixed_anisotropy, 1, SymbolMode.GENERATOR)
    assert np.max(np.abs(out.values)) < 1e-13


def test_generator_and_bessel_commute(mixed_anisotropy):
    u = band_limited(torus(32, 16), np.random.default_rng(1))
    gb = apply_anisotropic_symbol(apply_anisotropic_symbol(u, mixed_anisotropy, 2), mixed_anisotropy,
                                  1.5, SymbolMode.BESSEL)
    bg = apply_anisotropic_symbol(apply_anisotropic_symbol(u, mixed_anisotropy, 1.5, SymbolMode.BESSEL),
                                  mixed_anisotropy, 2)
    a, b = gb.spectrum(), bg.spectrum()
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_symbol_rejects_bad_inputs(mixed_anisotropy):
    u = band_limited(torus(16, 16), np.random.default_rng(0))
    with pytest.raises(ArgumentError):
        apply_anisotropic_symbol(u, mixed_anisotropy, 0.5, SymbolMode.GENERATOR)
    with pytest.raises(ArgumentError):
        apply_anisotropic_symbol(u, Anisotropy([2], [BernsteinFunction.stable(0.5)]), 1)


def test_space_time_input_is_transformed_per_slice(cauchy_phi):
    grid = TorusGrid([BlockAxes(TWO_PI, 16)], TimeAxis(1.0, 3))
    (x,) = grid.mesh()
    values = np.stack([k * np.cos(2.0 * x) for k in range(4)])
    u = GridFunction(grid, values, FieldKind.space_time)
    out = apply_anisotropic_symbol(u, Anisotropy([1], [cauchy_phi]), 1)
    assert np.allclose(out.values, -2.0 * values, atol=1e-12)


# ========== SOBOLEV NORMS ==========

@pytest.mark.parametrize("gamma", [-1.0, 0.0, 2.0])
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_sobolev_norm_of_constant(mixed_anisotropy, gamma, p):
    grid = torus(16, 16)
    u = GridFunction(grid, np.full(grid.spatial_shape, -3.0))
    assert sobolev_norm(u, mixed_anisotropy, gamma, p) == pytest.approx(3.0 * grid.volume ** (1.0 / p), rel=1e-12)


def test_sobolev_norm_zero_gamma_is_lp(mixed_anisotropy):
    u = band_limited(torus(16, 16), np.random.default_rng(4))
    assert sobolev_norm(u, mixed_anisotropy, 0.0, 3.0) == lp_norm(u, 3.0)


def test_sobolev_norm_single_mode(mixed_anisotropy):
    grid = torus(32, 32)
    x1, _ = grid.mesh()
    u = GridFunction(grid, np.cos(4.0 * x1) + 0.0 * grid.mesh()[1])
    # 1 + phi_1(16) = 5
    assert sobolev_norm(u, mixed_anisotropy, 2.0, 2.0) == pytest.approx(5.0 * lp_norm(u, 2.0), rel=1e-12)


def test_sobolev_norm_rejects_p(mixed_anisotropy):
    u = band_limited(torus(16, 16), np.random.default_rng(0))
    for p in (1.0, math.inf):
        with pytest.raises(ArgumentError):
            sobolev_norm(u, mixed_anisotropy, 1.0, p)


def test_sobolev_embedding_is_monotone(mixed_anisotropy):
    rng = np.random.default_rng(5)
    for _ in range(5):
        u = band_limited(torus(32, 32), rng)
        norms = [sobolev_norm(u, mixed_anisotropy, g, 2.0) for g in (-1.0, 0.0, 0.5, 1.0, 2.5)]
        assert all(a <= b * (1.0 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_generator_norm_equivalence_on_ensemble(mixed_anisotropy):
    rng = np.random.default_rng(6)
    gamma = 1.0
    for _ in range(50):
        u = band_limited(torus(32, 32), rng, terms=4)
        gu = apply_anisotropic_symbol(u, mixed_anisotropy, 1)
        lhs = sobolev_norm(u, mixed_anisotropy, gamma, 2.0) + sobolev_norm(gu, mixed_anisotropy, gamma, 2.0)
        rhs = sobolev_norm(u, mixed_anisotropy, gamma + 2.0, 2.0)
        assert 0.25 <= lhs / rhs <= 4.0


# ========== SPLIT NORMS ==========

def test_split_norms_single_active_block(mixed_anisotropy):
    grid = torus(32, 32)
    x1, x2 = grid.mesh()
    u = GridFunction(grid, np.sin(3.0 * x1) + 0.0 * x2)
    norms = coordinate_split_norms(u, mixed_anisotropy, 2.0)
    assert norms.split == pytest.approx(norms.full, rel=1e-10)


def test_split_norms_one_block(cauchy_phi):
    u = band_limited(torus(64), np.random.default_rng(2))
    norms = coordinate_split_norms(u, Anisotropy([1], [cauchy_phi]), 3.0)
    assert norms.ratio == pytest.approx(1.0, rel=1e-12)


def test_split_norms_ratio_on_random_inputs(mixed_anisotropy):
    rng = np.random.default_rng(7)
    for _ in range(10):
        norms = coordinate_split_norms(band_limited(torus(32, 32), rng), mixed_anisotropy, 2.0)
        assert 1.0 - 1e-12 <= norms.ratio <= math.sqrt(2.0) * 2


# ========== JUMP QUADRATURE ==========

@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_jump_multiplier_matches_stable_symbol(alpha):
    phi = BernsteinFunction.stable(alpha)
    xi = np.array([0.5, 1.0, 3.0, 17.0])
    m = jump_multiplier(phi, xi)
    assert np.allclose(m.real, -xi ** (2 * alpha), rtol=1e-6, atol=0.0)
    assert np.max(np.abs(m.imag)) == 0.0


def test_jump_multiplier_excludes_drift():
    phi = BernsteinFunction.stable(0.5, drift=2.0)
    m = jump_multiplier(phi, np.array([2.0]))
    assert m[0].real == pytest.approx(-2.0, rel=1e-6)
    assert np.all(jump_multiplier(BernsteinFunction.drift_only(1.0), np.array([1.0, 2.0])) == 0.0)


def test_jump_multiplier_of_atoms(single_atom):
    xi = np.array([0.5, 2.0])
    m = jump_multiplier(single_atom, xi)
    assert np.allclose(m.real, -single_atom.evaluate(xi ** 2), rtol=1e-6)


def test_jump_multiplier_with_asymmetric_coefficient(cauchy_phi):
    step = jump_step(0.5)
    xi = np.array([-2.0, 2.0])
    m = jump_multiplier(cauchy_phi, xi, lambda y: step(0.0, y))
    # even part of the coefficient is (0.5 + 2) / 2
    assert m[1].real == pytest.approx(-1.25 * 2.0, rel=1e-6)
    assert m[1].imag != 0.0
    assert m[0] == pytest.approx(np.conj(m[1]), rel=1e-12)


def test_jump_quadrature_agrees_with_symbol_on_random_inputs():
    phi = BernsteinFunction.stable(0.7)
    aniso = Anisotropy([1], [phi])
    rng = np.random.default_rng(11)
    for _ in range(10):
        u = band_limited(torus(64), rng, max_mode=6)
        quad = apply_jump_quadrature(u, phi)
        spec = apply_anisotropic_symbol(u, aniso, 1)
        scale = np.max(np.abs(spec.values))
        assert np.max(np.abs(quad.values - spec.values)) <= 1e-6 * scale
        assert "accuracy_warning" not in quad.metadata


def test_jump_quadrature_on_one_block_of_two(mixed_anisotropy):
    grid = torus(32, 16)
    u = band_limited(grid, np.random.default_rng(12))
    quad = apply_jump_quadrature(u, mixed_anisotropy.phis[0], block=0)
    spec = apply_anisotropic_symbol(u, mixed_anisotropy, 1, blocks=[0])
    assert np.allclose(quad.values, spec.values, atol=1e-6 * np.max(np.abs(spec.values)))


def test_jump_quadrature_constant_and_linearity(cauchy_phi):
    grid = torus(32)
    constant = GridFunction(grid, np.full(32, 1.7))
    assert np.max(np.abs(apply_jump_quadrature(constant, cauchy_phi).values)) < 1e-12

    u = band_limited(grid, np.random.default_rng(8))
    unit = apply_jump_quadrature(u, cauchy_phi)
    scaled = apply_jump_quadrature(u, cauchy_phi, lambda y: np.full(np.shape(y), 0.4))
    assert np.max(np.abs(scaled.values - 0.4 * unit.values)) <= 1e-7 * np.max(np.abs(unit.values))


def test_jump_quadrature_keeps_real_inputs_real(cauchy_phi):
    step = jump_step(0.5)
    u = band_limited(torus(32), np.random.default_rng(9))
    out = apply_jump_quadrature(u, cauchy_phi, lambda y: step(0.0, y))
    assert out.is_real


def test_jump_quadrature_flags_rough_input(cauchy_phi):
    values = np.zeros(32)
    values[0] = 1.0
    out = apply_jump_quadrature(GridFunction(torus(32), values), cauchy_phi)
    assert "accuracy_warning" in out.metadata


def test_jump_quadrature_needs_one_dimensional_block(cauchy_phi):
    u = GridFunction(torus(16, dims=[2]), np.zeros((16, 16)))
    with pytest.raises(ArgumentError):
        apply_jump_quadrature(u, cauchy_phi)


# ========== COEFFICIENTS ==========

def test_coefficient_ranges_are_checked():
    grid_t = [0.0, 1.0]
    cases = [
        (dict(c1=1.5), "0 < c1 <= 1"),
        (dict(b=[[0.0, 0.0], [0.4, 1.0]]), "c1 b0_i <= b_i <= b0_i / c1"),
        (dict(b=[[0.1, 0.0], [1.0, 1.0]]), "b0_i = 0 implies b_i = 0"),
        (dict(a=[[1.0, 3.0], [1.0, 1.0]]), "c1 <= a_i <= 1/c1"),
        (dict(a=[[1.0], [1.0, 1.0]]), "sample count"),
    ]
    for override, constraint in cases:
        kwargs = dict(c1=0.5, b0=[0.0, 1.0], time_grid=grid_t,
                      b=[[0.0, 0.0], [1.0, 1.0]], a=[[1.0, 1.0], [1.0, 1.0]])
        kwargs.update(override)
        with pytest.raises(ArgumentError) as info:
            CoefficientSet(**kwargs)
        assert info.value.details["constraint"] == constraint


def test_time_jump_coefficient_range_checked():
    with pytest.raises(ArgumentError) as info:
        CoefficientSet(0.5, [0.0], [0.0], [[0.0]], [jump_step(0.25)], CoefficientMode.TIME_JUMP)
    assert info.value.details["constraint"] == "c1 <= a_i(t, y) <= 1/c1"


def test_coefficient_interpolation(mixed_anisotropy):
    coeffs = CoefficientSet(0.5, [0.0, 1.0], [0.0, 2.0], [[0.0, 0.0], [0.5, 1.5]], [[1.0, 2.0], [1.0, 1.0]])
    assert coeffs.b_at(1, 1.0) == pytest.approx(1.0)
    assert coeffs.a_at(0, 0.5) == pytest.approx(1.25)
    assert coeffs.midpoint_values(0.0, 2.0) == [1.5, 1.0]
    assert not coeffs.is_time_constant
    coeffs.check_anisotropy(mixed_anisotropy)


# ========== COEFFICIENT MULTIPLIER ==========

def test_unit_coefficients_give_unit_multiplier(mixed_anisotropy):
    xi = multiplier_xi_grid(torus(32, 32))
    report = coefficient_multiplier_bound(CoefficientSet.unit(mixed_anisotropy), mixed_anisotropy, 0.0, xi)
    assert report.sup == pytest.approx(1.0, rel=1e-12)
    assert report.metadata["inf"] == pytest.approx(1.0, rel=1e-12)
    assert report.passed


def test_scaled_coefficients_give_scaled_multiplier(mixed_anisotropy):
    coeffs = CoefficientSet.constant(mixed_anisotropy, c1=0.5, a=0.5, b=[0.0, 0.5])
    report = coefficient_multiplier_bound(coeffs, mixed_anisotropy, 0.0, multiplier_xi_grid(torus(32, 32)))
    assert report.sup == pytest.approx(0.5, rel=1e-12)
    assert report.metadata["inf"] == pytest.approx(0.5, rel=1e-12)
    assert report.passed


def test_jump_step_multiplier_stays_in_range(cauchy_phi):
    aniso = Anisotropy([1], [cauchy_phi])
    coeffs = CoefficientSet(0.5, [0.0], [0.0, 1.0], [[0.0, 0.0]], [jump_step(0.5)], CoefficientMode.TIME_JUMP)
    report = coefficient_multiplier_bound(coeffs, aniso, 0.5, multiplier_xi_grid(torus(64)))
    assert report.passed
    assert report.sup <= 2.0 + 1e-3
    assert report.metadata["inf"] >= 0.5 - 1e-3
    assert report.sup == pytest.approx(1.25, rel=1e-6)


def test_jump_step_with_drift_stays_in_range():
    aniso = Anisotropy([1], [BernsteinFunction.stable(0.5, drift=1.0)])
    coeffs = CoefficientSet(0.5, [1.0], [0.0], [[2.0]], [jump_step(0.5)], CoefficientMode.TIME_JUMP)
    report = coefficient_multiplier_bound(coeffs, aniso, 0.0, multiplier_xi_grid(torus(64)))
    assert report.passed
    assert 1.25 - 1e-6 <= report.metadata["inf"] <= report.sup <= 2.0


def test_multiplier_grid_excludes_origin_and_top_octave():
    grid = torus(64)
    xi = multiplier_xi_grid(grid)
    assert np.all(xi != 0.0)
    assert np.max(np.abs(xi)) <= 0.5 * grid.nyquist(0)
    with pytest.raises(ArgumentError):
        coefficient_multiplier_bound(CoefficientSet.unit(Anisotropy([1], [BernsteinFunction.stable(0.5)])),
                                     Anisotropy([1], [BernsteinFunction.stable(0.5)]), 0.0, [[0.0]])


# ========== MIKHLIN / MARCINKIEWICZ ==========

def test_diagnostic_diverges_for_large_delta():
    diag = mikhlin_marcinkiewicz_diagnostic(0.4, 0.4)
    assert diag.divergence_expected
    assert diag.annulus_slope >= 0.45
    assert diag.annulus_threshold == pytest.approx(0.45)
    assert diag.diverges
    assert diag.passed
    assert len(diag.radii) == len(diag.annulus) == 12


def test_diagnostic_mixed_deltas():
    diag = mikhlin_marcinkiewicz_diagnostic(0.3, 0.45)
    assert diag.annulus_slope >= 0.35
    assert diag.dyadic_slope >= diag.dyadic_threshold
    assert diag.diverges


def test_diagnostic_small_deltas_assert_nothing():
    diag = mikhlin_marcinkiewicz_diagnostic(0.2, 0.2)
    assert not diag.divergence_expected
    assert diag.passed


def test_diagnostic_is_seeded():
    a = mikhlin_marcinkiewicz_diagnostic(0.4, 0.4, seed=3, levels=range(2, 10))
    b = mikhlin_marcinkiewicz_diagnostic(0.4, 0.4, seed=3, levels=range(2, 10))
    assert a.annulus == b.annulus
    assert a.form == DerivativeForm.REDUCED


def test_diagnostic_rejects_bad_inputs():
    with pytest.raises(ArgumentError):
        mikhlin_marcinkiewicz_diagnostic(0.0, 0.4)
    with pytest.raises(ArgumentError):
        mikhlin_marcinkiewicz_diagnostic(0.4, 0.4, radii=np.geomspace(10.0, 1e2, 12))
    with pytest.raises(ArgumentError):
        mikhlin_marcinkiewicz_diagnostic(0.4, 0.4, levels=range(2, 6))
