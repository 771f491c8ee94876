"""Shared fixtures"""
import pytest

from src.bernstein import Anisotropy, BernsteinFunction


@pytest.fixture
def gaussian_phi():
    return BernsteinFunction.drift_only(1.0)


@pytest.fixture
def cauchy_phi():
    return BernsteinFunction.stable(0.5)


@pytest.fixture
def single_atom():
    return BernsteinFunction.from_atoms([(1.0, 1.0)])


@pytest.fixture
def power_table():
    # alpha = 0.5 stable density alpha/Gamma(1-alpha) t^{-3/2}, tabulated on nodes
    from math import gamma, pi, sqrt
    c = 0.5 / gamma(0.5)
    table = [[t, c * t ** -1.5] for t in (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)]
    assert abs(c - 0.5 / sqrt(pi)) < 1e-15
    return BernsteinFunction.from_table(table)


@pytest.fixture
def mixed_anisotropy():
    return Anisotropy([1, 1], [BernsteinFunction.stable(0.5), BernsteinFunction.stable(1.0)])
