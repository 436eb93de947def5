import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sector_heat import (AntisymConstant, DomainError, DomainSpec, Field, GammaPrimeTail,
                         LogPeriodicPsi0, NumericalError, Psi0, SectorGrid, TruncatedPsi0, c_const,
                         dilate, psi0, weight, xnorm)
from sector_heat.exceptions import GridCoverageError
from sector_heat.weighted_space import GridCoverageWarning

spec21 = DomainSpec(2, 1, 1.0, 1.0)
pos = st.floats(0.05, 5.0)


def test_psi0_and_weight_examples():
    x = np.array([1.0, 1.0])
    assert psi0(x, spec21) == pytest.approx(2 ** -1.5)
    assert weight(x, spec21) == pytest.approx(2 ** 1.5)
    assert c_const(DomainSpec(2, 2, 1.0, 1.0)) == 3.0
    assert c_const(DomainSpec(2, 0, 1.0, 1.0)) == 1.0


def test_psi0_rejects_points_outside():
    with pytest.raises(DomainError):
        psi0(np.array([-1.0, 1.0]), spec21)
    with pytest.raises(DomainError):
        psi0(np.array([0.0, 0.0]), spec21)
    with pytest.raises(DomainError):
        weight(np.array([0.0, 1.0]), spec21)


@given(pos, pos, st.floats(-3, 3))
def test_weight_times_psi0_is_constant(a, b, c):
    spec = DomainSpec(3, 2, 1.3, 1.0)
    x = np.array([a, b, c])
    assert weight(x, spec) * psi0(x, spec) == pytest.approx(c_const(spec), rel=1e-12)


@given(pos, st.floats(-4, 4), st.floats(0.1, 10))
def test_homogeneity(a, b, lam):
    x = np.array([a, b])
    assert psi0(lam * x, spec21) == pytest.approx(lam ** -spec21.homogeneity * psi0(x, spec21), rel=1e-12)
    assert weight(lam * x, spec21) == pytest.approx(lam ** spec21.homogeneity * weight(x, spec21), rel=1e-12)


def test_xnorm_closed_forms():
    assert xnorm(Psi0(), spec21).norm == 1.0
    spec = DomainSpec(2, 1, 0.5, 1.0)
    ratio = xnorm(dilate(Psi0(), 2.0, 2.0), spec).norm / xnorm(Psi0(), spec).norm
    assert ratio == pytest.approx(2 ** 0.5)
    with pytest.raises(NumericalError):
        xnorm(AntisymConstant(A=1.0), spec)
    g = SectorGrid.uniform(spec21, 0.2, 2.0)
    assert xnorm(Field(g, np.zeros(g.shape)), spec21).norm == 0.0


def test_field_xnorm_matches_closed_form(half_plane):
    g = SectorGrid.uniform(half_plane, 0.1, 3.0)
    f = Field(g, Psi0().evaluate(g.points(), half_plane).reshape(g.shape))
    assert xnorm(f, half_plane).norm == pytest.approx(c_const(half_plane), rel=1e-12)


def test_dilate_psi0_is_exact():
    assert dilate(Psi0(), 3.7, spec21.homogeneity, spec21) == Psi0()
    d = dilate(Psi0(), 2.0, 2.0)
    x = np.array([[0.3, 0.4], [1.0, -2.0]])
    assert np.allclose(d.evaluate(x, spec21), 4 * Psi0().evaluate(2 * x, spec21))


def test_logperiodic_dilation_period():
    f = LogPeriodicPsi0(a=0.4, omega=1.0)
    g = dilate(f, math.exp(2 * math.pi), spec21.homogeneity, spec21)
    x = np.random.default_rng(1).uniform(0.1, 3, (20, 2))
    assert np.allclose(g.evaluate(x, spec21), f.evaluate(x, spec21), rtol=1e-12)


def test_gamma_prime_tail_dilations_vanish():
    spec = DomainSpec(2, 1, 0.5, 1.0)
    f = GammaPrimeTail(gamma_prime=1.5)
    x = np.random.default_rng(2).uniform(0.2, 3, (200, 2))
    sups = [np.max(np.abs(dilate(f, lam, spec.homogeneity, spec).evaluate(x, spec))) for lam in (10, 100, 1000)]
    assert sups[0] > sups[1] > sups[2]
    assert xnorm(f, spec).norm == 1.0
    with pytest.raises(DomainError):
        GammaPrimeTail(gamma_prime=0.2).evaluate(x, spec)


def test_truncated_profile_split(half_plane):
    x = np.random.default_rng(3).uniform(0.05, 2, (100, 2))
    inner = TruncatedPsi0(rho=1.0, keep="inner").evaluate(x, half_plane)
    outer = TruncatedPsi0(rho=1.0, keep="outer").evaluate(x, half_plane)
    assert np.allclose(inner + outer, Psi0().evaluate(x, half_plane))
    with pytest.raises(DomainError):
        TruncatedPsi0(rho=-1.0)


def test_field_dilation_identity_and_composition(half_line):
    g = SectorGrid.uniform(half_line, 0.02, 6.0)
    x = g.coords[0]
    f = Field(g, x * np.exp(-x ** 2))
    assert np.array_equal(dilate(f, 1.0, 2.0).values, f.values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridCoverageWarning)
        a = dilate(dilate(f, 2.0, 1.0), 3.0, 1.0).values
        b = dilate(f, 6.0, 1.0).values
    keep = x < 0.9
    assert np.max(np.abs(a - b)[keep]) < 1e-4


def test_field_dilation_reports_coverage(half_line):
    g = SectorGrid.uniform(half_line, 0.1, 2.0)
    f = Field(g, np.ones(g.shape))
    with pytest.warns(GridCoverageWarning):
        dilate(f, 2.0, 0.0)
    with pytest.raises(GridCoverageError):
        dilate(f, 100.0, 0.0)
