import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sector_heat import (AntisymConstant, DomainError, DomainSpec, Exponential, Field, Psi0,
                         SectorGrid, SolverConfig, TruncatedPsi0, absorption_flow, apply_semigroup,
                         solve, solve_rn, universal_bound, xnorm)
from sector_heat.asymptotics import covariance_residual
from sector_heat.solver import splitting_order


def test_absorption_flow_examples():
    assert absorption_flow(np.array([1.0]), 1.0, 1.0)[0] == pytest.approx(0.5)
    assert absorption_flow(np.array([2.0]), 1.0, 2.0)[0] == pytest.approx(2.0 / 3.0)
    assert absorption_flow(np.array([0.0]), 1.0, 1.0)[0] == 0.0
    with pytest.raises(DomainError):
        absorption_flow(np.array([1.0]), -1.0, 1.0)


@given(st.floats(-1e3, 1e3), st.floats(0, 10), st.floats(0, 10), st.floats(0.2, 4))
def test_absorption_flow_properties(u, a, b, alpha):
    f = lambda v, tau: absorption_flow(np.array([v]), tau, alpha)[0]
    assert f(-u, a) == -f(u, a)
    assert abs(f(u, a)) <= abs(u)
    assert f(f(u, a), b) == pytest.approx(f(u, a + b), rel=1e-9, abs=1e-300)


def test_exponential_flow_solves_its_ode():
    law = Exponential()
    u = np.linspace(-2, 2, 9)
    tau = 1e-6
    assert np.allclose((law.flow(u, tau) - u) / tau, -np.exp(u), rtol=1e-5)


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(snapshots=(1.0, 0.5))
    with pytest.raises(DomainError):
        SolverConfig(dt0=-1.0)
    with pytest.raises(DomainError):
        SolverConfig(splitting="yoshida")
    assert SolverConfig(h=0.1).first_dt() == pytest.approx(0.02)


def test_constant_data_follow_the_ode():
    spec = DomainSpec(1, 0, 0.5, 1.5)
    A = 3.0
    traj = solve(AntisymConstant(A=A), spec, SolverConfig(h=0.1, R=6, snapshots=(0.25, 1, 4)))
    for s in traj.snapshots:
        exact = A * (1 + spec.alpha * s.time * A ** spec.alpha) ** (-1 / spec.alpha)
        assert np.max(np.abs(s.values - exact)) < 1e-13


@pytest.fixture(scope="module")
def psi0_run():
    spec = DomainSpec(2, 1, 1.0, 1.0)
    cfg = SolverConfig(h=0.1, R=10, snapshots=(0.25, 1.0), dt_max=0.25)
    return spec, solve(Psi0(), spec, cfg)


def test_universal_bound_and_linear_domination(psi0_run):
    spec, traj = psi0_run
    for s in traj.snapshots:
        assert np.max(np.abs(s.values)) <= universal_bound(spec, s.time)
        lin = apply_semigroup(Psi0(), s.time, spec, traj.grid).values
        mask = traj.grid.interior_mask(edge_layer=8 * math.sqrt(s.time))
        assert np.max((s.values - lin)[mask]) <= 1e-8
    assert traj.undershoot >= -1e-12
    assert traj.steps > 0 and traj.splitting_error > 0


def test_field_at_interpolates_and_guards(psi0_run):
    _, traj = psi0_run
    mid = traj.field_at(0.5)
    assert mid.time == 0.5
    with pytest.raises(DomainError):
        traj.field_at(2.0)


def test_whole_space_flow_is_the_odd_extension(psi0_run):
    spec, traj = psi0_run
    full = solve_rn(Psi0(), spec, traj.cfg)
    n = traj.grid.shape[0]
    for s, f in zip(traj.snapshots, full.snapshots):
        assert np.array_equal(f.values[n:], s.values)
        assert np.array_equal(f.values[:n], -s.values[::-1])
    x = full.grid.coords[0]
    mid = full.snapshots[-1].at(np.column_stack([np.zeros(5), np.linspace(-2, 2, 5)]))
    assert np.max(np.abs(mid)) < 1e-12
    assert full.whole_space and x[0] < 0


def test_comparison_principle(half_line):
    cfg = SolverConfig(h=0.05, R=12, snapshots=(0.5, 2.0))
    u = solve(Psi0(amp=0.5), half_line, cfg)
    v = solve(Psi0(), half_line, cfg)
    for a, b in zip(u.snapshots, v.snapshots):
        assert np.max(a.values - b.values) <= 1e-12


def test_xnorm_stays_bounded(half_line):
    cfg = SolverConfig(h=0.05, R=24, snapshots=tuple(np.geomspace(0.1, 4, 5)))
    traj = solve(Psi0(), half_line, cfg)
    for s in traj.snapshots:
        lin = apply_semigroup(Psi0(), s.time, half_line, traj.grid)
        assert np.isfinite(xnorm(s, half_line).norm)
        assert xnorm(s, half_line).norm <= xnorm(lin, half_line).norm + 1e-10


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scaling_covariance(half_line, lam):
    cfg = SolverConfig(h=0.05, R=24, dt0=1e-3)
    assert covariance_residual(TruncatedPsi0(rho=1.0), lam, half_line, cfg) < 1e-4


def test_strang_is_second_order(half_line):
    spec = half_line.with_alpha(2.0)
    g = SectorGrid.uniform(spec, 0.05, 12)
    x = g.coords[0]
    f = Field(g, 2 * x * np.exp(-x * x))
    diffs, orders = splitting_order(f, spec, SolverConfig(), 0.1, levels=3)
    assert orders[-1] > 1.8
    _, lie = splitting_order(f, spec, SolverConfig(splitting="lie"), 0.1, levels=3)
    assert 0.7 < lie[-1] < 1.3
