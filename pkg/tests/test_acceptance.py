"""Acceptance suite: one test per criterion, each logging a pass/fail line."""
import math

import numpy as np
import pytest

from sector_heat import (AntisymConstant, DomainSpec, Exponential, Field, GammaPrimeTail,
                         LogPeriodicPsi0, PowerLaw, Psi0, SectorGrid, SolverConfig, TruncatedPsi0,
                         apply_semigroup, dilate, solve, universal_bound)
from sector_heat.asymptotics import (RescaleLadder, covariance_residual, critical_selfsimilar_check,
                                     default_window, omega_limit_probe,
                                     subcritical_convergence_check, subcritical_profile,
                                     supercritical_deviation)
from sector_heat.eigen import bessel_oracle, sector_ball_eigen
from sector_heat.heat_kernel import closed_form_check, kernel_identity_check
from sector_heat.solver import splitting_order
from sector_heat.verification import (_linear, _mask, annulus_grid, check_kato_comparison,
                                      check_upper_estimate, elliptic_refinement, elliptic_residual,
                                      generalized_bound, generalized_upper_bound, lower_bound_probe)

SECTORS = [(1, 1), (2, 1), (2, 2)]
HALF_LINE_CRITICAL = DomainSpec(1, 1, 0.5, 4 / 3)


@pytest.fixture(scope="module")
def psi0_1d():
    spec = DomainSpec(1, 1, 0.5, 1.0)
    return solve(Psi0(), spec, SolverConfig(h=0.05, R=40, snapshots=(0.25, 1.0, 4.0)))


def test_c01_kernel_mass_and_identity(record):
    worst = 0.0
    for N, m in SECTORS:
        spec = DomainSpec(N, m, 0.5, 1.0)
        pts = np.array([[0.1] * N, [0.5] * N, [1.0, 2.0][:N], [3.0] * N])
        rep = kernel_identity_check((0.25, 1.0, 4.0), pts, spec, tol=1e-6)
        worst = max(worst, rep.violation)
    assert record(1, worst <= 1e-6, f"max relative error {worst:.2e} (tol 1e-6)")


def test_c02_closed_form(record):
    worst = 0.0
    for N, m in SECTORS:
        spec = DomainSpec(N, m, 0.5, 1.0)
        g = SectorGrid.box(spec, upper=3.0, h=0.1 if N == 2 else 0.02, lower=0.0 if m == N else -3.0)
        for t in (0.25, 1.0, 4.0):
            worst = max(worst, closed_form_check(t, spec, g).violation)
    assert record(2, worst <= 1e-6, f"max relative error {worst:.2e} (tol 1e-6)")


def test_c03_dilation_and_covariance(record):
    spec2 = DomainSpec(2, 1, 1.0, 1.0)
    g = SectorGrid.uniform(spec2, 0.1, 4.0)
    comm = 0.0
    for lam in (0.5, 2.0):
        f = TruncatedPsi0(rho=1.0)
        left = apply_semigroup(dilate(f, lam, 1.5), 1.0, spec2, g).values
        gl = SectorGrid(tuple(lam * c for c in g.coords), g.kinds, tuple(lam * h for h in g.spacing))
        right = lam ** 1.5 * apply_semigroup(f, lam * lam, spec2, gl).values
        comm = max(comm, float(np.max(np.abs(left - right))))
    cov = 0.0
    cfg = SolverConfig(h=0.05, R=32, dt0=1e-3)
    for alpha in (4 / 3, 2.0, 1.0):
        spec = DomainSpec(1, 1, 0.5, alpha)
        for u0 in (Psi0(), TruncatedPsi0(rho=1.0)):
            for lam in (0.5, 2.0):
                cov = max(cov, covariance_residual(u0, lam, spec, cfg))
    ok = comm <= 1e-2 and cov <= 1e-2
    assert record(3, ok, f"semigroup commutation {comm:.2e}, solver covariance {cov:.2e} (tol 1e-2)")


def test_c04_universal_and_sharp_bounds(record, psi0_1d):
    spec = DomainSpec(2, 1, 1.0, 1.0)
    traj2 = solve(Psi0(), spec, SolverConfig(h=0.1, R=24, dt_max=0.25, snapshots=(0.25, 1.0, 4.0)))
    universal = max(float(np.max(np.abs(s.values))) / universal_bound(tr.spec, s.time)
                    for tr in (psi0_1d, traj2) for s in tr.snapshots)
    sharp = max(check_upper_estimate(tr).violation for tr in (psi0_1d, traj2))
    m0 = DomainSpec(2, 0, 1.0, 1.0)
    const = solve(AntisymConstant(A=2.0), m0, SolverConfig(h=0.5, R=40, snapshots=(0.25, 1.0, 4.0)))
    gap = check_upper_estimate(const).details["equality_gap"]
    ok = universal <= 1.0 + 1e-14 and sharp <= 1e-4 and gap <= 1e-10
    assert record(4, ok, f"max |u|/bound {universal:.6f}, sharp violation {sharp:.2e}, "
                         f"m=0 equality gap {gap:.2e}")


def test_c05_kato(record):
    spec = DomainSpec(1, 1, 0.5, 1.0)
    rep = check_kato_comparison(Psi0(), Psi0(amp=0.5), (0.5, 2.0), spec,
                                SolverConfig(h=0.05, R=40))
    assert record(5, rep.violation <= 1e-4, f"violation {rep.violation:.2e} (tol 1e-4)")


def test_c06_critical_regime(record):
    spec = HALF_LINE_CRITICAL
    window = default_window(spec)
    ladder = RescaleLadder(2 / spec.alpha, (2.0, 4.0, 8.0), window)
    self_sim = critical_selfsimilar_check(Psi0(), ladder, spec,
                                          SolverConfig(h=0.05, R=48, dt0=1e-3))
    probe = omega_limit_probe(LogPeriodicPsi0(a=0.5, omega=1.0), ladder, spec,
                              SolverConfig(h=0.1, R=64))
    diag = float(np.max(probe.diagonal))
    tail_spec = DomainSpec(2, 1, 0.2, 2 / 1.2)
    tail = omega_limit_probe(GammaPrimeTail(gamma_prime=1.95),
                             RescaleLadder(tail_spec.homogeneity, (2.0, 4.0, 8.0, 16.0, 32.0),
                                           default_window(tail_spec)),
                             tail_spec, SolverConfig(h=0.1, R=12), rescaled=False)
    norms = tail.sup_norms
    decays = all(b < a for a, b in zip(norms, norms[1:])) and norms[-1] <= 1e-2
    ok = self_sim.violation <= 5e-3 and diag <= 1e-2 and decays
    assert record(6, ok, f"self-similarity {self_sim.violation:.2e}, log-periodic diagonal "
                         f"{diag:.2e}, tail sup-norms {', '.join(f'{v:.1e}' for v in norms)}")


def test_c07_supercritical(record):
    spec = DomainSpec(2, 1, 1.0, 2.0)
    cfg = SolverConfig(h=0.2, R=48, dt_max=1.0, estimate_error=False)
    curve = supercritical_deviation(Psi0(), (4.0, 16.0, 64.0), spec, cfg)
    ok = curve.strictly_decreasing and curve.slope <= -0.1
    devs = ", ".join(f"{d:.4f}" for d in curve.deviations)
    assert record(7, ok, f"deviations {devs}, slope {curve.slope:.3f} (need <= -0.1)")


def test_c08_subcritical(record):
    spec = DomainSpec(1, 1, 0.5, 1.0)
    est = subcritical_profile(spec, SolverConfig(h=0.05, R=16),
                              (1.0, 10.0, 100.0, 1e3, 1e4, 1e6), eps=(0.5,))
    sandwich = min(est.sandwich["lower"], est.sandwich["upper_eps_0.5"])
    conv = subcritical_convergence_check(TruncatedPsi0(rho=1.0), spec, SolverConfig(h=0.25, R=128),
                                         (16.0, 64.0, 256.0), est.g)
    res = conv.details["residuals"]
    flat = DomainSpec(1, 0, 0.5, 1.5)
    est0 = subcritical_profile(flat, SolverConfig(h=0.1, R=8), (1.0, 1e4, 1e8, 1e12))
    m0 = float(np.max(np.abs(est0.g.values - flat.alpha ** (-1 / flat.alpha))))
    ok = (sandwich >= -1e-3 and est.monotone_violation <= 0.0
          and all(b < a for a, b in zip(res, res[1:])) and m0 <= 1e-8)
    assert record(8, ok, f"sandwich margin {sandwich:.2e}, ladder increase {est.monotone_violation:.1e}, "
                         f"residuals {', '.join(f'{r:.3f}' for r in res)}, m=0 error {m0:.1e}")


def test_c09_lower_bound(record):
    spec = DomainSpec(1, 1, 0.5, 1.0)
    cfg = SolverConfig(h=0.05, R=40)
    cs = [lower_bound_probe(TruncatedPsi0(rho=1.0), t0, spec, cfg).c_prime for t0 in (1.0, 4.0)]
    assert record(9, min(cs) > 0, f"c' = {cs[0]:.3f} (t0=1), {cs[1]:.3f} (t0=4)")


def test_c10_eigenvalue(record):
    rel = {}
    for N, m in SECTORS:
        lam = sector_ball_eigen(DomainSpec(N, m, 0.5 * N, 1.0), 1 / 200).eigenvalue
        rel[(N, m)] = abs(lam - bessel_oracle(N + 2 * m)) / bessel_oracle(N + 2 * m)
    pi_err = abs(sector_ball_eigen(DomainSpec(1, 1, 0.5, 1.0), 1 / 200).eigenvalue
                 - math.pi ** 2) / math.pi ** 2
    ok = max(rel.values()) <= 1e-2 and pi_err <= 5e-3
    assert record(10, ok, "relative errors " + ", ".join(f"{k}: {v:.1e}" for k, v in rel.items())
                  + f"; (1,1) vs pi^2 {pi_err:.1e}")


def test_c11_elliptic(record):
    errs, orders = [], []
    for N, m in SECTORS:
        _, e, order = elliptic_refinement(DomainSpec(N, m, 1.0 if N == 2 else 0.5, 1.0), 1 / 200)
        errs.append(e)
        orders.append(order)
    harm = DomainSpec(3, 1, 1.0, 1.0)
    h_rep = elliptic_residual(harm, annulus_grid(harm, 1 / 400, planar=True), order=4)
    ok = max(errs) <= 1e-3 and min(orders) >= 1.8 and h_rep.violation <= 1e-6
    assert record(11, ok, f"max error {max(errs):.1e}, min order {min(orders):.2f}, "
                          f"harmonic residual {h_rep.violation:.1e} (fourth-order stencil)")


def test_c12_generalized_bound(record, psi0_1d):
    law = PowerLaw(psi0_1d.spec.alpha)
    agree = 0.0
    for s in psi0_1d.snapshots:
        lin = _linear(psi0_1d, s.time).values[_mask(psi0_1d.grid, s.time, None)]
        agree = max(agree, float(np.max(np.abs(generalized_bound(lin, s.time, law)
                                               - law.flow(lin, s.time)))))
    spec = DomainSpec(1, 0, 0.5, 1.0)
    g = SectorGrid.uniform(spec, 0.1, 24)
    x = g.coords[0]
    run = solve(Field(g, 2.0 * np.exp(-x * x) - 0.5), spec,
                SolverConfig(h=0.1, R=24, nonlinearity="exp", snapshots=(0.5, 1.0, 2.0)))
    rep = generalized_upper_bound(run, law=Exponential())
    ok = agree <= 1e-10 and rep.violation <= 1e-4
    assert record(12, ok, f"power reduction gap {agree:.1e}, exponential violation {rep.violation:.1e}")


def test_c13_splitting_order(record):
    spec = DomainSpec(1, 1, 0.5, 2.0)
    g = SectorGrid.uniform(spec, 0.05, 12)
    x = g.coords[0]
    _, orders = splitting_order(Field(g, 2 * x * np.exp(-x * x)), spec, SolverConfig(), 0.1, levels=4)
    assert record(13, min(orders) >= 1.8, "observed orders " + ", ".join(f"{o:.2f}" for o in orders))
