"""Large-time diagnostics in the three regimes alpha =, >, < 2/(gamma+m).

All comparisons happen on a fixed window grid (by default the box
[0, 3]^N, boundary included) after rescaling x -> x sqrt(t).
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .domain import DomainSpec, Field, SectorGrid, interpolate
from .exceptions import DomainError, GridCoverageError, RegimeError
from .heat_kernel import apply_semigroup, erf_product
from .report import VerificationReport, fingerprint
from .solver import SolverConfig, Trajectory, solve
from .weighted_space import AntisymConstant, ProfileSpec, Psi0, dilate

# relative slack when comparing alpha with 2/(gamma+m)
REGIME_RTOL = 1e-12


class Regime(str, enum.Enum):
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"
    SUBCRITICAL = "subcritical"


@dataclass(frozen=True)
class RegimeInfo:
    regime: Regime
    critical_alpha: float


def classify_regime(spec: DomainSpec) -> RegimeInfo:
    """Compare alpha with 2/(gamma+m); equality up to REGIME_RTOL is critical."""
    crit = spec.critical_alpha
    if math.isclose(spec.alpha, crit, rel_tol=REGIME_RTOL):
        kind = Regime.CRITICAL
    elif spec.alpha > crit:
        kind = Regime.SUPERCRITICAL
    else:
        kind = Regime.SUBCRITICAL
    return RegimeInfo(kind, crit)


def _require(spec: DomainSpec, regime: Regime):
    got = classify_regime(spec).regime
    if got is not regime:
        raise RegimeError(f"needs the {regime.value} regime, spec is {got.value}")


def default_window(spec: DomainSpec, upper: float = 3.0, h: float = 0.1) -> SectorGrid:
    return SectorGrid.box(spec, upper=upper, h=h, lower=0.0)


@dataclass(frozen=True)
class RescaleLadder:
    """Increasing dilation factors (or times) with exponent and window."""

    sigma: float
    values: tuple
    window: SectorGrid

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals or vals[0] <= 0 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("ladder values must be positive and strictly increasing")
        object.__setattr__(self, "values", vals)


@dataclass
class ProfileEstimate:
    g: Field
    residuals: list
    sandwich: dict
    monotone_violation: float
    bracket: dict = field(default_factory=dict)
    ladder: tuple = ()
    members: list = field(default_factory=list)


def _sample(f: Field, pts: np.ndarray) -> np.ndarray:
    vals, covered = interpolate(f, pts)
    if not np.all(covered):
        raise GridCoverageError(f"{np.count_nonzero(~covered)} window points fall outside the grid")
    return vals


def rescaled_snapshot(traj: Trajectory, t: float, sigma: float,
                      window: Optional[SectorGrid] = None) -> Field:
    """x -> t^{sigma/2} u(t, x sqrt(t)) on the window grid."""
    window = window or default_window(traj.spec)
    snap = traj.field_at(t)
    pts = window.points() * math.sqrt(t)
    vals = t ** (0.5 * sigma) * _sample(snap, pts)
    return Field(window, vals.reshape(window.shape), t)


def _gamma_rescale(traj: Trajectory, lam: float, sigma: float, t: float,
                   window: SectorGrid) -> np.ndarray:
    """lam^sigma u(lam^2 t, lam x) on the window."""
    snap = traj.field_at(lam * lam * t)
    return lam ** sigma * _sample(snap, window.points() * lam)


def _with_snapshots(cfg: SolverConfig, times) -> SolverConfig:
    return replace(cfg, snapshots=tuple(sorted(set(float(t) for t in times))))


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- critical

def critical_selfsimilar_check(u0: ProfileSpec, ladder: RescaleLadder, spec: DomainSpec,
                               cfg: SolverConfig, t: float = 1.0, tol: float = 5e-3,
                               traj: Optional[Trajectory] = None) -> VerificationReport:
    """sup_window |Gamma_lam^{2/alpha} u(t) - u(t)| for each lam in the ladder.

    For exactly homogeneous data (Psi0) this is pure discretization drift
    and is held to ``tol``. Other data (log-periodic) are reported with an
    infinite tolerance: their residual traces an orbit, not an error.
    """
    _require(spec, Regime.CRITICAL)
    sigma = 2.0 / spec.alpha
    if traj is None:
        times = [t] + [lam * lam * t for lam in ladder.values]
        traj = solve(u0, spec, _with_snapshots(cfg, times))
    window = ladder.window
    base = _sample(traj.field_at(t), window.points())
    residuals = []
    for lam in ladder.values:
        resc = _gamma_rescale(traj, lam, sigma, t, window)
        residuals.append(float(np.max(np.abs(resc - base))))
    homogeneous = isinstance(u0, Psi0)
    return VerificationReport(
        "critical_selfsimilar", max(residuals), tol if homogeneous else math.inf,
        fingerprint(spec, traj.cfg, u0, window.fingerprint()),
        {"lambdas": list(ladder.values), "residuals": residuals,
         "homogeneous": homogeneous})


@dataclass
class OmegaLimitProbe:
    lambdas: tuple
    data_family: list                  # S(t) D_lam u0 on the window
    rescaled_family: Optional[list]    # Gamma_lam S(.) u0 at t on the window
    distances: Optional[np.ndarray]    # [i, j] = sup |data_i - rescaled_j|
    sup_norms: list

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.distances) if self.distances is not None else np.array([])


def omega_limit_probe(u0: ProfileSpec, ladder: RescaleLadder, spec: DomainSpec,
                      cfg: SolverConfig, t: float = 1.0, rescaled: bool = True,
                      jobs: int = 1) -> OmegaLimitProbe:
    """Both families of a finite probe of the omega-limit set.

    The data family solves from each dilated datum D_lam^sigma u0 up to t;
    the rescaled family dilates one long run. Their diagonal distances
    measure the solver covariance identity at sigma = gamma + m.
    """
    _require(spec, Regime.CRITICAL)
    sigma = spec.homogeneity
    window = ladder.window
    pts = window.points()
    one = _with_snapshots(cfg, [t])

    def run(lam):
        tr = solve(dilate(u0, lam, sigma, spec), spec, one)
        return _sample(tr.field_at(t), pts)

    data = _map(run, ladder.values, jobs)
    sup_norms = [float(np.max(np.abs(d))) for d in data]
    resc, dist = None, None
    if rescaled:
        long = solve(u0, spec, _with_snapshots(cfg, [lam * lam * t for lam in ladder.values]))
        resc = [_gamma_rescale(long, lam, sigma, t, window) for lam in ladder.values]
        dist = np.array([[np.max(np.abs(a - b)) for b in resc] for a in data])
    shape = window.shape
    wrap = lambda v: Field(window, v.reshape(shape), t)
    return OmegaLimitProbe(ladder.values, [wrap(d) for d in data],
                           None if resc is None else [wrap(r) for r in resc], dist, sup_norms)


# ---------------------------------------------------------------- supercritical

@dataclass
class DeviationCurve:
    times: tuple
    deviations: list
    slope: float

    @property
    def strictly_decreasing(self) -> bool:
        d = self.deviations
        return all(b < a for a, b in zip(d, d[1:]))


def _loglog_slope(times, values, last: int = 3) -> float:
    x = np.log(np.asarray(times[-last:], dtype=float))
    y = np.log(np.asarray(values[-last:], dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def supercritical_deviation(u0: ProfileSpec, times: Sequence[float], spec: DomainSpec,
                            cfg: SolverConfig, window: Optional[SectorGrid] = None) -> DeviationCurve:
    """sup_window of D_{sqrt t}^{gamma+m}(u(t) - e^{t Delta_m} u0) along the time ladder."""
    _require(spec, Regime.SUPERCRITICAL)
    window = window or default_window(spec)
    times = tuple(float(t) for t in times)
    traj = solve(u0, spec, _with_snapshots(cfg, times))
    sigma = spec.homogeneity
    devs = []
    for t in times:
        s = math.sqrt(t)
        u = rescaled_snapshot(traj, t, sigma, window).values
        # the linear flow is evaluated directly at the stretched window nodes
        stretched = SectorGrid(tuple(c * s for c in window.coords), window.kinds,
                               tuple(h * s for h in window.spacing))
        lin = apply_semigroup(u0, t, spec, stretched).values * t ** (0.5 * sigma)
        devs.append(float(np.max(np.abs(u - lin))))
    return DeviationCurve(times, devs, _loglog_slope(times, devs))


# ---------------------------------------------------------------- subcritical

def _bracket_margins(g: Field, spec: DomainSpec, t: float = 1.0) -> dict:
    """Margins of V(2t) <= (alpha t)^{-1/alpha} I_m(t, x) <= V(t) with
    V(t, x) = t^{-1/alpha} g(x / sqrt t); positive margins mean the bracket holds."""
    a = spec.alpha
    pts = g.grid.points()
    mid = (a * t) ** (-1.0 / a) * erf_product(t, pts, spec)
    upper = t ** (-1.0 / a) * _sample(g, pts / math.sqrt(t))
    lower = (2 * t) ** (-1.0 / a) * _sample(g, pts / math.sqrt(2 * t))
    return {"lower": float(np.min(mid - lower)), "upper": float(np.min(upper - mid))}


def subcritical_profile(spec: DomainSpec, cfg: SolverConfig, amplitudes: Sequence[float],
                        probe_time: float = 1.0, eps: Sequence[float] = (0.25, 0.5),
                        window: Optional[SectorGrid] = None, jobs: int = 1) -> ProfileEstimate:
    """Self-similar profile g as the limit of solutions from constants A -> infinity.

    Each member is t^{1/alpha} u(t, x sqrt t) at the probe time for data
    A (odd across the Dirichlet faces); the last member is returned as g.
    """
    _require(spec, Regime.SUBCRITICAL)
    amps = tuple(float(a) for a in amplitudes)
    if len(amps) < 3 or any(b <= a for a, b in zip(amps, amps[1:])):
        raise DomainError("need at least three strictly increasing amplitudes")
    window = window or default_window(spec)
    one = _with_snapshots(cfg, [probe_time])
    sigma = 2.0 / spec.alpha

    def run(A):
        tr = solve(AntisymConstant(A=A), spec, one)
        return rescaled_snapshot(tr, probe_time, sigma, window)

    members = _map(run, amps, jobs)
    residuals = [float(np.max(np.abs(b.values - a.values))) for a, b in zip(members, members[1:])]
    mono = max(float(np.max(a.values - b.values)) for a, b in zip(members, members[1:]))
    g = members[-1]
    pts = window.points()
    a = spec.alpha
    vals = g.values.ravel()
    sandwich = {"lower": float(np.min(vals - a ** (-1.0 / a) * erf_product(1.0, pts, spec)))}
    for e in eps:
        upper = (a * e) ** (-1.0 / a) * erf_product(1.0 - e, pts, spec)
        sandwich[f"upper_eps_{e:g}"] = float(np.min(upper - vals))
    return ProfileEstimate(g, residuals, sandwich, mono, _bracket_margins(g, spec), amps, members)


def subcritical_convergence_check(u0: ProfileSpec, spec: DomainSpec, cfg: SolverConfig,
                                  times: Sequence[float], g: Field) -> VerificationReport:
    """Residuals sup_window |t^{1/alpha} u(t, x sqrt t) - g(x)| must decrease along ``times``.

    The violation is the largest increase between consecutive residuals.
    """
    _require(spec, Regime.SUBCRITICAL)
    times = tuple(float(t) for t in times)
    traj = solve(u0, spec, _with_snapshots(cfg, times))
    sigma = 2.0 / spec.alpha
    res = [float(np.max(np.abs(rescaled_snapshot(traj, t, sigma, g.grid).values - g.values)))
           for t in times]
    viol = max((b - a for a, b in zip(res, res[1:])), default=-math.inf)
    return VerificationReport("subcritical_convergence", viol, 0.0,
                              fingerprint(spec, traj.cfg, u0, g.grid.fingerprint()),
                              {"times": list(times), "residuals": res})


def covariance_residual(u0: ProfileSpec, lam: float, spec: DomainSpec, cfg: SolverConfig,
                        t: float = 1.0, window: Optional[SectorGrid] = None) -> float:
    """sup_window |S(t) D_lam^{2/alpha} u0 - Gamma_lam^{2/alpha} S(.) u0 at t|.

    Zero for the exact flow in every regime; measures combined solver error.
    """
    window = window or default_window(spec)
    sigma = 2.0 / spec.alpha
    direct = solve(dilate(u0, lam, sigma, spec), spec, _with_snapshots(cfg, [t]))
    long = solve(u0, spec, _with_snapshots(cfg, [lam * lam * t]))
    a = _sample(direct.field_at(t), window.points())
    return float(np.max(np.abs(a - _gamma_rescale(long, lam, sigma, t, window))))
