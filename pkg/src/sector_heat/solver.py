"""Global flow of u_t - Delta u + |u|^alpha u = 0 on the sector by operator
splitting: an exact diffusion substep (the sector heat semigroup) and an
exact absorption substep (the closed-form ODE flow).

The first diffusion substep acts on the symbolic initial profile, so
singular data never have to be sampled on the grid.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .domain import AxisKind, DomainSpec, Field, SectorGrid
from .exceptions import DomainError, NumericalError
from .heat_kernel import apply_semigroup
from .report import fingerprint
from .weighted_space import ProfileSpec, Sampled


# ---------------------------------------------------------------- nonlinearities

@dataclass(frozen=True)
class PowerLaw:
    """f(u) = |u|^alpha u."""

    alpha: float
    lower = 0.0     # left end of the range where f > 0

    def f(self, u):
        return np.abs(u) ** self.alpha * u

    def flow(self, u, tau):
        """Exact solution of u' = -f(u) after time tau."""
        u = np.asarray(u, dtype=float)
        if tau == 0:
            return u.copy()
        a = self.alpha
        with np.errstate(divide="ignore", over="ignore"):
            mag = (np.abs(u) ** -a + a * tau) ** (-1.0 / a)
        # the flow is contractive; clip the rounding of the two powers
        mag = np.minimum(mag, np.abs(u))
        return np.where(u == 0, 0.0, np.sign(u) * mag)


@dataclass(frozen=True)
class Exponential:
    """f(u) = e^u; flow u -> -ln(e^{-u} + tau)."""

    lower = -math.inf

    def f(self, u):
        return np.exp(u)

    def flow(self, u, tau):
        u = np.asarray(u, dtype=float)
        return u - np.log1p(tau * np.exp(u))


def absorption_flow(f, tau: float, alpha: float):
    """Pointwise u -> u / (1 + alpha tau |u|^alpha)^{1/alpha}.

    Accepts a Field (returns a Field) or an array.
    """
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    law = PowerLaw(alpha)
    if isinstance(f, Field):
        return f.replace(values=law.flow(f.values, tau))
    return law.flow(f, tau)


# ---------------------------------------------------------------- config / trajectory

@dataclass(frozen=True)
class SolverConfig:
    """Time stepping and grid parameters.

    ``dt0`` defaults to 2 h^2 so that every diffusion half step spans at
    least one cell in diffusion length, where the trapezoid rule is
    spectrally accurate.
    """

    splitting: str = "strang"
    dt0: Optional[float] = None
    growth: float = 1.2
    dt_max: float = 0.5
    snapshots: tuple = (1.0,)
    h: float = 0.1
    R: float = 20.0
    nonlinearity: str = "power"
    quad_tol: Optional[float] = None
    split_tol: Optional[float] = None
    estimate_error: bool = True

    def __post_init__(self):
        if self.splitting not in ("strang", "lie"):
            raise DomainError("splitting must be 'strang' or 'lie'")
        if self.dt0 is not None and not self.dt0 > 0:
            raise DomainError("dt0 must be positive")
        if not self.growth >= 1.0 or not self.dt_max > 0:
            raise DomainError("growth must be >= 1 and dt_max positive")
        snaps = tuple(float(s) for s in self.snapshots)
        if not snaps or snaps[0] <= 0 or any(b <= a for a, b in zip(snaps, snaps[1:])):
            raise DomainError("snapshot times must be positive and strictly increasing")
        object.__setattr__(self, "snapshots", snaps)
        if self.nonlinearity not in ("power", "exp"):
            raise DomainError("nonlinearity must be 'power' or 'exp'")

    def grid(self, spec: DomainSpec) -> SectorGrid:
        return SectorGrid.uniform(spec, self.h, self.R)

    def first_dt(self) -> float:
        return self.dt0 if self.dt0 is not None else 2.0 * self.h * self.h


@dataclass
class Trajectory:
    snapshots: list
    spec: DomainSpec
    cfg: SolverConfig
    provenance: object
    splitting_error: float = 0.0
    steps: int = 0
    undershoot: float = 0.0
    whole_space: bool = False

    def __post_init__(self):
        times = [s.time for s in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def grid(self) -> SectorGrid:
        return self.snapshots[0].grid

    def field_at(self, t: float) -> Field:
        """Snapshot at ``t``, linearly interpolated in time between snapshots."""
        times = self.times
        k = int(np.argmin(np.abs(times - t)))
        if abs(times[k] - t) <= 1e-12 * max(1.0, t):
            return self.snapshots[k]
        if t < times[0] or t > times[-1]:
            raise DomainError(f"time {t} outside the stored range [{times[0]}, {times[-1]}]")
        j = bisect.bisect_right(times.tolist(), t)
        a, b = self.snapshots[j - 1], self.snapshots[j]
        w = (t - a.time) / (b.time - a.time)
        return Field(a.grid, (1 - w) * a.values + w * b.values, t, max(a.tail, b.tail))

    def fingerprint(self) -> str:
        return fingerprint(self.spec, self.cfg, self.provenance)


# ---------------------------------------------------------------- solver

def _nonlinearity(spec: DomainSpec, cfg: SolverConfig):
    return PowerLaw(spec.alpha) if cfg.nonlinearity == "power" else Exponential()


def _diffuse(u, tau, spec, grid, cfg):
    out = apply_semigroup(u, tau, spec, grid, tol=cfg.quad_tol)
    if not np.all(np.isfinite(out.values)):
        raise NumericalError("non-finite values after diffusion")
    return out


def _step(u, dt, spec, grid, cfg, law):
    if cfg.splitting == "strang":
        v = _diffuse(u, 0.5 * dt, spec, grid, cfg)
        v = v.replace(values=law.flow(v.values, dt))
        return _diffuse(v, 0.5 * dt, spec, grid, cfg)
    v = _diffuse(u, dt, spec, grid, cfg)
    return v.replace(values=law.flow(v.values, dt))


def _error_indicator(u, dt, spec, grid, cfg, law, stepped):
    """Distance to the step with the roles of the two substeps swapped."""
    if cfg.splitting == "strang":
        if not isinstance(u, Field):
            return 0.0
        v = u.replace(values=law.flow(u.values, 0.5 * dt))
        v = _diffuse(v, dt, spec, grid, cfg)
        other = law.flow(v.values, 0.5 * dt)
    else:
        if not isinstance(u, Field):
            return 0.0
        v = u.replace(values=law.flow(u.values, dt))
        other = _diffuse(v, dt, spec, grid, cfg).values
    return float(np.max(np.abs(other - stepped.values)))


def solve(u0: Union[ProfileSpec, Field], spec: DomainSpec, cfg: SolverConfig) -> Trajectory:
    """Run the splitting scheme and record snapshots at ``cfg.snapshots``."""
    if isinstance(u0, Field):
        grid = u0.grid
        if u0.time != 0.0:
            u0 = u0.replace(time=0.0)
    elif isinstance(u0, Sampled):
        grid = u0.field.grid
    else:
        grid = cfg.grid(spec)
    law = _nonlinearity(spec, cfg)
    u = u0
    t = 0.0
    dt = cfg.first_dt()
    snaps, err, steps, undershoot = [], 0.0, 0, 0.0
    for target in cfg.snapshots:
        while t < target * (1 - 1e-13):
            step = min(dt, target - t)
            # avoid a sliver step right before a snapshot
            if target - t - step < 1e-3 * step:
                step = target - t
            new = _step(u, step, spec, grid, cfg, law)
            if cfg.estimate_error:
                err += _error_indicator(u, step, spec, grid, cfg, law, new)
            u = new
            t = t + step
            steps += 1
            dt = min(dt * cfg.growth, cfg.dt_max)
        snap = u.replace(time=target)
        if not np.all(np.isfinite(snap.values)):
            raise NumericalError("non-finite values in the solution")
        undershoot = min(undershoot, float(np.min(snap.values)))
        snaps.append(snap)
        t = target
    return Trajectory(snaps, spec, cfg, u0, err, steps, undershoot)


def universal_bound(spec: DomainSpec, t: float) -> float:
    """(alpha t)^{-1/alpha}."""
    return (spec.alpha * t) ** (-1.0 / spec.alpha)


# ---------------------------------------------------------------- whole space

def _mirror_grid(grid: SectorGrid) -> tuple:
    coords, kinds = [], []
    for x, kind in zip(grid.coords, grid.kinds):
        if kind is AxisKind.DIRICHLET:
            coords.append(np.concatenate([-x[::-1], x]))
        else:
            coords.append(x)
        kinds.append(AxisKind.FREE)
    return SectorGrid(tuple(coords), tuple(kinds), grid.spacing)


def extend_field(f: Field, spec: DomainSpec, full: Optional[SectorGrid] = None) -> Field:
    """Antisymmetric extension of a sector field to the mirrored grid."""
    v = f.values
    for axis in range(spec.m):
        v = np.concatenate([-np.flip(v, axis=axis), v], axis=axis)
    return Field(full or _mirror_grid(f.grid), v, f.time, f.tail)


def solve_rn(v0: ProfileSpec, spec: DomainSpec, cfg: SolverConfig) -> Trajectory:
    """Whole-space flow of antisymmetric data: sector solve, then extend."""
    traj = solve(v0, spec, cfg)
    full = _mirror_grid(traj.grid)
    snaps = [extend_field(s, spec, full) for s in traj.snapshots]
    return Trajectory(snaps, spec, cfg, v0, traj.splitting_error, traj.steps,
                      traj.undershoot, whole_space=True)


def splitting_order(u0, spec: DomainSpec, cfg: SolverConfig, dt: float, T: float = 1.0,
                    levels: int = 3) -> tuple:
    """Observed time order under fixed-step halving.

    Runs with dt, dt/2, ... and returns the successive sup-differences of
    the solutions at T and the orders log2(d_k / d_{k+1}).
    """
    sols = []
    for k in range(levels):
        step = dt / 2 ** k
        c = replace(cfg, dt0=step, growth=1.0, dt_max=step, snapshots=(T,), estimate_error=False)
        sols.append(solve(u0, spec, c).snapshots[-1].values)
    diffs = [float(np.max(np.abs(a - b))) for a, b in zip(sols, sols[1:])]
    orders = [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]
    return diffs, orders
