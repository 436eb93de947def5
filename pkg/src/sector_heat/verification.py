"""Nodewise certification of the pointwise inequalities and identities
satisfied by the flow: the sharp upper bound, its generalization to
convex nonlinearities, the Kato comparison, positivity of the lower
envelope and the elliptic identity for psi_0.

Violations are signed (positive = broken) and taken over interior nodes:
one h away from the Dirichlet faces and ``KERNEL_CUTOFF * sqrt(t)`` away
from the truncation faces, where the replicate closure of the field
semigroup dominates the error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec

from .domain import DomainSpec, Field, SectorGrid
from .exceptions import DomainError, GridCoverageError, NumericalError
from .heat_kernel import KERNEL_CUTOFF, apply_semigroup
from .report import VerificationReport, fingerprint
from .solver import Exponential, PowerLaw, SolverConfig, Trajectory, solve
from .stencil import fd_laplacian, stencil_reach
from .weighted_space import AbsDifference, ProfileSpec, _psi0_raw, c_const

BISECTION_RTOL = 1e-12


def _mask(grid: SectorGrid, t: float, edge_layer: Optional[float]) -> np.ndarray:
    layer = KERNEL_CUTOFF * math.sqrt(t) if edge_layer is None else edge_layer
    mask = grid.interior_mask(edge_layer=layer)
    if not np.any(mask):
        raise GridCoverageError(f"no interior nodes left at t={t}; enlarge R")
    return mask


def _linear(traj: Trajectory, t: float) -> Field:
    return apply_semigroup(traj.provenance, t, traj.spec, traj.grid)


def _check_nonnegative(u0, spec: DomainSpec, grid: SectorGrid):
    if isinstance(u0, Field):
        vals = u0.values
    else:
        pts = grid.points()
        pts = pts[np.any(pts != 0, axis=1)]
        vals = u0.evaluate(pts, spec)
    if np.min(vals, initial=0.0) < 0:
        raise DomainError("initial data must be nonnegative")


# ---------------------------------------------------------------- sharp bound

def check_upper_estimate(traj: Trajectory, tol: float = 1e-4,
                         edge_layer: Optional[float] = None) -> VerificationReport:
    """u(t) <= L / (1 + alpha t L^alpha)^{1/alpha} with L = e^{t Delta_m} u0, nodewise."""
    if traj.cfg.nonlinearity != "power":
        raise DomainError("the sharp bound is stated for the power nonlinearity")
    spec = traj.spec
    _check_nonnegative(traj.provenance, spec, traj.grid)
    law = PowerLaw(spec.alpha)
    per_time, gaps, tail = [], [], 0.0
    for snap in traj.snapshots:
        t = snap.time
        lin = _linear(traj, t)
        bound = law.flow(lin.values, t)
        mask = _mask(traj.grid, t, edge_layer)
        diff = (snap.values - bound)[mask]
        per_time.append(float(np.max(diff)))
        gaps.append(float(np.max(np.abs(diff))))
        tail = max(tail, lin.tail, snap.tail)
    return VerificationReport(
        "upper_estimate", max(per_time), tol, traj.fingerprint(),
        {"times": list(traj.times), "violations": per_time, "equality_gap": max(gaps),
         "quad_tail": tail, "splitting_error": traj.splitting_error})


# ---------------------------------------------------------------- F-bound

def tail_integral(law, s: np.ndarray) -> np.ndarray:
    """F(s) = int_s^infty d sigma / f(sigma), vectorized over ``s``."""
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return s.copy()
    # sigma = s + c (e^y - 1) turns algebraic tails into exponential ones
    c = np.maximum(np.abs(s), 1.0)

    def integrand(y):
        if y > 700.0:
            return np.zeros_like(s)
        e = math.exp(y)
        with np.errstate(over="ignore"):
            return c * e / law.f(s + c * (e - 1.0))

    val, err = quad_vec(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-13,
                        norm="max", limit=2000)
    val = np.asarray(val, dtype=float)
    if not np.all(np.isfinite(val)):
        raise NumericalError("F diverges on the supplied range")
    return val


def _check_law(law, lo: float, hi: float):
    if not hi > lo:
        return
    s = np.linspace(lo, hi, 257)
    f = law.f(s)
    scale = np.max(np.abs(f))
    if np.any(f <= 0):
        raise DomainError("f must be positive on the data range")
    if np.any(np.diff(f) < -1e-12 * scale):
        raise DomainError("f must be increasing on the data range")
    if np.any(np.diff(f, 2) < -1e-9 * scale):
        raise DomainError("f must be convex on the data range")


def generalized_bound(lin: np.ndarray, t: float, law) -> np.ndarray:
    """F^{-1}(F(lin) + t) by bisection, nodewise.

    Nodes where ``lin`` is at or below the left end of the positive range
    of f carry no information and keep the value ``lin``.
    """
    lin = np.asarray(lin, dtype=float)
    out = lin.copy()
    if t == 0:
        return out
    if t < 0:
        raise DomainError("t must be nonnegative")
    active = lin > law.lower
    L = lin[active]
    if L.size == 0:
        return out
    target = tail_integral(law, L) + t
    hi = L.copy()
    lo = L.copy()
    # walk left until F(lo) >= target; F is decreasing
    step = np.ones_like(L)
    todo = np.ones(L.size, dtype=bool)
    for _ in range(400):
        if not np.any(todo):
            break
        if math.isfinite(law.lower):
            cand = law.lower + 0.5 * (hi[todo] - law.lower)
        else:
            cand = L[todo] - step[todo]
            step[todo] *= 2.0
        ok = tail_integral(law, cand) >= target[todo]
        idx = np.flatnonzero(todo)
        lo[idx] = cand
        hi[idx[~ok]] = cand[~ok]
        todo[idx[ok]] = False
    if np.any(todo):
        raise NumericalError("could not bracket F^{-1}")
    for _ in range(200):
        width = hi - lo
        conv = width <= BISECTION_RTOL * np.maximum(np.abs(hi), np.abs(lo))
        if np.all(conv):
            break
        mid = 0.5 * (lo + hi)
        below = tail_integral(law, mid) >= target   # F(mid) >= target -> root right of mid
        lo = np.where(below & ~conv, mid, lo)
        hi = np.where(~below & ~conv, mid, hi)
    out[active] = 0.5 * (lo + hi)
    return out


def generalized_upper_bound(traj: Trajectory, law=None, tol: float = 1e-4,
                            edge_layer: Optional[float] = None) -> VerificationReport:
    """u(t) <= F^{-1}(F(e^{t Delta} u0) + t) nodewise, for any positive,
    increasing, convex f with F(s) = int_s^infty 1/f finite."""
    spec = traj.spec
    if law is None:
        law = PowerLaw(spec.alpha) if traj.cfg.nonlinearity == "power" else Exponential()
    per_time, bounds = [], []
    for snap in traj.snapshots:
        t = snap.time
        lin = _linear(traj, t).values
        mask = _mask(traj.grid, t, edge_layer)
        sel = lin[mask]
        pos = sel[sel > law.lower]
        if pos.size:
            _check_law(law, float(np.min(pos)), float(np.max(pos)))
        b = generalized_bound(sel, t, law)
        bounds.append(b)
        per_time.append(float(np.max(snap.values[mask] - b)))
    return VerificationReport(
        "generalized_upper_bound", max(per_time), tol, traj.fingerprint(),
        {"times": list(traj.times), "violations": per_time,
         "law": type(law).__name__})


# ---------------------------------------------------------------- Kato

def check_kato_comparison(u0: ProfileSpec, v0: ProfileSpec, times: Sequence[float],
                          spec: DomainSpec, cfg: SolverConfig, tol: float = 1e-4,
                          edge_layer: Optional[float] = None) -> VerificationReport:
    """|u(t) - v(t)| <= e^{t Delta_m} |u0 - v0| nodewise at each requested time."""
    cfg = replace(cfg, snapshots=tuple(times))
    tu = solve(u0, spec, cfg)
    tv = solve(v0, spec, cfg)
    diff0 = AbsDifference(u0, v0)
    per_time = []
    for su, sv in zip(tu.snapshots, tv.snapshots):
        t = su.time
        rhs = apply_semigroup(diff0, t, spec, tu.grid).values
        mask = _mask(tu.grid, t, edge_layer)
        per_time.append(float(np.max((np.abs(su.values - sv.values) - rhs)[mask])))
    return VerificationReport(
        "kato_comparison", max(per_time), tol, fingerprint(spec, cfg, u0, v0),
        {"times": list(cfg.snapshots), "violations": per_time})


# ---------------------------------------------------------------- lower envelope

@dataclass(frozen=True)
class LowerBoundProbe:
    c_prime: float      # 5th percentile of the nodewise ratio
    c_min: float        # raw minimum
    report: VerificationReport


def lower_envelope(x: np.ndarray, spec: DomainSpec) -> np.ndarray:
    """x_1...x_m min(1, |x|^{-(gamma+2m)})."""
    r = np.sqrt(np.sum(x * x, axis=-1))
    prod = np.prod(x[..., :spec.m], axis=-1) if spec.m else np.ones(x.shape[:-1])
    with np.errstate(divide="ignore"):
        decay = np.where(r > 1.0, r ** (-(spec.gamma + 2 * spec.m)), 1.0)
    return prod * decay


def lower_bound_probe(u0: ProfileSpec, t0: float, spec: DomainSpec, cfg: SolverConfig,
                      percentile: float = 5.0, edge_layer: Optional[float] = None) -> LowerBoundProbe:
    """Largest c' with u(t0) >= c' x_1...x_m min(1, |x|^{-(gamma+2m)}) on the grid.

    The percentile of the nodewise ratio is reported as c' so that a single
    node polluted by discretization does not decide the sign; the raw
    minimum is kept alongside.
    """
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    traj = solve(u0, spec, replace(cfg, snapshots=(t0,)))
    snap = traj.snapshots[0]
    mask = _mask(traj.grid, t0, edge_layer)
    pts = traj.grid.points()[mask.ravel()]
    ratio = snap.values[mask] / lower_envelope(pts, spec)
    c_prime = float(np.percentile(ratio, percentile))
    c_min = float(np.min(ratio))
    # pass iff c' > 0: the tolerance sits just below zero violation
    rep = VerificationReport("lower_bound", -c_prime, -np.finfo(float).tiny, traj.fingerprint(),
                             {"t0": t0, "c_prime": c_prime, "c_min": c_min,
                              "percentile": percentile})
    return LowerBoundProbe(c_prime, c_min, rep)


# ---------------------------------------------------------------- elliptic identity

def elliptic_coefficient(spec: DomainSpec) -> float:
    """k in -Delta psi_0 = k psi_0 / |x|^2, k = (gamma + 2m)(N - 2 - gamma)."""
    return (spec.gamma + 2 * spec.m) * (spec.N - 2 - spec.gamma)


def annulus_grid(spec: DomainSpec, h: float, outer: float = 2.0, planar: bool = False) -> SectorGrid:
    """Box grid [-outer, outer]^N (clipped to x_i >= 0 on Dirichlet axes).

    ``planar`` keeps a single node at 0 on axes 3..N, which samples the
    annulus on a plane at a fraction of the cost.
    """
    box = SectorGrid.box(spec, upper=outer, h=h, lower=-outer)
    if not planar:
        return box
    coords = tuple(c if i < 2 else np.array([0.0]) for i, c in enumerate(box.coords))
    return SectorGrid(coords, box.kinds, box.spacing)


def elliptic_residual(spec: DomainSpec, grid: SectorGrid, order: int = 2,
                      annulus: tuple = (0.5, 2.0), tol: Optional[float] = None) -> VerificationReport:
    """Relative error of the FD Laplacian of psi_0 against -k psi_0/|x|^2 on an annulus.

    Normalized by max |k psi_0/|x|^2| on the annulus, or by max |psi_0|
    in the harmonic case k = 0.
    """
    r_in, r_out = annulus
    reach = stencil_reach(order) * max(grid.spacing)
    if r_in - reach * math.sqrt(spec.N) <= 0:
        raise DomainError("annulus stencil touches the origin")
    pts = grid.points()
    r = np.sqrt(np.sum(pts * pts, axis=1))
    pts = pts[(r >= r_in) & (r <= r_out)]
    if pts.shape[0] == 0:
        raise DomainError("grid has no nodes in the annulus")
    k = elliptic_coefficient(spec)
    psi = lambda x: _psi0_raw(x, spec)
    vals = psi(pts)
    exact = -k * vals / np.sum(pts * pts, axis=1)
    lap = fd_laplacian(psi, pts, grid.spacing, order)
    harmonic = k == 0
    scale = np.max(np.abs(vals)) if harmonic else np.max(np.abs(exact))
    rel = float(np.max(np.abs(lap - exact)) / scale)
    if tol is None:
        tol = 1e-6 if harmonic else 1e-3
    return VerificationReport("elliptic_identity", rel, tol, fingerprint(spec, grid.fingerprint(), order),
                              {"coefficient": k, "order": order, "nodes": int(pts.shape[0]),
                               "harmonic": harmonic})


def elliptic_refinement(spec: DomainSpec, h: float, order: int = 2, annulus=(0.5, 2.0),
                        planar: bool = False) -> tuple:
    """Relative errors at h and h/2 and the observed order log2(e_h / e_{h/2})."""
    e1 = elliptic_residual(spec, annulus_grid(spec, h, annulus[1], planar), order, annulus).violation
    e2 = elliptic_residual(spec, annulus_grid(spec, h / 2, annulus[1], planar), order, annulus).violation
    return e1, e2, math.log2(e1 / e2)
