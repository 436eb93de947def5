"""The weighted space X_{m,gamma}: the singular profile psi_0, the weight
rho_m, the weighted sup-norm and the dilations D_lambda^sigma and
Gamma_lambda^sigma.

Initial data are described symbolically by :class:`ProfileSpec` variants.
Every variant is ``amp * base(lam * x)``, so dilations act in closed form
on ``amp`` and ``lam``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .domain import DomainSpec, Field, interpolate
from .exceptions import DomainError, GridCoverageError, NumericalError


def c_const(spec: DomainSpec) -> float:
    """c_{m,gamma} = gamma (gamma + 2) ... (gamma + 2m - 2); 1 when m = 0."""
    return float(np.prod([spec.gamma + 2 * k for k in range(spec.m)])) if spec.m else 1.0


def _as_points(x, spec: DomainSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.N:
        raise DomainError(f"points must have {spec.N} coordinates")
    return x


def _check_inside(x: np.ndarray, spec: DomainSpec):
    if spec.m and np.any(x[..., :spec.m] <= 0):
        raise DomainError("point outside the open sector")
    if np.any(np.all(x == 0, axis=-1)):
        raise DomainError("point at the origin")


def _prod_head(x: np.ndarray, m: int) -> np.ndarray:
    return np.prod(x[..., :m], axis=-1) if m else np.ones(x.shape[:-1])


def _psi0_raw(x: np.ndarray, spec: DomainSpec) -> np.ndarray:
    r2 = np.sum(x * x, axis=-1)
    return c_const(spec) * _prod_head(x, spec.m) * r2 ** (-(spec.gamma + 2 * spec.m) / 2)


def psi0(x, spec: DomainSpec) -> np.ndarray:
    """c_{m,gamma} x_1...x_m |x|^{-gamma-2m} at points of the open sector."""
    x = _as_points(x, spec)
    _check_inside(x, spec)
    return _psi0_raw(x, spec)


def weight(x, spec: DomainSpec) -> np.ndarray:
    """rho_m(x) = |x|^{gamma+2m} / (x_1...x_m)."""
    x = _as_points(x, spec)
    _check_inside(x, spec)
    r2 = np.sum(x * x, axis=-1)
    return r2 ** ((spec.gamma + 2 * spec.m) / 2) / _prod_head(x, spec.m)


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class ProfileSpec:
    """Base descriptor. ``evaluate`` returns amp * base(lam * x)."""

    amp: float = 1.0
    lam: float = 1.0

    singular = False        # unbounded near the origin
    bounded_only = False    # no finite X-norm

    def base(self, y: np.ndarray, spec: DomainSpec) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x, spec: DomainSpec) -> np.ndarray:
        x = _as_points(x, spec)
        return self.amp * self.base(self.lam * x, spec)

    def breakpoints(self) -> tuple:
        """Radii where the profile jumps (in physical coordinates)."""
        return ()

    def scaled(self, factor: float) -> "ProfileSpec":
        return replace(self, amp=self.amp * factor)


@dataclass(frozen=True)
class Psi0(ProfileSpec):
    singular = True

    def base(self, y, spec):
        return _psi0_raw(y, spec)


@dataclass(frozen=True)
class TruncatedPsi0(ProfileSpec):
    rho: float = 1.0
    keep: str = "outer"

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError("rho must be positive")
        if self.keep not in ("inner", "outer"):
            raise DomainError("keep must be 'inner' or 'outer'")

    @property
    def singular(self):
        return self.keep == "inner"

    def base(self, y, spec):
        r = np.sqrt(np.sum(y * y, axis=-1))
        inside = r < self.rho
        sel = ~inside if self.keep == "outer" else inside
        safe = np.where(sel[..., None], y, 1.0)
        return np.where(sel, _psi0_raw(safe, spec), 0.0)

    def breakpoints(self):
        return (self.rho / self.lam,)


@dataclass(frozen=True)
class LogPeriodicPsi0(ProfileSpec):
    """psi_0 (1 + a sin(omega ln|x| + phase))."""

    a: float = 0.5
    omega: float = 1.0
    phase: float = 0.0
    singular = True

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise DomainError("amplitude a must lie in [0, 1)")
        if not self.omega > 0:
            raise DomainError("omega must be positive")

    def base(self, y, spec):
        r2 = np.sum(y * y, axis=-1)
        mod = 1.0 + self.a * np.sin(0.5 * self.omega * np.log(r2) + self.phase)
        return _psi0_raw(y, spec) * mod


@dataclass(frozen=True)
class AntisymConstant(ProfileSpec):
    """The constant A on the sector (odd extension across x_i = 0)."""

    A: float = 1.0
    bounded_only = True

    def __post_init__(self):
        if not self.A > 0:
            raise DomainError("A must be positive")

    def base(self, y, spec):
        return np.full(y.shape[:-1], float(self.A))


@dataclass(frozen=True)
class GammaPrimeTail(ProfileSpec):
    """x_1...x_m |x|^{-gamma'-2m} on |x| > 1, zero inside."""

    gamma_prime: float = 1.5

    def base(self, y, spec):
        if not spec.gamma < self.gamma_prime < spec.N:
            raise DomainError("gamma_prime must lie in (gamma, N)")
        r2 = np.sum(y * y, axis=-1)
        sel = r2 > 1.0
        r2s = np.where(sel, r2, 1.0)
        return np.where(sel, _prod_head(y, spec.m) * r2s ** (-(self.gamma_prime + 2 * spec.m) / 2), 0.0)

    def breakpoints(self):
        return (1.0 / self.lam,)


@dataclass(frozen=True)
class Sampled(ProfileSpec):
    """A sampled field used as data (cubic interpolation between nodes)."""

    field: Optional[Field] = None

    def base(self, y, spec):
        vals, covered = interpolate(self.field, y.reshape(-1, spec.N))
        return vals.reshape(y.shape[:-1])


class AbsDifference(ProfileSpec):
    """|f - g| for two profiles; used for comparison bounds."""

    def __init__(self, f: ProfileSpec, g: ProfileSpec):
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "amp", 1.0)
        object.__setattr__(self, "lam", 1.0)

    @property
    def singular(self):
        return self.f.singular or self.g.singular

    def evaluate(self, x, spec):
        return np.abs(self.f.evaluate(x, spec) - self.g.evaluate(x, spec))

    def breakpoints(self):
        return tuple(self.f.breakpoints()) + tuple(self.g.breakpoints())


# ---------------------------------------------------------------- norms

@dataclass(frozen=True)
class XNormReport:
    norm: float
    argmax: Optional[tuple]
    tail_bound: float

    def __post_init__(self):
        if not (self.norm >= 0 and self.tail_bound >= 0):
            raise NumericalError("norm and tail bound must be nonnegative")


def _field_xnorm(f: Field, spec: DomainSpec) -> XNormReport:
    pts = f.grid.points()
    vals = f.values.ravel()
    inside = np.ones(len(pts), dtype=bool)
    if spec.m:
        inside &= np.all(pts[:, :spec.m] > 0, axis=1)
    inside &= np.any(pts != 0, axis=1)
    if not np.any(inside):
        return XNormReport(0.0, None, 0.0)
    w = weight(pts[inside], spec) * np.abs(vals[inside])
    if not np.all(np.isfinite(w)):
        raise NumericalError("non-finite weighted values")
    k = int(np.argmax(w))
    norm = float(w[k])
    return XNormReport(norm, tuple(pts[inside][k]), 0.0)


def xnorm(f: Union[Field, ProfileSpec], spec: DomainSpec) -> XNormReport:
    """Weighted sup-norm ||rho_m f||_inf.

    Closed form for symbolic variants, grid supremum for fields (whose
    values outside the grid are unknown, so the tail bound is 0).
    """
    if isinstance(f, Field):
        return _field_xnorm(f, spec)
    if isinstance(f, Sampled):
        g = f.field
        return _field_xnorm(g.replace(values=f.amp * _dilate_field(g, f.lam, 0.0).values), spec)
    if f.bounded_only:
        raise NumericalError("AntisymConstant has no finite X-norm")
    scale = abs(f.amp) * f.lam ** (-spec.homogeneity)
    c = c_const(spec)
    if isinstance(f, (Psi0, TruncatedPsi0)):
        return XNormReport(scale * c, None, 0.0)
    if isinstance(f, LogPeriodicPsi0):
        return XNormReport(scale * c * (1.0 + f.a), None, 0.0)
    if isinstance(f, GammaPrimeTail):
        return XNormReport(scale, None, 0.0)
    raise TypeError(f"no X-norm for {type(f).__name__}")


# ---------------------------------------------------------------- dilations

def dilate(f, lam: float, sigma: float, spec: Optional[DomainSpec] = None):
    """D_lam^sigma f(x) = lam^sigma f(lam x).

    Symbolic profiles dilate in closed form; homogeneous ones are folded
    back to ``lam = 1`` when ``spec`` is given. Fields are resampled by
    clamped cubic interpolation onto the same grid; nodes whose image
    leaves the grid are set to 0 with a warning.
    """
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if isinstance(f, Field):
        return _dilate_field(f, lam, sigma)
    if isinstance(f, AbsDifference):
        return AbsDifference(dilate(f.f, lam, sigma, spec), dilate(f.g, lam, sigma, spec))
    if isinstance(f, AntisymConstant):
        return replace(f, amp=f.amp * lam ** sigma)
    if spec is not None and isinstance(f, Psi0):
        return replace(f, amp=f.amp * lam ** (sigma - spec.homogeneity))
    if spec is not None and isinstance(f, LogPeriodicPsi0):
        # fold the total dilation into amplitude and phase
        total = f.lam * lam
        amp = f.amp * lam ** (sigma - spec.homogeneity) * f.lam ** (-spec.homogeneity)
        phase = math.fmod(f.phase + f.omega * math.log(total), 2 * math.pi)
        return replace(f, amp=amp, lam=1.0, phase=phase)
    return replace(f, amp=f.amp * lam ** sigma, lam=f.lam * lam)


class GridCoverageWarning(UserWarning):
    pass


def _dilate_field(f: Field, lam: float, sigma: float) -> Field:
    if lam == 1.0:
        return f.replace(values=f.values.copy())
    pts = f.grid.points() * lam
    vals, covered = interpolate(f, pts)
    if not np.any(covered):
        raise GridCoverageError("dilation pushes every node outside the grid")
    if not np.all(covered):
        warnings.warn(f"{np.count_nonzero(~covered)} dilated nodes left the grid and were set to 0",
                      GridCoverageWarning, stacklevel=3)
    return f.replace(values=(lam ** sigma) * vals.reshape(f.grid.shape))


def spacetime_rescale(traj, lam: float, sigma: float, t: float) -> Field:
    """Gamma_lam^sigma u(t, .) = lam^sigma u(lam^2 t, lam .)."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    snap = traj.field_at(lam * lam * t)
    return _dilate_field(snap, lam, sigma).replace(time=t)
