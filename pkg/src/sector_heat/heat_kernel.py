"""Dirichlet heat kernel of the sector and the linear semigroup e^{t Delta_m}.

The kernel factorizes over axes: a difference of Gaussians (method of
images) on each Dirichlet axis and a plain Gaussian on each free axis.
The semigroup is therefore applied as N successive one-dimensional
quadrature convolutions, one dense matrix per axis.

Two quadrature routes exist:

* sampled fields use the trapezoid rule on the uniform (odd-extended)
  lattice of the grid, truncated at ``KERNEL_CUTOFF * sqrt(t)``;
* symbolic profiles are integrated with composite Gauss-Legendre panels,
  geometrically graded towards the origin for singular data, and the
  output is sampled on the requested grid.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special as sp

from .domain import AxisKind, DomainSpec, Field, SectorGrid
from .exceptions import DomainError, NumericalError
from .report import VerificationReport, fingerprint
from .special import erf as _erf_oracle
from .weighted_space import (AntisymConstant, ProfileSpec, Sampled, _dilate_field,
                             c_const)

KERNEL_CUTOFF = 8.0     # field route, in units of sqrt(t)
PROFILE_CUTOFF = 12.0   # symbolic route
GL_ORDER = 8


def _gauss(d, t):
    return np.exp(-d * d / (4.0 * t)) / np.sqrt(4.0 * math.pi * t)


def kernel_1d(t: float, x, y, dirichlet: bool) -> np.ndarray:
    """One-axis factor of the kernel, broadcasting over ``x`` and ``y``.

    The image difference e^{-(x-y)^2/4t} - e^{-(x+y)^2/4t} is evaluated as
    e^{-(x-y)^2/4t} (1 - e^{-xy/t}) with expm1, which avoids cancellation
    when xy/t is small.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = _gauss(x - y, t)
    if dirichlet:
        g = g * -np.expm1(-x * y / t)
    return g


def kernel(t: float, x, y, spec: DomainSpec) -> np.ndarray:
    """K_t(x, y) on the sector; ``x`` and ``y`` broadcast over leading axes."""
    if not t > 0:
        raise DomainError("t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = 1.0
    for i in range(spec.N):
        out = out * kernel_1d(t, x[..., i], y[..., i], spec.is_dirichlet(i))
    return out


def erf_product(delta: float, x, spec: DomainSpec) -> np.ndarray:
    """I_m(delta, x) = prod_{i<=m} erf(x_i / (2 sqrt(delta))) = e^{delta Delta_m} 1."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape[:-1])
    for i in range(spec.m):
        out = out * _erf_oracle(x[..., i] / (2.0 * math.sqrt(delta)))
    return out


def kernel_quadrature(t: float, x, spec: DomainSpec, g=None, panels_per_width: int = 4,
                      order: int = 12) -> float:
    """Integrate K_t(x, .) g over the sector with tensor Gauss-Legendre.

    Evaluates :func:`kernel` pointwise; used to certify kernel identities
    independently of the semigroup matrices. ``g`` defaults to 1.
    """
    x = np.asarray(x, dtype=float)
    s = math.sqrt(t)
    nodes, weights = [], []
    gx, gw = leggauss(order)
    for i in range(spec.N):
        lo = x[i] - PROFILE_CUTOFF * s
        hi = x[i] + PROFILE_CUTOFF * s
        if spec.is_dirichlet(i):
            lo = max(lo, 0.0)
        n = max(1, int(math.ceil((hi - lo) / s * panels_per_width)))
        edges = np.linspace(lo, hi, n + 1)
        a, b = edges[:-1, None], edges[1:, None]
        nodes.append((0.5 * (b - a) * gx + 0.5 * (a + b)).ravel())
        weights.append((0.5 * (b - a) * gw).ravel())
    mesh = np.meshgrid(*nodes, indexing="ij")
    pts = np.stack(mesh, axis=-1)
    w = 1.0
    for i, wi in enumerate(weights):
        shape = [1] * spec.N
        shape[i] = wi.size
        w = w * wi.reshape(shape)
    vals = kernel(t, x, pts, spec)
    if g is not None:
        vals = vals * g(pts)
    return float(np.sum(vals * w))


# ---------------------------------------------------------------- field route

@lru_cache(maxsize=256)
def _field_matrix(n: int, x0: float, h: float, dirichlet: bool, t: float, cutoff: float) -> np.ndarray:
    """Trapezoid kernel matrix on a uniform axis with replicate closure.

    Lattice columns beyond the last node are folded onto it, and every
    row is divided by the truncated lattice sum of the Gaussian so that
    constants are reproduced exactly on free axes for any t.
    """
    reach = cutoff * math.sqrt(t)
    # integer offsets keep the cutoff test identical for every row
    kmax = int(math.floor(reach / h * (1 + 1e-12)))
    ext = kmax + 1
    x = x0 + h * np.arange(n)
    k = np.arange(-kmax, kmax + 1)
    norm = h * np.sum(_gauss(k * h, t))
    if dirichlet:
        i = np.arange(n)[:, None]
        j = np.arange(n + ext)[None, :]
        d2 = x[:, None] + (x0 + h * j)
        w = np.where(np.abs(i - j) <= kmax, _gauss((i - j) * h, t), 0.0) \
            - np.where(np.abs(d2) <= reach, _gauss(d2, t), 0.0)
    else:
        off = np.arange(n)[:, None] - np.arange(-ext, n + ext)[None, :]
        w = np.where(np.abs(off) <= kmax, _gauss(off * h, t), 0.0)
    w *= h / norm
    if dirichlet:
        mat = w[:, :n].copy()
        mat[:, -1] += w[:, n:].sum(axis=1)
    else:
        mat = w[:, ext:ext + n].copy()
        mat[:, 0] += w[:, :ext].sum(axis=1)
        mat[:, -1] += w[:, ext + n:].sum(axis=1)
    mat.setflags(write=False)
    return mat


def _axis_field_matrix(grid: SectorGrid, axis: int, t: float, cutoff: float) -> np.ndarray:
    x = grid.coords[axis]
    h = grid.spacing[axis]
    dirichlet = grid.kinds[axis] is AxisKind.DIRICHLET
    if dirichlet and abs(x[0] - 0.5 * h) > 1e-9 * h:
        raise DomainError("field semigroup needs a staggered Dirichlet axis")
    return _field_matrix(x.size, float(x[0]), float(h), dirichlet, float(t), float(cutoff))


def _apply_axes(values: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    v = values
    for axis, mat in enumerate(mats):
        v = np.moveaxis(np.tensordot(mat, v, axes=([1], [axis])), 0, axis)
    return v


def _field_semigroup(f: Field, t: float, cutoff: float) -> Field:
    grid = f.grid
    if not grid.is_uniform():
        raise DomainError("field semigroup needs a uniform grid")
    mats = [_axis_field_matrix(grid, a, t, cutoff) for a in range(grid.ndim)]
    out = _apply_axes(f.values, mats)
    vmax = float(np.max(np.abs(f.values), initial=0.0))
    face = 0.0
    for axis, kind in enumerate(grid.kinds):
        idx = [-1] if kind is AxisKind.DIRICHLET else [0, -1]
        face = max(face, float(np.max(np.abs(np.take(f.values, idx, axis=axis)), initial=0.0)))
    tail = f.tail + math.erfc(0.5 * cutoff) * vmax + 0.5 * face
    return Field(grid, out, f.time + t, tail)


# ---------------------------------------------------------------- profile route

def _graded_panels(H: float, levels: int) -> np.ndarray:
    """Breakpoints 0, H 2^-levels, ..., H/2, H."""
    return np.concatenate([[0.0], H * 2.0 ** -np.arange(levels, -1, -1)])


def _axis_nodes(lo: float, hi: float, H: float, breaks, singular: bool, levels: int, order: int):
    """Composite Gauss-Legendre nodes on [lo, hi] with panels of width <= H."""
    pts = set(np.linspace(lo, hi, max(1, int(math.ceil((hi - lo) / H))) + 1).tolist())
    pts.update(b for b in breaks if lo < b < hi)
    if singular:
        pts.update(p for p in _graded_panels(H, levels) if lo <= p <= hi)
        pts.update(-p for p in _graded_panels(H, levels) if lo <= -p <= hi)
    edges = np.array(sorted(pts))
    edges = edges[np.concatenate([[True], np.diff(edges) > 0])]
    gx, gw = leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * gx + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * gw).ravel()
    return nodes, weights


def _excluded_cell_bound(f: ProfileSpec, spec: DomainSpec, eps: float, t: float) -> float:
    """Kernel sup times the integral of the envelope c|x|^{-(gamma+m)} over |y| < sqrt(N) eps."""
    if not f.singular:
        return 0.0
    r = math.sqrt(spec.N) * eps
    sphere = 2.0 * math.pi ** (spec.N / 2) / math.gamma(spec.N / 2)
    scale = abs(getattr(f, "amp", 1.0)) * getattr(f, "lam", 1.0) ** (-spec.homogeneity) * 2.0
    mass = scale * max(c_const(spec), 1.0) * sphere * r ** (spec.N - spec.gamma) / (spec.N - spec.gamma)
    return (4.0 * math.pi * t) ** (-spec.N / 2) * mass


def _profile_semigroup(f: ProfileSpec, t: float, spec: DomainSpec, grid: SectorGrid,
                       order: int = GL_ORDER, chunk: int = 2_000_000) -> Field:
    s = math.sqrt(t)
    reach = PROFILE_CUTOFF * s
    breaks = []
    for b in f.breakpoints():
        breaks += [b, -b]
    mats, nodes = [], []
    eps = None
    for axis in range(spec.N):
        x = grid.coords[axis]
        dirichlet = spec.is_dirichlet(axis)
        H = min(grid.spacing[axis], s)
        lo = 0.0 if dirichlet else x[0] - reach
        hi = x[-1] + reach
        # grade until the innermost cell carries a negligible share of the mass
        levels = 0
        if f.singular:
            target = 1e-13 ** (1.0 / max(spec.N - spec.gamma, 1e-3))
            levels = int(min(max(math.ceil(math.log2(H / target)), 1), 90 if spec.N == 1 else 45))
            eps = H * 2.0 ** -levels if eps is None else max(eps, H * 2.0 ** -levels)
        q, w = _axis_nodes(lo, hi, H, breaks, f.singular, levels, order)
        mats.append(kernel_1d(t, x[:, None], q[None, :], dirichlet) * w[None, :])
        nodes.append(q)
    out = _contract_profile(f, spec, mats, nodes, chunk)
    tail = math.erfc(0.5 * PROFILE_CUTOFF) + (_excluded_cell_bound(f, spec, eps, t) if eps else 0.0)
    return Field(grid, out, t, tail)


def _contract_profile(f, spec, mats, nodes, chunk):
    N = spec.N
    if N == 1:
        vals = f.evaluate(nodes[0][:, None], spec)
        return mats[0] @ vals
    rest = nodes[1:]
    rest_mesh = np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, N - 1)
    rows = max(1, chunk // rest_mesh.shape[0])
    q0 = nodes[0]
    partial = np.empty((q0.size,) + tuple(m.shape[0] for m in mats[1:]))
    for start in range(0, q0.size, rows):
        blk = q0[start:start + rows]
        pts = np.concatenate([np.repeat(blk, rest_mesh.shape[0])[:, None],
                              np.tile(rest_mesh, (blk.size, 1))], axis=1)
        vals = f.evaluate(pts, spec).reshape((blk.size,) + tuple(r.size for r in rest))
        for k, mat in enumerate(mats[1:], start=1):
            vals = np.moveaxis(np.tensordot(mat, vals, axes=([1], [k])), 0, k)
        partial[start:start + blk.size] = vals
    return np.tensordot(mats[0], partial, axes=([1], [0]))


def apply_semigroup(f, tau: float, spec: DomainSpec, grid: Optional[SectorGrid] = None,
                    tol: Optional[float] = None, cutoff: float = KERNEL_CUTOFF) -> Field:
    """e^{tau Delta_m} f sampled on a grid.

    Fields are convolved on their own grid with the trapezoid rule;
    symbolic profiles are integrated in closed form data against the
    kernel and sampled on ``grid``. The result's ``tail`` bounds the
    quadrature truncation error; ``tol`` turns a large tail into an error.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    if isinstance(f, Sampled):
        base = _dilate_field(f.field, f.lam, 0.0)
        f = base.replace(values=f.amp * base.values)
    if isinstance(f, Field):
        out = _field_semigroup(f, tau, cutoff)
    else:
        if grid is None:
            raise DomainError("a grid is required to sample a symbolic profile")
        out = _profile_semigroup(f, tau, spec, grid)
    if tol is not None and out.tail > tol:
        raise NumericalError(f"quadrature tail bound {out.tail:.3g} exceeds {tol:.3g}")
    return out


# ---------------------------------------------------------------- checks

def kernel_domination_check(t, x, y, spec: DomainSpec, tol: float = 1e-12) -> VerificationReport:
    """K_t(x,y) <= t^{-m} (prod x_i y_i) G_t(x-y) at the given sample points.

    Violation is measured relative to the right-hand side.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = kernel(t, x, y, spec) if np.ndim(t) == 0 else _kernel_bcast(t, x, y, spec)
    d2 = np.sum((x - y) ** 2, axis=-1)
    g = np.exp(-d2 / (4 * t)) / (4 * np.pi * t) ** (spec.N / 2)
    prod = np.prod(x[..., :spec.m] * y[..., :spec.m], axis=-1) if spec.m else 1.0
    rhs = t ** (-spec.m) * prod * g
    pos = rhs > 0
    rel = np.where(pos, (k - rhs) / np.where(pos, rhs, 1.0), np.where(k > 0, np.inf, 0.0))
    viol = float(np.max(rel))
    return VerificationReport("kernel-domination", viol, tol, fingerprint(spec),
                              {"samples": int(np.size(rel)), "max_ratio": float(np.max(np.where(pos, k / np.where(pos, rhs, 1.0), 0.0)))})


def _kernel_bcast(t, x, y, spec):
    out = 1.0
    for i in range(spec.N):
        out = out * kernel_1d(t, x[..., i], y[..., i], spec.is_dirichlet(i))
    return out


def envelope(x: np.ndarray, spec: DomainSpec, t: float) -> np.ndarray:
    """x_1...x_m (t + |x|^2)^{-(gamma+2m)/2}."""
    r2 = np.sum(x * x, axis=-1)
    head = np.prod(x[..., :spec.m], axis=-1) if spec.m else 1.0
    return head * (t + r2) ** (-(spec.gamma + 2 * spec.m) / 2)


def measure_envelope_constant(f, spec: DomainSpec, grid: SectorGrid, times: Sequence[float],
                              norm: float, shift: float = 0.0) -> np.ndarray:
    """Per-time max of |e^{t Delta_m} f| / (envelope(shift + t) * norm) over interior nodes."""
    pts = grid.points()
    mask = grid.interior_mask(edge_layer=0.0).ravel()
    out = []
    for t in times:
        u = apply_semigroup(f, t, spec, grid).values.ravel()
        env = envelope(pts, spec, shift + t) * norm
        out.append(float(np.max(np.abs(u[mask]) / env[mask])))
    return np.array(out)


def kernel_identity_check(times: Sequence[float], points, spec: DomainSpec,
                          tol: float = 1e-6) -> VerificationReport:
    """Quadrature of K_t(x, .) against 1 and against y_1...y_m.

    The first must equal I_m(t, x) and the second x_1...x_m; the violation
    is the largest relative error over all times and points.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = spec.m
    head = lambda y: np.prod(y[..., :m], axis=-1) if m else np.ones(y.shape[:-1])
    mass_err, ident_err = 0.0, 0.0
    for t in times:
        for x in points:
            mass = kernel_quadrature(t, x, spec)
            ref = float(erf_product(t, x, spec))
            mass_err = max(mass_err, abs(mass - ref) / ref)
            ident = kernel_quadrature(t, x, spec, g=head)
            ref = float(head(x))
            ident_err = max(ident_err, abs(ident - ref) / abs(ref))
    return VerificationReport("kernel_identity", max(mass_err, ident_err), tol,
                              fingerprint(spec, tuple(times), points.tobytes()),
                              {"mass_error": mass_err, "identity_error": ident_err,
                               "times": [float(t) for t in times], "points": int(points.shape[0])})


def closed_form_check(t: float, spec: DomainSpec, grid: SectorGrid,
                      tol: float = 1e-6) -> VerificationReport:
    """e^{t Delta_m} 1 on the grid against the erf product, relative error."""
    got = apply_semigroup(AntisymConstant(A=1.0), t, spec, grid).values.ravel()
    ref = erf_product(t, grid.points(), spec)
    pos = ref > 0
    rel = float(np.max(np.abs(got[pos] - ref[pos]) / ref[pos]))
    return VerificationReport("closed_form", rel, tol, fingerprint(spec, t, grid.fingerprint()),
                              {"t": float(t), "nodes": int(np.count_nonzero(pos))})
