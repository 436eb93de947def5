"""Sector geometry: domain parameters, tensor grids, sampled fields and
the reflection / antisymmetric-extension operators between the sector
{x_1 > 0, ..., x_m > 0} and R^N.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .exceptions import DomainError, GridCoverageError

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DomainSpec:
    """Ambient dimension ``N``, number of Dirichlet axes ``m``, weight
    exponent ``gamma`` and absorption exponent ``alpha``.

    ``m = 0`` is the free-space validation mode.
    """

    N: int
    m: int
    gamma: float
    alpha: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if int(self.m) != self.m or not 0 <= self.m <= self.N:
            raise DomainError(f"m must be an integer in [0, N], got {self.m}")
        if not 0.0 < self.gamma < self.N:
            raise DomainError(f"gamma must lie in (0, N), got {self.gamma}")
        if not self.alpha > 0.0 or not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be positive, got {self.alpha}")

    @property
    def critical_alpha(self) -> float:
        return 2.0 / (self.gamma + self.m)

    @property
    def homogeneity(self) -> float:
        """Scaling degree gamma + m of the singular profile (with sign -)."""
        return self.gamma + self.m

    @property
    def effective_dim(self) -> int:
        """Dimension N + 2m of the radial problem seen by x_1...x_m Q(|x|)."""
        return self.N + 2 * self.m

    def with_alpha(self, alpha: float) -> "DomainSpec":
        return DomainSpec(self.N, self.m, self.gamma, alpha)

    def is_dirichlet(self, axis: int) -> bool:
        """0-based axis index."""
        return axis < self.m


class AxisKind(str, enum.Enum):
    DIRICHLET = "dirichlet"
    FREE = "free"


@dataclass(frozen=True, eq=False)
class SectorGrid:
    """Tensor-product grid of the (truncated) sector.

    Use :meth:`uniform` for computational grids: Dirichlet axes are
    staggered (first node at h/2), free axes are symmetric about 0.
    :meth:`box` builds comparison windows that include the boundary.
    """

    coords: tuple
    kinds: tuple
    spacing: tuple

    def __post_init__(self):
        if len(self.coords) != len(self.kinds) or len(self.coords) != len(self.spacing):
            raise DomainError("coords, kinds and spacing must have one entry per axis")
        coords = []
        for x, kind, h in zip(self.coords, self.kinds, self.spacing):
            x = np.asarray(x, dtype=float)
            x.setflags(write=False)
            if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
                raise DomainError("axis coordinates must be a finite 1D array")
            if x.size > 1 and np.any(np.diff(x) <= 0):
                raise DomainError("axis coordinates must be strictly increasing")
            if not h > 0:
                raise DomainError("axis spacing must be positive")
            if AxisKind(kind) is AxisKind.DIRICHLET and x[0] < 0:
                raise DomainError("Dirichlet axis coordinates must be nonnegative")
            coords.append(x)
        object.__setattr__(self, "coords", tuple(coords))
        object.__setattr__(self, "kinds", tuple(AxisKind(k) for k in self.kinds))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))

    @classmethod
    def uniform(cls, spec: DomainSpec, h, R=20.0) -> "SectorGrid":
        """Staggered Dirichlet axes on (0, R], symmetric free axes on [-R, R]."""
        hs = np.broadcast_to(np.asarray(h, dtype=float), (spec.N,))
        Rs = np.broadcast_to(np.asarray(R, dtype=float), (spec.N,))
        coords, kinds = [], []
        for axis in range(spec.N):
            n = int(round(Rs[axis] / hs[axis]))
            if n < 2:
                raise DomainError("grid needs at least two cells per axis")
            if spec.is_dirichlet(axis):
                coords.append((np.arange(n) + 0.5) * hs[axis])
                kinds.append(AxisKind.DIRICHLET)
            else:
                coords.append(np.arange(-n, n + 1) * hs[axis])
                kinds.append(AxisKind.FREE)
        return cls(tuple(coords), tuple(kinds), tuple(hs))

    @classmethod
    def box(cls, spec: DomainSpec, upper=3.0, h=0.05, lower=0.0) -> "SectorGrid":
        """Closed box [lower, upper]^N (lower clipped to 0 on Dirichlet axes)."""
        coords, kinds = [], []
        for axis in range(spec.N):
            lo = max(lower, 0.0) if spec.is_dirichlet(axis) else lower
            n = int(round((upper - lo) / h))
            coords.append(lo + np.arange(n + 1) * (upper - lo) / n)
            kinds.append(AxisKind.DIRICHLET if spec.is_dirichlet(axis) else AxisKind.FREE)
        return cls(tuple(coords), tuple(kinds), tuple([h] * spec.N))

    @property
    def ndim(self) -> int:
        return len(self.coords)

    @property
    def shape(self) -> tuple:
        return tuple(x.size for x in self.coords)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def extent(self) -> tuple:
        """Truncation radius per axis (largest |coordinate|)."""
        return tuple(float(np.max(np.abs(x))) for x in self.coords)

    def mesh(self) -> tuple:
        return np.meshgrid(*self.coords, indexing="ij")

    def points(self) -> np.ndarray:
        """All nodes as an (size, N) array in C order."""
        return np.stack([c.ravel() for c in self.mesh()], axis=-1)

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.mesh()))

    def is_uniform(self) -> bool:
        return all(x.size < 3 or np.allclose(np.diff(x), h, rtol=1e-9, atol=0)
                   for x, h in zip(self.coords, self.spacing))

    def interior_mask(self, boundary_layer: float | None = None, edge_layer: float = 0.0) -> np.ndarray:
        """Nodes farther than ``boundary_layer`` (default one h) from the
        Dirichlet faces and farther than ``edge_layer`` from the truncation
        faces of the grid."""
        mask = np.ones(self.shape, dtype=bool)
        for axis, (x, kind, h) in enumerate(zip(self.coords, self.kinds, self.spacing)):
            keep = np.ones(x.size, dtype=bool)
            if kind is AxisKind.DIRICHLET:
                layer = h if boundary_layer is None else boundary_layer
                keep &= x > layer
                keep &= x <= x[-1] - edge_layer
            else:
                keep &= np.abs(x) <= min(abs(x[0]), abs(x[-1])) - edge_layer
            shape = [1] * self.ndim
            shape[axis] = x.size
            mask &= keep.reshape(shape)
        return mask

    def fingerprint(self) -> str:
        parts = [f"{k.value[0]}{x.size}:{x[0]:.6g}:{x[-1]:.6g}" for x, k in zip(self.coords, self.kinds)]
        return "grid[" + ",".join(parts) + "]"


@dataclass(frozen=True, eq=False)
class Field:
    """Function sampled on a grid at a given time.

    ``tail`` carries a bound on quadrature/truncation error accumulated by
    the operations that produced the field.
    """

    grid: SectorGrid
    values: np.ndarray
    time: float = 0.0
    tail: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.size:
            raise DomainError(f"field has {v.size} values for a grid of {self.grid.size} nodes")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        if self.time < 0:
            raise DomainError("field time must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def replace(self, values=None, time=None, tail=None) -> "Field":
        return Field(self.grid,
                     self.values if values is None else values,
                     self.time if time is None else time,
                     self.tail if tail is None else tail)

    def at(self, points: np.ndarray) -> np.ndarray:
        """Clamped cubic interpolation at arbitrary points of the closed sector.

        Dirichlet axes use the odd reflection across x_i = 0. Points outside
        the grid raise :class:`GridCoverageError`.
        """
        values, covered = interpolate(self, points)
        if not np.all(covered):
            raise GridCoverageError(f"{np.count_nonzero(~covered)} points lie outside the grid")
        return values


_GHOSTS = 16


def _padded(field: Field):
    """Odd-reflected ghost layers on Dirichlet axes, edge copies elsewhere."""
    v = field.values
    origin = []
    for axis, (x, kind) in enumerate(zip(field.grid.coords, field.grid.kinds)):
        g = min(_GHOSTS, x.size)
        if kind is AxisKind.DIRICHLET and abs(x[0] - 0.5 * field.grid.spacing[axis]) < 1e-9 * field.grid.spacing[axis]:
            ghost = -np.flip(np.take(v, np.arange(g), axis=axis), axis=axis)
            tail = np.repeat(np.take(v, [-1], axis=axis), 2, axis=axis)
            v = np.concatenate([ghost, v, tail], axis=axis)
            origin.append(x[0] - g * field.grid.spacing[axis])
        else:
            pad = [(0, 0)] * v.ndim
            pad[axis] = (2, 2)
            v = np.pad(v, pad, mode="edge")
            origin.append(x[0] - 2 * field.grid.spacing[axis])
    return v, np.array(origin)


def interpolate(field: Field, points: np.ndarray):
    """Return (values, covered) for clamped cubic interpolation of ``field``."""
    grid = field.grid
    if not grid.is_uniform():
        raise DomainError("interpolation needs a uniform grid")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != grid.ndim:
        raise DomainError("points must have one column per axis")
    covered = np.ones(pts.shape[0], dtype=bool)
    for axis, (x, kind, h) in enumerate(zip(grid.coords, grid.kinds, grid.spacing)):
        lo = 0.0 if (kind is AxisKind.DIRICHLET and x[0] <= h) else x[0]
        covered &= (pts[:, axis] >= lo - 1e-12 * h) & (pts[:, axis] <= x[-1] + 1e-12 * h)
    padded, origin = _padded(field)
    h = np.array(grid.spacing)
    idx = (pts - origin) / h
    out = ndimage.map_coordinates(padded, idx.T, order=3, mode="nearest", prefilter=True)
    # clamp to the 4^N stencil range so no new extrema appear
    base = np.floor(idx).astype(int) - 1
    base = np.clip(base, 0, np.array(padded.shape) - 4)
    win = sliding_window_view(padded, (4,) * grid.ndim)
    axes = tuple(range(grid.ndim, 2 * grid.ndim))
    lo_tab = win.min(axis=axes)
    hi_tab = win.max(axis=axes)
    sel = tuple(base.T)
    out = np.clip(out, lo_tab[sel], hi_tab[sel])
    for axis, kind in enumerate(grid.kinds):
        if kind is AxisKind.DIRICHLET:
            out = np.where(pts[:, axis] == 0.0, 0.0, out)
    out = np.where(covered, out, 0.0)
    return out, covered


def _check_axis(i: int, N: int | None = None):
    if int(i) != i or i < 1 or (N is not None and i > N):
        raise DomainError(f"axis index must be in [1, N], got {i}")


def reflect(f: Evaluator, i: int, N: int | None = None) -> Evaluator:
    """T_i f(x) = f(x_1, ..., -x_i, ..., x_N) (``i`` is 1-based)."""
    _check_axis(i, N)

    def reflected(x):
        x = np.array(x, dtype=float, copy=True)
        if x.shape[-1] < i:
            raise DomainError(f"axis index {i} exceeds point dimension {x.shape[-1]}")
        x[..., i - 1] = -x[..., i - 1]
        return f(x)

    return reflected


def antisym_extend(psi: Evaluator, spec: DomainSpec) -> Evaluator:
    """Odd extension in x_1..x_m of a function defined on the open sector.

    Points with some x_i = 0 (i <= m) map to 0.
    """
    m = spec.m

    def extended(x):
        x = np.asarray(x, dtype=float)
        if m == 0:
            return np.asarray(psi(x), dtype=float)
        head = x[..., :m]
        sign = np.prod(np.sign(head), axis=-1)
        y = np.concatenate([np.abs(head), x[..., m:]], axis=-1)
        on_boundary = sign == 0
        safe = np.where(on_boundary[..., None], 1.0, y) if y.ndim > 1 else (np.ones_like(y) if on_boundary else y)
        val = sign * np.asarray(psi(safe), dtype=float)
        return np.where(on_boundary, 0.0, val)

    return extended
