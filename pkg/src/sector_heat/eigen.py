"""Ground Dirichlet eigenvalue of the unit sector-ball {x in the sector, |x| < 1}
and the Bessel-zero oracle for the unit ball in R^{N+2m}.

The sector-ball eigenfunction is x_1...x_m Q(|x|) with Q the radial
ground state of the ball in dimension N + 2m, so both eigenvalues agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .domain import AxisKind, DomainSpec, Field, SectorGrid
from .exceptions import DomainError, NumericalError
from .report import VerificationReport, fingerprint
from .special import bessel_j, bessel_j_scaled
from .stencil import fd_laplacian


@dataclass
class EigenResult:
    eigenvalue: float
    field: Field
    h: float
    iterations: int
    history: list


def _sector_ball_grid(spec: DomainSpec, h: float) -> SectorGrid:
    coords, kinds = [], []
    n = int(math.floor(1.0 / h))
    for axis in range(spec.N):
        if spec.is_dirichlet(axis):
            x = (np.arange(n + 1) + 0.5) * h
            coords.append(x[x < 1.0])
            kinds.append(AxisKind.DIRICHLET)
        else:
            x = np.arange(-n, n + 1) * h
            coords.append(x[np.abs(x) < 1.0])
            kinds.append(AxisKind.FREE)
    return SectorGrid(tuple(coords), tuple(kinds), tuple([h] * spec.N))


def _assemble(grid: SectorGrid, inside: np.ndarray) -> sparse.csc_matrix:
    """-Laplacian on the nodes inside the ball.

    Across x_i = 0 on a Dirichlet axis the ghost value is -u (odd
    reflection on the staggered grid). Where a neighbour leaves the ball
    the Shortley-Weller formula uses the true distance to the sphere.
    """
    h = grid.spacing[0]
    pts = grid.points()
    shape = grid.shape
    idx = -np.ones(grid.size, dtype=np.int64)
    flat_in = inside.ravel()
    idx[flat_in] = np.arange(np.count_nonzero(flat_in))
    rows, cols, vals = [], [], []
    node = np.flatnonzero(flat_in)
    P = pts[node]
    r2 = np.sum(P * P, axis=1)
    diag = np.zeros(node.size)
    multi = np.array(np.unravel_index(node, shape))
    for axis in range(grid.ndim):
        xa = P[:, axis]
        # distance to the sphere along +/- axis
        disc = np.sqrt(np.maximum(xa * xa + 1.0 - r2, 0.0))
        dist = {+1: -xa + disc, -1: xa + disc}
        nbr, hs = {}, {}
        for sgn in (+1, -1):
            j = multi.copy()
            j[axis] += sgn
            valid = (j[axis] >= 0) & (j[axis] < shape[axis])
            flat = np.full(node.size, -1, dtype=np.int64)
            flat[valid] = np.ravel_multi_index(j[:, valid], shape)
            in_ball = np.zeros(node.size, dtype=bool)
            in_ball[valid] = flat_in[flat[valid]]
            ghost = (sgn == -1) & (grid.kinds[axis] is AxisKind.DIRICHLET) & (multi[axis] == 0)
            hs[sgn] = np.where(in_ball | ghost, h, np.minimum(dist[sgn], h))
            nbr[sgn] = (np.where(in_ball, idx[np.maximum(flat, 0)], -1), ghost)
        hl, hr = hs[-1], hs[+1]
        # u'' ~ 2/(hl+hr) [ (u_r - u)/hr - (u - u_l)/hl ]
        cl = 2.0 / (hl * (hl + hr))
        cr = 2.0 / (hr * (hl + hr))
        diag += cl + cr
        for sgn, c in ((-1, cl), (+1, cr)):
            target, ghost = nbr[sgn]
            # ghost node carries -u: fold into the diagonal
            diag += np.where(ghost, c, 0.0)
            ok = target >= 0
            rows.append(np.arange(node.size)[ok])
            cols.append(target[ok])
            vals.append(-c[ok])
    rows.append(np.arange(node.size))
    cols.append(np.arange(node.size))
    vals.append(diag)
    n = node.size
    return sparse.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n))


def sector_ball_eigen(spec: DomainSpec, h: float, rtol: float = 1e-8,
                      maxiter: int = 500) -> EigenResult:
    """Smallest eigenvalue of -Laplacian on the unit sector-ball by inverse iteration."""
    if not 0 < h <= 0.1:
        raise DomainError("h must lie in (0, 0.1] to put at least 10 nodes per axis in the ball")
    grid = _sector_ball_grid(spec, h)
    inside = grid.radius() < 1.0
    A = _assemble(grid, inside)
    lu = splu(A)
    x = np.ones(A.shape[0])
    lam_old, history = None, []
    for it in range(1, maxiter + 1):
        y = lu.solve(x)
        lam = float(x @ y) / float(y @ y)
        history.append(lam)
        x = y / np.linalg.norm(y)
        if lam_old is not None and abs(lam - lam_old) <= rtol * abs(lam):
            break
        lam_old = lam
    else:
        raise NumericalError("inverse iteration did not converge")
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    vals = np.zeros(grid.size)
    vals[inside.ravel()] = x / np.max(x)
    return EigenResult(lam, Field(grid, vals.reshape(grid.shape)), h, it, history)


# ---------------------------------------------------------------- Bessel oracle

def bessel_zero(nu: float) -> float:
    """First positive zero of J_nu, bracketed in [nu + 1, nu + pi + 2]."""
    a, b = nu + 1.0, nu + math.pi + 2.0
    f = lambda r: float(bessel_j(nu, r))
    if f(a) * f(b) > 0:
        raise NumericalError(f"no sign change of J_{nu} on [{a}, {b}]")
    return brentq(f, a, b, xtol=1e-14, rtol=1e-15, maxiter=200)


def bessel_oracle(d: int) -> float:
    """Ground Dirichlet eigenvalue of the unit ball in R^d: j_{nu,1}^2, nu = (d-2)/2."""
    if int(d) != d or d < 1:
        raise DomainError("dimension must be a positive integer")
    return bessel_zero(0.5 * (d - 2)) ** 2


def radial_profile(spec: DomainSpec) -> tuple:
    """(Q, Lambda) with Q(r) = (j r)^{-nu} J_nu(j r), the radial ground state in R^{N+2m}."""
    d = spec.effective_dim
    nu = 0.5 * (d - 2)
    j = bessel_zero(nu)
    return (lambda r: bessel_j_scaled(nu, j * np.asarray(r, dtype=float))), j * j


def separable_eigen_check(spec: DomainSpec, grid: SectorGrid,
                          Q: Optional[Callable] = None, Lam: Optional[float] = None,
                          annulus: tuple = (0.2, 0.8), tol: float = 1e-3) -> VerificationReport:
    """Relative residual max |Delta_h H + Lambda H| / max |Lambda H| for H = x_1...x_m Q(|x|)
    on the nodes of ``grid`` inside the annulus."""
    if Q is None or Lam is None:
        Q0, L0 = radial_profile(spec)
        Q = Q if Q is not None else Q0
        Lam = Lam if Lam is not None else L0
    m = spec.m

    def H(x):
        r = np.sqrt(np.sum(x * x, axis=1))
        return np.prod(x[:, :m], axis=1) * Q(r)

    pts = grid.points()
    r = np.sqrt(np.sum(pts * pts, axis=1))
    pts = pts[(r >= annulus[0]) & (r <= annulus[1])]
    if pts.shape[0] < 10:
        raise DomainError("annulus is under-resolved by the grid")
    if annulus[0] <= max(grid.spacing) * math.sqrt(spec.N):
        raise DomainError("annulus stencil touches the origin")
    hv = H(pts)
    res = fd_laplacian(H, pts, grid.spacing, 2) + Lam * hv
    rel = float(np.max(np.abs(res)) / (abs(Lam) * np.max(np.abs(hv))))
    return VerificationReport("separable_eigen", rel, tol, fingerprint(spec, grid.fingerprint()),
                              {"eigenvalue": Lam, "nodes": int(pts.shape[0])})
