"""Hand-written special functions used as independent oracles.

``erf`` uses the positive-term Maclaurin series for small arguments and
the Laplace continued fraction for erfc at large ones. ``bessel_j`` uses
the ascending series, switching to the Hankel asymptotic expansion for
large arguments.
"""
from __future__ import annotations

import math

import numpy as np

_SQRT_PI = math.sqrt(math.pi)
_ERF_SWITCH = 3.0
_SERIES_TERMS = 80
_CF_DEPTH = 120


def _erf_series(x: np.ndarray) -> np.ndarray:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (1*3*...*(2n+1))
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for n in range(1, _SERIES_TERMS):
        term = term * (2.0 * x2) / (2 * n + 1)
        total = total + term
    return 2.0 / _SQRT_PI * np.exp(-x2) * total


def _erfc_cf(x: np.ndarray) -> np.ndarray:
    # erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    f = x.copy()
    for k in range(_CF_DEPTH, 0, -1):
        f = x + (0.5 * k) / f
    return np.exp(-x * x) / (_SQRT_PI * f)


def erf(x):
    """Error function, accurate to a few ulps over the real line."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < _ERF_SWITCH
    out = np.empty_like(ax)
    if np.any(small):
        out[small] = _erf_series(ax[small])
    if np.any(~small):
        out[~small] = 1.0 - _erfc_cf(ax[~small])
    out = np.sign(x) * out
    return out if out.ndim else float(out)


def erfc(x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    big = ax >= 2.0
    out = np.where(big, 0.0, 1.0 - _erf_series(np.where(big, 0.0, ax)))
    if np.any(big):
        out[big] = _erfc_cf(ax[big])
    out = np.where(x < 0, 2.0 - out, out)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- Bessel J

_HANKEL_SWITCH = 12.0


def _j_series_scaled(nu: float, x: np.ndarray) -> np.ndarray:
    """x^{-nu} J_nu(x) by the ascending series (finite at x = 0)."""
    q = 0.25 * x * x
    term = np.full_like(x, 0.5 ** nu / math.gamma(nu + 1.0))
    total = term.copy()
    kmax = int(np.max(x, initial=0.0)) + 40
    for k in range(1, kmax):
        term = -term * q / (k * (k + nu))
        total = total + term
    return total


def _j_hankel(nu: float, x: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    qq = np.zeros_like(x)
    term = np.ones_like(x)
    # P ~ sum (-1)^k a_{2k}/x^{2k}, Q ~ sum (-1)^k a_{2k+1}/x^{2k+1}
    for k in range(1, 40):
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        # stop each lane at its smallest term (the series is asymptotic)
        grow = np.abs(nxt) > np.abs(term)
        if k > 2:
            nxt = np.where(grow | (term == 0), 0.0, nxt)
        term = nxt
        if k % 2 == 1:
            qq = qq + (1 if (k // 2) % 2 == 0 else -1) * term
        else:
            p = p + (1 if (k // 2) % 2 == 0 else -1) * term
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - qq * np.sin(chi))


def bessel_j(nu: float, x):
    """J_nu(x) for real nu >= 0 and x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j needs x >= 0")
    out = np.empty_like(x)
    small = x < _HANKEL_SWITCH
    if np.any(small):
        xs = x[small]
        out[small] = _j_series_scaled(nu, xs) * xs ** nu
    if np.any(~small):
        out[~small] = _j_hankel(nu, x[~small])
    return out if out.ndim else float(out)


def bessel_j_scaled(nu: float, x):
    """x^{-nu} J_nu(x); smooth at the origin."""
    x = np.asarray(x, dtype=float)
    if np.any(x >= _HANKEL_SWITCH):
        raise ValueError("scaled series restricted to x < 12")
    out = _j_series_scaled(nu, x)
    return out if out.ndim else float(out)
