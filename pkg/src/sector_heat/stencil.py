"""Central finite-difference Laplacian applied pointwise to closed-form functions."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .exceptions import DomainError

# one-sided halves of the symmetric second-derivative stencils, offset 0..p
_SECOND_DIFF = {
    2: (-2.0, 1.0),
    4: (-5.0 / 2, 4.0 / 3, -1.0 / 12),
    6: (-49.0 / 18, 3.0 / 2, -3.0 / 20, 1.0 / 90),
}


def stencil_reach(order: int) -> int:
    if order not in _SECOND_DIFF:
        raise DomainError(f"stencil order must be one of {sorted(_SECOND_DIFF)}")
    return len(_SECOND_DIFF[order]) - 1


def fd_laplacian(func: Callable[[np.ndarray], np.ndarray], points: np.ndarray,
                 spacing: Sequence[float], order: int = 2) -> np.ndarray:
    """Sum over axes of the central second difference of ``func`` at ``points``.

    ``func`` maps an (n, N) array of points to n values.
    """
    stencil_reach(order)
    w = _SECOND_DIFF[order]
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[0])
    centre = func(points)
    for axis, h in enumerate(spacing):
        acc = w[0] * centre
        for k in range(1, len(w)):
            shift = np.zeros(points.shape[1])
            shift[axis] = k * h
            acc = acc + w[k] * (func(points + shift) + func(points - shift))
        out += acc / (h * h)
    return out
