"""Bracketed one-dimensional maximization on a grid followed by golden-section."""

from __future__ import annotations

import math

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(fn, a: float, b: float, rtol: float = 1e-8, maxiter: int = 200):
    """Maximize a unimodal ``fn`` on ``[a, b]``; returns ``(x, fn(x))``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(maxiter):
        if abs(b - a) <= rtol * max(abs(a), abs(b), 1e-300):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    return (c, fc) if fc >= fd else (d, fd)


def grid_then_golden(fn_vec, fn, grid: np.ndarray, rtol: float = 1e-8):
    """Locate the best point of ``grid`` then refine between its neighbours.

    ``fn_vec`` evaluates the objective on an array, ``fn`` on a scalar.  The
    grid pass guards against non-unimodal objectives; the refinement only
    assumes unimodality between adjacent grid points.
    """
    vals = fn_vec(grid)
    i = int(np.nanargmax(vals))
    best_x, best = float(grid[i]), float(vals[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        x, v = golden_max(fn, float(lo), float(hi), rtol=rtol)
        if v > best:
            best_x, best = x, v
    return best_x, best
