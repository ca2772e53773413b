"""Lipschitz seminorms, McShane-type extension, symmetrized psi norms.

Also enumerates the vertices of the polytope of 1-Lipschitz functions on a
small space (normalized by ``f[0] = 0``).  Every convex functional of f
(variance, the Laplace-transform functional sigma_f^2) attains its maximum
over 1-Lipschitz functions at one of these vertices.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import logsumexp

from .orlicz import LOG2, _solve_psi, psi_norm
from .space import FiniteMetricProbabilitySpace, SpaceError, as_mask

SYMMETRIZED_DENSE_MAX = 4_000_000
VERTEX_ENUM_MAX_POINTS = 6


def lip_seminorm(values, space: FiniteMetricProbabilitySpace) -> float:
    """max over pairs x != y of |f(x) - f(y)| / d(x, y)."""
    f = np.asarray(values, dtype=float)
    if f.size != space.size:
        raise ValueError("field and space sizes differ")
    if space.size < 2:
        return 0.0
    d = space.distance
    off = ~np.eye(space.size, dtype=bool)
    return float((np.abs(f[:, None] - f[None, :])[off] / d[off]).max())


def mcshane_regularize(values, distance) -> np.ndarray:
    """Largest 1-Lipschitz minorant g(x) = min_j f_j + d(x, j)."""
    f = np.asarray(values, dtype=float)
    return (f[None, :] + distance).min(axis=1)


def kirszbraun_extend(values_on_a, space: FiniteMetricProbabilitySpace, mask) -> np.ndarray:
    """Extend f from A to the whole space preserving its Lipschitz constant.

    With L the seminorm of f on A, returns
    ``x -> L * min_{a in A} [f(a)/L + d(a, x)]``, and copies the values on A
    verbatim.  For L = 0 (a constant or a single point) the unscaled formula
    ``min_a f(a) + d(a, x)`` is used.
    """
    mask = as_mask(mask, space.size)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise SpaceError("cannot extend from an empty set")
    f = np.asarray(values_on_a, dtype=float)
    if f.size != idx.size:
        raise ValueError(f"expected {idx.size} values on A, got {f.size}")
    sub = space.sub(idx)
    lip = lip_seminorm(f, sub) or 1.0
    rows = np.stack([space.distances_from(int(a)) for a in idx])
    out = lip * (f[:, None] / lip + rows).min(axis=0)
    out[idx] = f
    return out


def _pair_log_integral(f, w, alpha, block=2048):
    """Streaming log int exp((|f(x)-f(y)|/r)^alpha) d(mu x mu)."""
    logw = np.log(w)

    def log_integral(r):
        parts = []
        for s in range(0, f.size, block):
            diff = np.abs(f[s:s + block, None] - f[None, :])
            parts.append(logsumexp((diff / r) ** alpha + logw[s:s + block, None] + logw[None, :]))
        return float(logsumexp(parts))

    return log_integral


def symmetrized_psi_norm(values, weights, alpha: float = 2.0) -> float:
    """psi_alpha norm of (x, y) -> f(x) - f(y) under mu x mu."""
    f = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    f, w = f[keep], w[keep]
    if f.size * f.size <= SYMMETRIZED_DENSE_MAX:
        diff = (f[:, None] - f[None, :]).ravel()
        return psi_norm(diff, np.outer(w, w).ravel(), alpha)
    spread = float(f.max() - f.min())
    if spread == 0:
        return 0.0
    hi = spread / LOG2 ** (1.0 / alpha)
    return _solve_psi(_pair_log_integral(f, w, alpha), hi / 2, hi, alpha)


def _prufer_trees(k: int):
    """Edge lists of all labelled trees on k vertices."""
    if k == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(k), repeat=k - 2):
        degree = [1] * k
        for x in seq:
            degree[x] += 1
        edges = []
        seq = list(seq)
        for x in seq:
            leaf = min(i for i in range(k) if degree[i] == 1)
            edges.append((leaf, x))
            degree[leaf] -= 1
            degree[x] -= 1
        u, v = [i for i in range(k) if degree[i] == 1]
        edges.append((u, v))
        yield edges


def lipschitz_vertices(distance, max_points: int = VERTEX_ENUM_MAX_POINTS) -> np.ndarray:
    """Vertices of {f : |f_i - f_j| <= d_ij, f_0 = 0}, one per row.

    A vertex is determined by k-1 tight constraints f_j - f_i = d_ij forming
    a spanning tree; all trees (Pruefer codes) and edge orientations are
    tried and infeasible solutions dropped.
    """
    d = np.asarray(distance, dtype=float)
    k = d.shape[0]
    if k > max_points:
        raise ValueError(f"vertex enumeration limited to {max_points} points, got {k}")
    if k == 1:
        return np.zeros((1, 1))
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k - 1))).T  # (k-1, 2^(k-1))
    tol = 1e-12 * max(float(d.max()), 1.0)
    found = []
    for edges in _prufer_trees(k):
        adj = {i: [] for i in range(k)}
        for e, (a, b) in enumerate(edges):
            adj[a].append((b, e, 1.0))
            adj[b].append((a, e, -1.0))
        # path incidence from the root 0: f_x = sum_e P[x, e] * s_e * d_e
        path = np.zeros((k, k - 1))
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y, e, orient in adj[x]:
                if y not in seen:
                    seen.add(y)
                    path[y] = path[x]
                    path[y, e] = orient
                    stack.append(y)
        lengths = np.array([d[a, b] for a, b in edges])
        f = path @ (lengths[:, None] * signs)  # (k, 2^(k-1))
        gap = np.abs(f[:, None, :] - f[None, :, :]) - d[:, :, None]
        ok = gap.max(axis=(0, 1)) <= tol
        if ok.any():
            found.append(f[:, ok].T)
    verts = np.concatenate(found, axis=0)
    scale = max(float(d.max()), 1.0)
    _, uniq = np.unique(np.round(verts / scale, 10), axis=0, return_index=True)
    return verts[np.sort(uniq)]


def distance_candidates(space: FiniteMetricProbabilitySpace) -> np.ndarray:
    """The 1-Lipschitz fields d(x0, .) for every base point x0, one per row."""
    return np.asarray(space.distance, dtype=float).copy()
