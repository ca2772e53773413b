"""Kantorovich distance W1 by exact linear programming, relative entropy,
and the transport-entropy route to the subgaussian constant.

``W1(mu, nu)`` is solved with the transportation simplex (the network simplex
on the bipartite supply/demand graph) using Bland's rule for both entering
and leaving cells.  The optimal basis yields dual potentials; their
c-transform is a 1-Lipschitz Kantorovich potential phi with
``W1 = sum phi (nu1 - nu2)``, which serves as the duality certificate.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import SUBGAUSSIAN_RESTRICTION_CONSTANT, log_e_over, popoviciu_upper
from .lipschitz import VERTEX_ENUM_MAX_POINTS, lipschitz_vertices
from .reports import BoundEstimate, CheckReport
from .space import FiniteMetricProbabilitySpace, as_mask, restricted_weights

MARGINAL_TOL = 1e-9
GRID_ORACLE_MAX_POINTS = 4


class MarginalError(ValueError):
    """Measures that are not probability vectors on the same space."""


class SupportError(ValueError):
    """A measure charges points outside the required support."""


@dataclass
class TransportPlan:
    """Optimal coupling with its Kantorovich potential and duality gap."""

    plan: np.ndarray
    value: float
    potential: np.ndarray
    gap: float
    pivots: int = 0

    def to_csv(self, path=None) -> str:
        rows = [(i, j, self.plan[i, j]) for i, j in zip(*np.nonzero(self.plan))]
        lines = ["i,j,mass"] + [f"{i},{j},{m:.17g}" for i, j, m in rows]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _probability(nu, k, name):
    v = np.asarray(nu, dtype=float).reshape(-1)
    if v.size != k:
        raise MarginalError(f"{name} has {v.size} entries, space has {k} points")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise MarginalError(f"{name} must be a nonnegative finite vector")
    total = math.fsum(v.tolist())
    if abs(total - 1.0) > MARGINAL_TOL:
        raise MarginalError(f"{name} sums to {total!r}, not 1")
    return v / total


def _northwest_corner(a, b):
    m, n = a.size, b.size
    flow = np.zeros((m, n))
    basis = []
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while True:
        x = min(ra[i], rb[j])
        flow[i, j] = x
        basis.append((i, j))
        ra[i] -= x
        rb[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1 or (i < m - 1 and ra[i] <= rb[j]):
            i += 1
        else:
            j += 1
    return flow, basis


def _potentials(cost, basis, m, n):
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    rows = [[] for _ in range(m)]
    cols = [[] for _ in range(n)]
    for i, j in basis:
        rows[i].append(j)
        cols[j].append(i)
    u[0] = 0.0
    queue = deque([("r", 0)])
    while queue:
        side, x = queue.popleft()
        if side == "r":
            for j in rows[x]:
                if np.isnan(v[j]):
                    v[j] = cost[x, j] - u[x]
                    queue.append(("c", j))
        else:
            for i in cols[x]:
                if np.isnan(u[i]):
                    u[i] = cost[i, x] - v[x]
                    queue.append(("r", i))
    return u, v, rows, cols


def _tree_path(rows, cols, start_col, end_row):
    """Basis cells on the tree path from column ``start_col`` to row ``end_row``."""
    prev = {("c", start_col): None}
    queue = deque([("c", start_col)])
    while queue:
        node = queue.popleft()
        if node == ("r", end_row):
            break
        side, x = node
        nbrs = [("r", i) for i in cols[x]] if side == "c" else [("c", j) for j in rows[x]]
        for nb in nbrs:
            if nb not in prev:
                prev[nb] = node
                queue.append(nb)
    cells = []
    node = ("r", end_row)
    while prev[node] is not None:
        p = prev[node]
        cells.append((node[1], p[1]) if node[0] == "r" else (p[1], node[1]))
        node = p
    cells.reverse()
    return cells


def transportation_simplex(a, b, cost, max_pivots: int = 100_000):
    """Solve min <cost, pi> over couplings of ``a`` and ``b``.

    Returns ``(flow, u, v, pivots)`` with optimal dual potentials satisfying
    ``u_i + v_j <= cost_ij`` and equality on the final basis.
    """
    m, n = a.size, b.size
    flow, basis = _northwest_corner(a, b)
    tol = 1e-12 * max(float(np.abs(cost).max()), 1.0)
    is_basic = np.zeros((m, n), dtype=bool)
    for cell in basis:
        is_basic[cell] = True
    for pivots in range(max_pivots):
        u, v, rows, cols = _potentials(cost, basis, m, n)
        reduced = cost - u[:, None] - v[None, :]
        reduced[is_basic] = 0.0
        negative = np.flatnonzero(reduced.ravel() < -tol)
        if negative.size == 0:
            return flow, u, v, pivots
        i, j = divmod(int(negative[0]), n)
        path = _tree_path(rows, cols, j, i)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min(c for c in minus if flow[c] == theta)
        for c in plus:
            flow[c] += theta
        for c in minus:
            flow[c] -= theta
        flow[i, j] += theta
        flow[leaving] = 0.0
        basis.remove(leaving)
        basis.append((i, j))
        is_basic[leaving] = False
        is_basic[i, j] = True
    raise RuntimeError("transportation simplex did not terminate")


def w1(space: FiniteMetricProbabilitySpace, nu1, nu2) -> TransportPlan:
    """Kantorovich distance between two probability vectors on ``space``."""
    k = space.size
    a = _probability(nu1, k, "nu1")
    b = _probability(nu2, k, "nu2")
    d = np.asarray(space.distance, dtype=float)
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    cost = d[np.ix_(rows, cols)]
    flow, _, v, pivots = transportation_simplex(a[rows], b[cols], cost)
    plan = np.zeros((k, k))
    plan[np.ix_(rows, cols)] = flow
    value = math.fsum((flow * cost).ravel().tolist())
    # c-transform of the column potentials: 1-Lipschitz on the whole space
    phi = (d[:, cols] - v[None, :]).min(axis=1)
    phi = phi - phi.min()
    dual = math.fsum((phi * (a - b)).tolist())
    return TransportPlan(plan, value, phi, abs(value - dual), pivots)


def _entropy_terms(nu, mu):
    """mu * h(nu / mu) with h(r) = r log r - r + 1, stable near r = 1."""
    r = nu / mu
    delta = r - 1.0
    out = np.empty_like(r)
    small = np.abs(delta) < 1e-2
    ds = delta[small]
    acc = np.zeros_like(ds)
    for n in range(14, 1, -1):
        acc = acc * ds + (-1.0) ** n / (n * (n - 1))
    out[small] = acc * ds * ds
    rb = r[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~small] = np.where(rb > 0, rb * np.log(rb) - rb + 1.0, 1.0)
    return mu * out


def absolutely_continuous(nu, mu) -> bool:
    nu = np.asarray(nu, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return not bool(np.any((nu > 0) & (mu <= 0)))


def kl_divergence(nu, mu) -> float:
    """Relative entropy D(nu || mu) = sum nu log(nu / mu), with 0 log 0 = 0.

    Returns ``math.inf`` when nu charges a point of zero mu-mass.
    """
    nu = np.asarray(nu, dtype=float).reshape(-1)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if not absolutely_continuous(nu, mu):
        return math.inf
    keep = mu > 0
    # for probability vectors sum nu log(nu/mu) = sum mu h(nu/mu); the latter
    # has nonnegative terms and no cancellation as nu -> mu
    return math.fsum(_entropy_terms(nu[keep], mu[keep]).tolist())


class _Ratio:
    """nu -> W1(mu, nu)^2 / (2 D(nu || mu)) on the support of mu."""

    def __init__(self, space, skip=1e-10):
        self.mu = space.weights
        self.support = np.flatnonzero(self.mu > 0)
        self.sub = space.sub(self.support).with_weights(self.mu[self.support])
        self.m = self.sub.weights
        self.skip = skip
        self.solves = 0

    def __call__(self, nu):
        D = kl_divergence(nu, self.m)
        if not D >= self.skip:
            return -1.0, 0.0, D, None
        plan = w1(self.sub, self.m, nu)
        self.solves += 1
        W = plan.value
        return W * W / (2.0 * D), W, D, plan.potential

    def ascend(self, nu, steps):
        R, W, D, phi = self(nu)
        if phi is None:
            return nu, R
        eta = None
        for _ in range(steps):
            lognu = np.log(np.maximum(nu, 1e-300))
            grad = -(W / D) * phi - (W * W / (2 * D * D)) * (lognu - np.log(self.m))
            grad -= grad @ nu
            scale = float(np.abs(grad).max())
            if not 0 < scale < math.inf:
                break
            if eta is None:
                eta = 0.5 / scale
            eta = min(eta, 20.0 / scale)
            while eta * scale > 1e-12:
                # multiplicative update as a softmax, so it cannot overflow
                logits = lognu + eta * grad
                trial = np.exp(logits - logits.max())
                trial /= trial.sum()
                R2, W2, D2, phi2 = self(trial)
                if phi2 is not None and R2 > R:
                    nu, R, W, D, phi = trial, R2, W2, D2, phi2
                    eta *= 1.5
                    break
                eta *= 0.5
            else:
                break
        return nu, R


def _simplex_grid(k, divisions):
    for bars in itertools.combinations(range(divisions + k - 1), k - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(divisions + k - 2 - prev)
        yield out


def transport_grid_oracle(space: FiniteMetricProbabilitySpace, step: float = 0.005,
                          chunk: int = 200_000):
    """Max of W1^2/(2D) over a simplex grid, W1 via its Kantorovich dual.

    W1(mu, nu) = max over vertices v of the 1-Lipschitz polytope of
    <v, mu - nu>, which vectorizes over the grid.  Returns ``(value, nu)``.
    """
    mu_full = space.weights
    supp = np.flatnonzero(mu_full > 0)
    mu = mu_full[supp]
    k = supp.size
    if k > GRID_ORACLE_MAX_POINTS:
        raise ValueError(f"grid oracle limited to {GRID_ORACLE_MAX_POINTS} points")
    if k == 1:
        return 0.0, np.ones(1)
    verts = lipschitz_vertices(np.asarray(space.distance)[np.ix_(supp, supp)])
    divisions = int(round(1.0 / step))
    grid = np.array(list(_simplex_grid(k, divisions)), dtype=float) / divisions
    best, arg = -1.0, None
    for s in range(0, grid.shape[0], chunk):
        nu = grid[s:s + chunk]
        W = ((mu[None, :] - nu) @ verts.T).max(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(nu > 0, nu * np.log(nu / mu[None, :]), 0.0)
        D = terms.sum(axis=1)
        ok = D >= 1e-10
        if not ok.any():
            continue
        ratio = np.where(ok, W * W / (2.0 * np.where(ok, D, 1.0)), -1.0)
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best, arg = float(ratio[i]), nu[i].copy()
    return best, arg


def sigma_transport(space: FiniteMetricProbabilitySpace, restarts: int = 16, seed: int = 0,
                    steps: int = 60, grid_oracle: bool = True,
                    grid_step: float = 0.005) -> BoundEstimate:
    """Estimate sigma^2 = sup_nu W1(mu, nu)^2 / (2 D(nu || mu)).

    Lower bound: best ratio over point masses, two-point mixtures and
    exponentiated-gradient (mirror) ascent on the simplex, every value
    evaluated with an exact LP.  The ascent is seeded at mu tilted by +-1e-3
    along the top variance direction, since the sup may only be approached
    as nu -> mu.  On spaces with at most four points the simplex-grid oracle
    is also run and reported.  Upper bound: diam^2 / 4.
    """
    if space.size == 1 or np.count_nonzero(space.weights) == 1:
        return BoundEstimate(0.0, 0.0, space.weights.copy(), "singleton", "singleton")
    from .constants import spread_estimate

    ratio = _Ratio(space)
    m = ratio.m
    k = m.size
    d = np.asarray(ratio.sub.distance)
    best = (-1.0, None, "")

    def offer(val, nu, method):
        nonlocal best
        if val > best[0]:
            best = (val, nu, method)

    starts = []
    for x in range(k):
        delta = np.zeros(k)
        delta[x] = 1.0
        W = float(m @ d[x])
        D = -math.log(m[x])
        offer(W * W / (2 * D), delta, "point-mass")
        starts.append((W * W / (2 * D), 0.9 * delta + 0.1 * m))
    pairs = list(itertools.combinations(range(k), 2))
    if len(pairs) > 64:
        rng = np.random.default_rng([seed, 10**6])
        pairs = [pairs[i] for i in rng.choice(len(pairs), 64, replace=False)]
    for x, y in pairs:
        for q in (0.1, 0.3, 0.5, 0.7, 0.9):
            nu = np.zeros(k)
            nu[x], nu[y] = q, 1.0 - q
            val = ratio(nu)[0]
            offer(val, nu, "two-point-mixture")
            starts.append((val, 0.9 * nu + 0.1 * m))
    witness = spread_estimate(ratio.sub, restarts=4, seed=seed).witness
    top = witness / max(float(np.abs(witness).max()), 1e-300)
    seeds = [m * np.exp(s * 1e-3 * top) for s in (1.0, -1.0)]
    seeds = [s / s.sum() for s in seeds]
    for nu in seeds:
        val = ratio(nu)[0]
        offer(val, nu, "tilted-mu")
    starts.sort(key=lambda item: -item[0])
    runs = seeds + [nu for _, nu in starts[:max(restarts // 2, 1)]]
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        runs.append(rng.dirichlet(np.ones(k)))
    for nu in runs:
        nu, val = ratio.ascend(nu, steps)
        offer(val, nu, "mirror-ascent")
    lp_lower, nu_best, method = best
    diagnostics = {"lp_route": lp_lower, "lp_solves": ratio.solves}
    if grid_oracle and k <= GRID_ORACLE_MAX_POINTS:
        g_val, g_nu = transport_grid_oracle(ratio.sub, grid_step)
        diagnostics["grid_oracle"] = g_val
        if g_val > lp_lower:
            lp_lower, nu_best, method = g_val, g_nu, "grid-oracle"
    full = np.zeros(space.size)
    full[ratio.support] = nu_best
    upper = max(popoviciu_upper(space), lp_lower)
    return BoundEstimate(lp_lower, upper, full, method, "hoeffding-diam", diagnostics)


def check_cor44(space: FiniteMetricProbabilitySpace, mask, nu,
                c: float = SUBGAUSSIAN_RESTRICTION_CONSTANT, sigma2=None,
                identity_tol: float = 1e-12) -> CheckReport:
    """Check W1(mu_A, nu)^2 <= c sigma^2(mu) log(e/mu(A)) D(nu || mu_A).

    Also verifies D(nu || mu_A) = log mu(A) + D(nu || mu) for nu supported on A;
    the check fails if the identity residual exceeds ``identity_tol``.
    """
    from .constants import trusted_sigma2

    mask = as_mask(mask, space.size)
    nu = _probability(nu, space.size, "nu")
    if np.any(nu[~mask] > 0):
        raise SupportError("nu must be supported on A")
    mu_a, mass = restricted_weights(space, mask)
    if sigma2 is None:
        sigma2, source = trusted_sigma2(space)
    else:
        source = "caller"
    plan = w1(space, mu_a, nu)
    d_a = kl_divergence(nu, mu_a)
    d_full = kl_divergence(nu, space.weights)
    residual = abs(d_a - (math.log(mass) + d_full))
    lhs = plan.value ** 2
    rhs = c * sigma2 * log_e_over(mass) * d_a
    report = CheckReport.compare("transport-entropy-restricted", lhs, rhs, c, 0.0,
                                 witness="nu supported on A", mass=mass, sigma2_mu=sigma2,
                                 sigma2_source=source, kl_restricted=d_a, kl_full=d_full,
                                 identity_residual=residual, duality_gap=plan.gap)
    if residual > identity_tol:
        report.passed = False
        report.status = "fail"
    return report
