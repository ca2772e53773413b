"""Finite metric probability spaces: construction, validation, restriction.

A space is a triple (points, distance, weights).  Small spaces carry a dense
distance matrix; spaces built from coordinates (hypercubes, Monte Carlo
samples) keep the coordinates and materialize distances lazily, so that a
restriction to a handful of points never requires the full matrix.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

WEIGHT_SUM_REJECT = 1e-9
WEIGHT_SUM_TOL = 1e-12
FULL_VALIDATION_MAX = 512
DENSE_MAX_POINTS = 8192
HYPERCUBE_MAX_DIM = 16
PRODUCT_MAX_POINTS = 65536

_COORD_METRICS = ("euclidean", "ell1", "hamming")


class SpaceError(ValueError):
    """Invalid space data."""


class TriangleViolation(SpaceError):
    def __init__(self, triple, lhs, rhs):
        self.triple = triple
        i, j, m = triple
        super().__init__(
            f"triangle inequality violated at points {triple}: "
            f"d({i},{m})={lhs!r} > d({i},{j})+d({j},{m})={rhs!r}"
        )


class ZeroMassError(SpaceError):
    """Restriction to a set of zero measure."""


def _pairwise(coords: np.ndarray, metric: str, rows=None) -> np.ndarray:
    a = coords if rows is None else coords[rows]
    if metric == "euclidean":
        diff = a[:, None, :] - coords[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # ell1 and hamming coincide on 0/1 coordinates
    return np.abs(a[:, None, :] - coords[None, :, :]).sum(axis=2)


def fsum_weights(weights) -> float:
    return math.fsum(np.asarray(weights, dtype=float).tolist())


class FiniteMetricProbabilitySpace:
    """Immutable finite metric probability space (M, d, mu).

    Either ``distance`` or ``coords`` (with ``metric``) must be given.  The
    attribute ``validation`` records how the metric axioms were established:
    ``"full"`` (every triple), ``"sampled"`` (random triples, large spaces) or
    ``"construction"`` (coordinate metrics, which are metrics by definition).
    """

    __slots__ = ("labels", "weights", "coords", "metric", "validation", "kind", "_distance")

    def __init__(self, labels, weights, *, distance=None, coords=None, metric=None,
                 validation="full", kind=None):
        self.labels = tuple(labels)
        w = np.array(weights, dtype=float)
        w.setflags(write=False)
        self.weights = w
        if coords is not None:
            coords = np.array(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            coords.setflags(write=False)
        self.coords = coords
        self.metric = metric
        self.validation = validation
        self.kind = kind
        if distance is not None:
            distance = np.array(distance, dtype=float)
            distance.setflags(write=False)
        self._distance = distance

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return (f"FiniteMetricProbabilitySpace(k={len(self)}, metric={self.metric!r}, "
                f"kind={self.kind!r}, validation={self.validation!r})")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def has_dense_distance(self) -> bool:
        return self._distance is not None

    @property
    def distance(self) -> np.ndarray:
        if self._distance is None:
            if self.size > DENSE_MAX_POINTS:
                raise MemoryError(
                    f"refusing to materialize a {self.size}x{self.size} distance matrix "
                    f"(limit {DENSE_MAX_POINTS} points)"
                )
            d = _pairwise(self.coords, self.metric)
            d.setflags(write=False)
            self._distance = d
        return self._distance

    def distances_from(self, i: int) -> np.ndarray:
        """Row ``i`` of the distance matrix without materializing the rest."""
        if self._distance is not None:
            return self._distance[i]
        return _pairwise(self.coords, self.metric, rows=[i])[0]

    def diameter(self) -> float:
        if self.size == 1:
            return 0.0
        if self._distance is None and self.kind and self.kind[0] == "hypercube":
            return float(self.kind[1])
        return float(self.distance.max())

    def sub(self, index) -> "FiniteMetricProbabilitySpace":
        """Space on the points ``index`` with the given weights left unnormalized."""
        index = np.asarray(index)
        labels = [self.labels[i] for i in index]
        if self.coords is not None:
            return FiniteMetricProbabilitySpace(
                labels, self.weights[index], coords=self.coords[index], metric=self.metric,
                validation=self.validation)
        return FiniteMetricProbabilitySpace(
            labels, self.weights[index], distance=self.distance[np.ix_(index, index)],
            metric=self.metric, validation=self.validation)

    def with_weights(self, weights) -> "FiniteMetricProbabilitySpace":
        w = _check_weights(weights, self.size)
        return FiniteMetricProbabilitySpace(
            self.labels, w, distance=self._distance, coords=self.coords,
            metric=self.metric, validation=self.validation, kind=self.kind)

    def to_dict(self) -> dict:
        return {
            "labels": [_jsonable_label(x) for x in self.labels],
            "distance": self.distance.tolist(),
            "weights": self.weights.tolist(),
        }


def _jsonable_label(x):
    if isinstance(x, tuple):
        return list(x)
    if isinstance(x, np.generic):
        return x.item()
    return x


def _check_weights(weights, k: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != k:
        raise SpaceError(f"expected {k} weights, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise SpaceError("weights must be finite")
    if np.any(w < 0):
        bad = int(np.flatnonzero(w < 0)[0])
        raise SpaceError(f"negative weight {w[bad]!r} at point {bad}")
    total = fsum_weights(w)
    if abs(total - 1.0) > WEIGHT_SUM_REJECT:
        raise SpaceError(f"weights sum to {total!r}, not 1")
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        w = w / total
    return w


def check_triangle(distance: np.ndarray, *, rng=None, samples=None):
    """Raise :class:`TriangleViolation` on the first violated triple.

    Checks every triple, or ``samples`` random triples when given.
    """
    d = np.asarray(distance, dtype=float)
    k = d.shape[0]
    scale = float(d.max()) if d.size else 0.0
    tol = 1e-12 * max(scale, 1.0)
    if samples is None:
        for j in range(k):
            slack = d[:, j][:, None] + d[j, :][None, :] - d
            if slack.min() < -tol:
                i, m = np.unravel_index(int(np.argmin(slack)), slack.shape)
                raise TriangleViolation((int(i), j, int(m)), d[i, m], d[i, j] + d[j, m])
        return
    rng = np.random.default_rng(rng)
    i, j, m = rng.integers(0, k, size=(3, samples))
    slack = d[i, j] + d[j, m] - d[i, m]
    if slack.min() < -tol:
        p = int(np.argmin(slack))
        raise TriangleViolation((int(i[p]), int(j[p]), int(m[p])), d[i[p], m[p]],
                                d[i[p], j[p]] + d[j[p], m[p]])


def build_finite(labels, distance, weights, *, seed=0) -> FiniteMetricProbabilitySpace:
    """Validate and build a finite metric probability space.

    Raises :class:`SpaceError` (or its subclass :class:`TriangleViolation`)
    when the data is not a metric probability space.  Zero off-diagonal
    distances are rejected; duplicate points have to be merged by the caller.
    """
    labels = list(labels)
    d = np.array(distance, dtype=float)
    k = len(labels)
    if k < 1:
        raise SpaceError("a space needs at least one point")
    if d.shape != (k, k):
        raise SpaceError(f"distance matrix has shape {d.shape}, expected {(k, k)}")
    if not np.all(np.isfinite(d)):
        raise SpaceError("distances must be finite")
    if np.any(np.diag(d) != 0):
        raise SpaceError("distance matrix must have a zero diagonal")
    if not np.array_equal(d, d.T):
        i, j = np.argwhere(d != d.T)[0]
        raise SpaceError(f"distance matrix is not symmetric at ({i}, {j})")
    off = ~np.eye(k, dtype=bool)
    if np.any(d[off] <= 0):
        i, j = np.argwhere((d <= 0) & off)[0]
        raise SpaceError(f"non-positive distance between distinct points ({i}, {j})")
    w = _check_weights(weights, k)
    if k <= FULL_VALIDATION_MAX:
        check_triangle(d)
        validation = "full"
    else:
        check_triangle(d, rng=seed, samples=10 * k * k)
        validation = "sampled"
    return FiniteMetricProbabilitySpace(labels, w, distance=d, validation=validation)


def _bit_table(n: int) -> np.ndarray:
    idx = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def build_hypercube(n: int) -> FiniteMetricProbabilitySpace:
    """Discrete cube {0,1}^n with Hamming distance and uniform measure.

    Points are ordered as in ``itertools.product((0, 1), repeat=n)``, i.e.
    point ``i`` has coordinates given by the binary expansion of ``i`` with the
    first coordinate as the most significant bit.
    """
    if not 1 <= n <= HYPERCUBE_MAX_DIM:
        raise SpaceError(f"hypercube dimension must be in [1, {HYPERCUBE_MAX_DIM}], got {n}")
    bits = _bit_table(n)
    labels = list(map(tuple, bits.tolist()))
    w = np.full(2 ** n, 2.0 ** -n)
    return FiniteMetricProbabilitySpace(labels, w, coords=bits, metric="hamming",
                                        validation="construction", kind=("hypercube", n))


def hypercube_dimension(space: FiniteMetricProbabilitySpace):
    if space.kind and space.kind[0] == "hypercube":
        return space.kind[1]
    return None


def build_chain_subset(n: int) -> np.ndarray:
    """Mask of the monotone path (0..0), (1,0..0), (1,1,0..0), ..., (1..1)."""
    mask = np.zeros(2 ** n, dtype=bool)
    for m in range(n + 1):
        # first m coordinates set: the m most significant bits
        mask[((1 << m) - 1) << (n - m)] = True
    return mask


def build_product(base: FiniteMetricProbabilitySpace, n: int) -> FiniteMetricProbabilitySpace:
    """n-fold product with the l1-type metric sum_i d(x_i, y_i) and product measure."""
    k = base.size
    if n < 1:
        raise SpaceError("product power must be at least 1")
    if k ** n > PRODUCT_MAX_POINTS:
        raise SpaceError(f"product has {k ** n} points, limit is {PRODUCT_MAX_POINTS}")
    if n == 1:
        return base
    d0 = base.distance
    d = d0
    w = base.weights
    for _ in range(n - 1):
        m = d.shape[0]
        d = np.kron(d, np.ones((k, k))) + np.kron(np.ones((m, m)), d0)
        w = np.kron(w, base.weights)
    labels = list(itertools.product(base.labels, repeat=n))
    return FiniteMetricProbabilitySpace(labels, w, distance=d, metric="ell1",
                                        validation="construction")


def as_mask(mask, k: int) -> np.ndarray:
    m = np.asarray(mask)
    if m.dtype != bool:
        idx = m.astype(int).reshape(-1)
        m = np.zeros(k, dtype=bool)
        m[idx] = True
    if m.shape != (k,):
        raise SpaceError(f"mask has shape {m.shape}, expected ({k},)")
    return m


def subset_mass(space: FiniteMetricProbabilitySpace, mask) -> float:
    mask = as_mask(mask, space.size)
    return fsum_weights(space.weights[mask])


def restrict(space: FiniteMetricProbabilitySpace, mask):
    """Normalized restriction mu_A = mu(A & .)/mu(A) on the induced metric.

    Returns ``(restricted_space, mu(A))``.  Points of ``A`` with zero weight
    are kept (they are part of the metric space) with zero weight.
    """
    mask = as_mask(mask, space.size)
    mass = subset_mass(space, mask)
    if not mass > 0:
        raise ZeroMassError("cannot restrict to a set of zero measure")
    index = np.flatnonzero(mask)
    if index.size == space.size:
        return space, mass
    sub = space.sub(index)
    w = space.weights[index] / mass
    out = FiniteMetricProbabilitySpace(sub.labels, w, distance=sub._distance,
                                       coords=sub.coords, metric=sub.metric,
                                       validation=space.validation)
    return out, mass


def restricted_weights(space: FiniteMetricProbabilitySpace, mask):
    """mu_A as a vector on the whole space (zero off A), and mu(A)."""
    mask = as_mask(mask, space.size)
    mass = subset_mass(space, mask)
    if not mass > 0:
        raise ZeroMassError("cannot restrict to a set of zero measure")
    w = np.where(mask, space.weights, 0.0) / mass
    return w, mass


@dataclass(frozen=True)
class InducedMetric:
    """Shortest-path metric of an induced hypercube subgraph."""

    distance: np.ndarray
    components: np.ndarray
    connected: bool


def induced_graph_metric(space: FiniteMetricProbabilitySpace, mask) -> InducedMetric:
    """Graph distance inside ``A`` using edges between points at distance 1.

    Unreachable pairs get ``inf``; ``components`` labels the connected
    components of the induced subgraph.
    """
    mask = as_mask(mask, space.size)
    index = np.flatnonzero(mask)
    if index.size == 0:
        raise SpaceError("empty mask")
    d = space.sub(index).distance
    adj = csr_matrix(np.isclose(d, 1.0, rtol=0, atol=1e-12).astype(np.int8))
    ncomp, labels = connected_components(adj, directed=False)
    dist = shortest_path(adj, method="D", directed=False, unweighted=True)
    return InducedMetric(dist, labels, ncomp == 1)


def is_monotone(mask, n: int) -> bool:
    """True iff A is an upper set of {0,1}^n under the coordinatewise order."""
    mask = as_mask(mask, 2 ** n)
    members = np.flatnonzero(mask)
    for b in range(n):
        bit = 1 << b
        up = members | bit
        if not mask[up].all():
            return False
    return True


def enumerate_monotone_masks(n: int) -> list:
    """All upper sets of {0,1}^n (including the empty set), n <= 4."""
    if n > 4:
        raise SpaceError("exhaustive enumeration over 2^(2^n) sets is limited to n <= 4")
    size = 2 ** n
    codes = np.arange(2 ** size, dtype=np.int64)
    ok = np.ones(codes.size, dtype=bool)
    for x in range(size):
        has_x = (codes >> x) & 1
        for b in range(n):
            y = x | (1 << b)
            if y != x:
                ok &= ~((has_x == 1) & (((codes >> y) & 1) == 0))
    out = []
    for c in codes[ok]:
        out.append(((int(c) >> np.arange(size)) & 1).astype(bool))
    return out


# --- JSON interchange -------------------------------------------------------

def _read_json(source):
    if isinstance(source, dict):
        return source
    p = Path(source)
    return json.loads(p.read_text())


def _label(x):
    return tuple(x) if isinstance(x, list) else x


def load_space(source) -> FiniteMetricProbabilitySpace:
    """Load ``{"labels": [...], "distance": [[...]], "weights": [...]}``."""
    data = _read_json(source)
    try:
        labels = [_label(x) for x in data["labels"]]
        return build_finite(labels, data["distance"], data["weights"])
    except KeyError as exc:
        raise SpaceError(f"space JSON is missing key {exc}") from None


def dump_space(space: FiniteMetricProbabilitySpace, path=None) -> str:
    text = json.dumps(space.to_dict()) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def load_mask(source, k: int) -> np.ndarray:
    """Load ``{"members": [indices]}`` into a boolean mask over ``k`` points."""
    data = _read_json(source)
    members = [int(i) for i in data["members"]]
    if any(i < 0 or i >= k for i in members):
        raise SpaceError("mask member index out of range")
    return as_mask(np.array(members, dtype=int), k)


def dump_mask(mask, path=None) -> str:
    text = json.dumps({"members": np.flatnonzero(mask).tolist()}) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
