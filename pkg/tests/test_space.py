import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from concmeasure.space import (DENSE_MAX_POINTS, SpaceError, TriangleViolation, ZeroMassError,
                               build_chain_subset, build_finite, build_hypercube, build_product,
                               dump_mask, dump_space, enumerate_monotone_masks,
                               induced_graph_metric, is_monotone, load_mask, load_space,
                               restrict, restricted_weights, subset_mass)


def test_two_point_space_roundtrip(tmp_path, two_point):
    path = tmp_path / "s.json"
    dump_space(two_point, path)
    back = load_space(path)
    assert back.labels == two_point.labels
    np.testing.assert_array_equal(back.distance, two_point.distance)
    np.testing.assert_array_equal(back.weights, two_point.weights)


def test_rejects_bad_inputs():
    with pytest.raises(SpaceError, match="symmetric"):
        build_finite([0, 1], [[0, 1], [2, 0]], [0.5, 0.5])
    with pytest.raises(SpaceError, match="diagonal"):
        build_finite([0, 1], [[1, 1], [1, 0]], [0.5, 0.5])
    with pytest.raises(SpaceError, match="non-positive"):
        build_finite([0, 1], [[0, 0], [0, 0]], [0.5, 0.5])
    with pytest.raises(SpaceError, match="negative weight"):
        build_finite([0, 1], [[0, 1], [1, 0]], [1.5, -0.5])
    with pytest.raises(SpaceError, match="sum"):
        build_finite([0, 1], [[0, 1], [1, 0]], [0.5, 0.6])


def test_triangle_violation_names_the_triple():
    d = [[0, 1, 3], [1, 0, 1], [3, 1, 0]]
    with pytest.raises(TriangleViolation) as info:
        build_finite("abc", d, [1 / 3] * 3)
    assert sorted((info.value.triple[0], info.value.triple[2])) == [0, 2]
    assert info.value.triple[1] == 1


def test_weights_renormalized_within_tolerance():
    s = build_finite([0, 1], [[0, 1], [1, 0]], [0.5, 0.5 + 1e-10])
    assert abs(s.weights.sum() - 1.0) < 1e-15


def test_hypercube_layout():
    h = build_hypercube(3)
    assert h.labels[0] == (0, 0, 0) and h.labels[1] == (0, 0, 1) and h.labels[4] == (1, 0, 0)
    assert list(h.labels) == list(itertools.product((0, 1), repeat=3))
    assert h.distance[0, 7] == 3 and h.diameter() == 3
    np.testing.assert_array_equal(h.weights, np.full(8, 1 / 8))


def test_large_hypercube_stays_lazy():
    h = build_hypercube(16)
    assert h.size == 65536 > DENSE_MAX_POINTS
    assert h.diameter() == 16
    assert h.distances_from(0)[-1] == 16
    with pytest.raises(MemoryError):
        h.distance


def test_chain_mass_and_restriction():
    h = build_hypercube(4)
    mask = build_chain_subset(4)
    sub, mass = restrict(h, mask)
    assert mass == 5 / 16
    assert sub.labels == ((0, 0, 0, 0), (1, 0, 0, 0), (1, 1, 0, 0), (1, 1, 1, 0), (1, 1, 1, 1))
    np.testing.assert_allclose(sub.weights, 0.2)
    # consecutive chain points are at Hamming distance 1
    assert all(sub.distance[i, i + 1] == 1 for i in range(4))


def test_full_restriction_returns_same_object(two_point):
    sub, mass = restrict(two_point, [True, True])
    assert sub is two_point and mass == 1.0


def test_zero_mass_restriction():
    s = build_finite([0, 1], [[0, 1], [1, 0]], [1.0, 0.0])
    with pytest.raises(ZeroMassError):
        restrict(s, [False, True])


def test_restricted_weights_vector(two_point):
    w, mass = restricted_weights(two_point, [True, False])
    assert mass == 0.5
    np.testing.assert_array_equal(w, [1.0, 0.0])


def test_product_matches_hypercube(two_point):
    p = build_product(two_point, 3)
    h = build_hypercube(3)
    np.testing.assert_array_equal(p.distance, h.distance)
    np.testing.assert_array_equal(p.weights, h.weights)


def test_monotone_counts():
    # Dedekind numbers (upper sets, empty set included)
    assert [len(enumerate_monotone_masks(n)) for n in range(1, 5)] == [3, 6, 20, 168]
    for m in enumerate_monotone_masks(3):
        assert is_monotone(m, 3)


def test_induced_metric_of_non_monotone_set_differs():
    h = build_hypercube(2)
    # {00, 11} is disconnected in the induced subgraph
    ind = induced_graph_metric(h, [True, False, False, True])
    assert not ind.connected and np.isinf(ind.distance[0, 1])


def test_mask_json(tmp_path):
    m = build_chain_subset(3)
    p = tmp_path / "m.json"
    dump_mask(m, p)
    assert json.loads(p.read_text()) == {"members": [0, 4, 6, 7]}
    np.testing.assert_array_equal(load_mask(p, 8), m)
    with pytest.raises(SpaceError):
        load_mask({"members": [9]}, 8)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_subset_mass_is_additive(n, seed):
    h = build_hypercube(min(n, 8))
    rng = np.random.default_rng(seed)
    mask = rng.random(h.size) < 0.5
    assert subset_mass(h, mask) + subset_mass(h, ~mask) == pytest.approx(1.0, abs=1e-15)
