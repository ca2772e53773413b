import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from concmeasure.constants import chain_field
from concmeasure.lipschitz import (kirszbraun_extend, lip_seminorm, lipschitz_vertices,
                                   mcshane_regularize, symmetrized_psi_norm)
from concmeasure.orlicz import psi_norm
from concmeasure.space import SpaceError, build_chain_subset, build_hypercube, restrict

from conftest import random_space


def test_seminorm_examples(rng):
    s = random_space(rng, 7)
    assert lip_seminorm(np.full(7, 2.5), s) == 0.0
    for x0 in range(7):
        assert lip_seminorm(s.distance[x0], s) == pytest.approx(1.0, rel=1e-14)


def test_chain_field_is_one_lipschitz():
    for n in (2, 3, 5):
        sub, _ = restrict(build_hypercube(n), build_chain_subset(n))
        assert lip_seminorm(chain_field(n), sub) == 1.0


def test_mcshane_gives_one_lipschitz_minorant(rng):
    s = random_space(rng, 9)
    f = rng.normal(size=9) * 5
    g = mcshane_regularize(f, s.distance)
    assert np.all(g <= f)
    assert lip_seminorm(g, s) <= 1 + 1e-12


def test_extension_examples():
    h = build_hypercube(3)
    full = np.arange(8.0) / 10
    np.testing.assert_array_equal(kirszbraun_extend(full, h, np.ones(8, bool)), full)
    single = np.zeros(8, bool)
    single[5] = True
    np.testing.assert_array_equal(kirszbraun_extend([0.0], h, single), h.distance[5])
    mask = build_chain_subset(3)
    ext = kirszbraun_extend(chain_field(3), h, mask)
    np.testing.assert_array_equal(ext[mask], chain_field(3))
    assert lip_seminorm(ext, h) == 1.0
    with pytest.raises(SpaceError):
        kirszbraun_extend([], h, np.zeros(8, bool))


def test_extension_preserves_non_unit_constant(rng):
    s = random_space(rng, 12)
    mask = rng.random(12) < 0.5
    mask[0] = mask[1] = True
    sub, _ = restrict(s, mask)
    f = 3.7 * mcshane_regularize(rng.normal(size=sub.size), sub.distance)
    ext = kirszbraun_extend(f, s, mask)
    assert lip_seminorm(ext, s) == pytest.approx(lip_seminorm(f, sub), rel=1e-12)


def test_symmetrized_two_point_closed_form():
    a = 0.7
    val = symmetrized_psi_norm([-a, a], [0.5, 0.5])
    assert val == pytest.approx(2 * a / math.sqrt(math.log(3)), rel=1e-13)
    assert symmetrized_psi_norm([1.0, 1.0], [0.5, 0.5]) == 0.0


def test_symmetrized_streaming_path_agrees(monkeypatch, rng):
    import concmeasure.lipschitz as lp
    f = rng.normal(size=300)
    w = rng.dirichlet(np.ones(300))
    dense = symmetrized_psi_norm(f, w)
    monkeypatch.setattr(lp, "SYMMETRIZED_DENSE_MAX", 10)
    assert lp.symmetrized_psi_norm(f, w) == pytest.approx(dense, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 15), st.integers(0, 2**32 - 1))
def test_symmetrized_sandwich(k, seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(k))
    f = rng.normal(size=k)
    f -= np.dot(w, f)
    base = psi_norm(f, w, 2)
    sym = symmetrized_psi_norm(f, w, 2)
    assert base * (1 - 1e-10) <= sym <= 2 * base * (1 + 1e-10)


def test_vertices_of_two_and_three_point_spaces():
    v = lipschitz_vertices([[0, 1], [1, 0]])
    assert sorted(v[:, 1].tolist()) == [-1.0, 1.0]
    d = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)  # path a-b-c
    v = lipschitz_vertices(d)
    for row in v:
        assert row[0] == 0
        assert np.all(np.abs(row[:, None] - row[None, :]) <= d + 1e-12)
    assert {tuple(r) for r in v.tolist()} >= {(0, 1, 2), (0, -1, -2), (0, 1, 0), (0, -1, 0)}
    with pytest.raises(ValueError):
        lipschitz_vertices(np.ones((7, 7)) - np.eye(7))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_extension_properties(k, seed):
    rng = np.random.default_rng(seed)
    s = random_space(rng, k)
    mask = rng.random(k) < 0.4
    mask[rng.integers(k)] = True
    sub, _ = restrict(s, mask)
    f = mcshane_regularize(rng.normal(size=sub.size) * 3, sub.distance)
    ext = kirszbraun_extend(f, s, mask)
    assert np.array_equal(ext[mask], f)
    lip = lip_seminorm(f, sub)
    if lip > 0:
        assert lip_seminorm(ext, s) == pytest.approx(lip, rel=1e-12)
    else:
        # a constant on A is extended with the unscaled formula
        assert lip_seminorm(ext, s) <= 1 + 1e-12
