import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from concmeasure.space import SpaceError, build_finite, build_hypercube
from concmeasure.spectral import (build_graph_form, check_poincare_spread, jacobi_eigh,
                                  lambda1, exp_integrability_diagnostics, load_edges,
                                  metric_poincare_upper, rayleigh, spectral_gap)

from conftest import random_space


def walsh_spectrum(n):
    return sorted(2 * sum(s) for s in itertools.product((0, 1), repeat=n))


def test_two_point_gap(two_point):
    form = build_graph_form(two_point)
    assert form.rule == "unit-distance"
    gap = spectral_gap(form)
    assert gap.value == pytest.approx(4.0, abs=1e-12)
    assert rayleigh(form, gap.vector) == pytest.approx(4.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_hypercube_matches_walsh_characters(n):
    h = build_hypercube(n)
    form = build_graph_form(h)
    assert form.rule == "coordinate-flip"
    A = form.laplacian() / h.weights[:, None]
    vals, _, _ = jacobi_eigh(A)
    np.testing.assert_allclose(vals, walsh_spectrum(n), atol=1e-10)
    gap = spectral_gap(form)
    assert gap.value == pytest.approx(2.0, abs=1e-10)
    # a first-order Walsh character attains the gap
    chi = np.array([1.0 - 2.0 * lab[0] for lab in h.labels])
    assert rayleigh(form, chi) == pytest.approx(2.0, abs=1e-14)


def test_jacobi_against_numpy(rng):
    for k in (1, 2, 5, 17, 40):
        M = rng.normal(size=(k, k))
        M = M + M.T
        vals, vecs, _ = jacobi_eigh(M)
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(M), atol=1e-10 * max(1, abs(M).max()))
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(k), atol=1e-10)
        np.testing.assert_allclose(M @ vecs, vecs * vals, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_gap_matches_generalized_eigenproblem(k, seed):
    rng = np.random.default_rng(seed)
    s = random_space(rng, k)
    s = build_finite(range(k), s.distance, np.maximum(s.weights, 1e-3) / np.maximum(s.weights, 1e-3).sum())
    rates = rng.random((k, k)) * (rng.random((k, k)) < 0.6)
    rates = np.triu(rates, 1)
    rates = rates + rates.T
    form = build_graph_form(s, "explicit", rates)
    gap = spectral_gap(form)
    if not form.connected:
        assert gap.value == 0.0
        return
    ref = eigh(form.laplacian(), np.diag(s.weights), eigvals_only=True)[1]
    assert gap.value == pytest.approx(ref, rel=1e-9, abs=1e-12)
    assert rayleigh(form, gap.vector) == pytest.approx(gap.value, rel=1e-9, abs=1e-12)


def test_disconnected_form_is_vacuous():
    s = build_finite(range(3), [[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1 / 3] * 3)
    rates = np.zeros((3, 3))
    rates[0, 1] = rates[1, 0] = 1.0
    form = build_graph_form(s, "explicit", rates)
    assert not form.connected and lambda1(form) == 0.0
    assert metric_poincare_upper(form, s) == math.inf
    reps = check_poincare_spread(form, s)
    assert reps[0].status == "vacuous" and not reps[0].counts


def test_rule_errors(two_point):
    with pytest.raises(SpaceError):
        build_graph_form(two_point, "coordinate-flip")
    with pytest.raises(ValueError):
        build_graph_form(two_point, "explicit")
    with pytest.raises(SpaceError):
        build_graph_form(two_point, "explicit", [[0, 1], [2, 0]])
    zero = build_finite([0, 1], [[0, 1], [1, 0]], [1.0, 0.0])
    with pytest.raises(SpaceError):
        spectral_gap(build_graph_form(zero))


def test_load_edges(tmp_path, two_point):
    p = tmp_path / "e.json"
    p.write_text(json.dumps({"edges": [[0, 1, 2.0]]}))
    assert lambda1(load_edges(p, two_point)) == pytest.approx(8.0, abs=1e-12)


def test_metric_poincare_upper_on_cube():
    h = build_hypercube(4)
    assert metric_poincare_upper(build_graph_form(h), h) == pytest.approx(1.0, abs=1e-12)


def test_poincare_spread_holds_on_cube_masks():
    h = build_hypercube(3)
    form = build_graph_form(h)
    masks = [np.ones(8, bool), np.arange(8) < 4, np.array([1, 1, 1, 0, 1, 0, 0, 0], bool)]
    reps = check_poincare_spread(form, h, masks, c=1.0, seed=0)
    # full mask with c = 1 is the plain Poincare inequality
    assert reps[0].lhs <= 1 / 2 + 1e-9
    assert reps[0].lhs == pytest.approx(0.5, rel=1e-3)
    assert all(r.passed for r in reps)


def test_exp_integrability_is_reported_only():
    h = build_hypercube(3)
    form = build_graph_form(h)
    gap = spectral_gap(form)
    d = exp_integrability_diagnostics(form, gap.vector, gap.value)
    assert d["status"] == "reported" and "holds" in d
    assert exp_integrability_diagnostics(form, np.ones(8))["status"] == "vacuous"
