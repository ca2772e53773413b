import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from concmeasure.orlicz import (PSI1_MOMENT_FACTOR, PSI2_MOMENT_FACTOR, lp_norm, moment_sup,
                                psi_norm)

HALF = np.array([0.5, 0.5])


def test_lp_closed_forms():
    assert lp_norm([3, 3], HALF, 7) == pytest.approx(3.0, rel=1e-15)
    assert lp_norm([0, 2], HALF, 2) == pytest.approx(2 / math.sqrt(2), rel=1e-15)
    assert lp_norm([0, 0], HALF, 3) == 0.0
    with pytest.raises(ValueError):
        lp_norm([1, 2], HALF, 0.5)


def test_lp_log_domain_branch_is_continuous():
    f = np.array([0.3, 900.0, 2.0])
    w = np.array([0.5, 0.2, 0.3])
    direct = float(np.dot(w, f ** 50.0) ** (1 / 50))
    assert lp_norm(f, w, 50.0) == pytest.approx(direct, rel=1e-13)
    assert lp_norm(f, w, 50.0 + 1e-9) == pytest.approx(direct, rel=1e-9)
    # no overflow where f^p would be inf
    assert lp_norm(f, w, 400.0) == pytest.approx(900 * 0.2 ** (1 / 400), rel=1e-12)


def test_psi_closed_forms():
    assert psi_norm([1, 1], HALF, 2) == pytest.approx(1 / math.sqrt(math.log(2)), rel=1e-13)
    assert psi_norm([1, 1], HALF, 2) == pytest.approx(1.2011224087864498, rel=1e-13)
    assert psi_norm([0, 1], HALF, 2) == pytest.approx(1 / math.sqrt(math.log(3)), rel=1e-13)
    assert psi_norm([-2, -2], HALF, 1) == pytest.approx(2 / math.log(2), rel=1e-13)
    assert psi_norm([0, 0], HALF, 2) == 0.0


def test_psi_integral_equals_two_at_the_root(rng):
    for _ in range(20):
        k = int(rng.integers(2, 15))
        f = rng.normal(size=k) * 3
        w = rng.dirichlet(np.ones(k))
        for alpha in (1.0, 2.0):
            r = psi_norm(f, w, alpha)
            assert np.dot(w, np.exp((np.abs(f) / r) ** alpha)) == pytest.approx(2.0, abs=1e-10)


def test_moment_sup_closed_forms():
    # (0, 1) on halves: ratio 2^(-1/p)/sqrt(p) peaks at p = 2 log 2
    p = 2 * math.log(2)
    expected = 2 ** (-1 / p) / math.sqrt(p)
    assert moment_sup([0, 1], HALF, 2) == pytest.approx(expected, rel=1e-9)
    assert moment_sup([0, 1], HALF, 2) == pytest.approx(0.5151, abs=1e-4)
    assert moment_sup([-5, -5], HALF, 1) == pytest.approx(5.0, rel=1e-12)
    assert moment_sup([0, 0], HALF, 2) == 0.0


def test_moment_sup_matches_dense_grid():
    ps = np.arange(1.0, 40.0, 1e-3)
    f = np.array([0.0, 1.0])
    dense = max(np.dot(HALF, f ** p) ** (1 / p) / math.sqrt(p) for p in ps)
    assert moment_sup(f, HALF, 2) == pytest.approx(dense, rel=1e-6)


def test_named_factors():
    assert PSI2_MOMENT_FACTOR == 4 and PSI1_MOMENT_FACTOR == 6
    assert math.sqrt(10 / math.log(2)) < PSI2_MOMENT_FACTOR


fields = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=150, deadline=None)
@given(fields, st.integers(0, 2**32 - 1))
def test_moment_sandwich(values, seed):
    f = np.array(values)
    w = np.random.default_rng(seed).dirichlet(np.ones(f.size))
    for alpha, factor in ((2.0, PSI2_MOMENT_FACTOR), (1.0, PSI1_MOMENT_FACTOR)):
        m = moment_sup(f, w, alpha)
        r = psi_norm(f, w, alpha)
        assert m <= r * (1 + 1e-9) + 1e-300
        assert r <= factor * m * (1 + 1e-9) + 1e-300


@settings(max_examples=100, deadline=None)
@given(fields, st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_psi_homogeneous_and_monotone(values, s, seed):
    rng = np.random.default_rng(seed)
    f = np.array(values)
    w = rng.dirichlet(np.ones(f.size))
    assert psi_norm(s * f, w, 2) == pytest.approx(s * psi_norm(f, w, 2), rel=1e-10, abs=1e-300)
    assert psi_norm(-f, w, 1) == psi_norm(f, w, 1)
    g = np.abs(f) + rng.random(f.size)
    assert psi_norm(f, w, 2) <= psi_norm(g, w, 2) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(fields, st.integers(0, 2**32 - 1))
def test_psi1_dominates_l2(values, seed):
    f = np.array(values)
    w = np.random.default_rng(seed).dirichlet(np.ones(f.size))
    assert psi_norm(f, w, 1) ** 2 >= 0.5 * lp_norm(f, w, 2) ** 2 * (1 - 1e-12)
