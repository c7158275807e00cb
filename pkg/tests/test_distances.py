import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgvcodes.core import Channel, Metric, entropy, mutual_info_xx
from rgvcodes.distances import (
    additive,
    beta_distance,
    bhattacharyya,
    chernoff,
    equivocation,
    hamming,
    neg_mutual_info,
    symmetrize,
)

joints2 = st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).filter(lambda v: sum(v) > 1e-3).map(
    lambda v: (np.array(v) / sum(v)).reshape(2, 2))


def _equal_marginal_joint(rng, p):
    # Sinkhorn scaling of a random positive matrix to marginals (p, p)
    m = rng.random((len(p), len(p))) + 0.05
    for _ in range(500):
        m *= (p / m.sum(1))[:, None]
        m *= (p / m.sum(0))[None, :]
    return m


def test_hamming_on_sequences_and_product():
    d = hamming()
    assert d.sequences([0, 1, 1], [0, 1, 1]) == 0.0
    assert d.sequences([0, 1, 1], [0, 1, 0]) == pytest.approx(1 / 3)
    assert d(np.full((2, 2), 0.25)) == pytest.approx(0.5)


def test_bhattacharyya_values():
    w = Channel.bsc(0.1)
    d = bhattacharyya(w)
    assert d(np.diag([0.5, 0.5])) == 0.0
    assert d.table[0, 1] == pytest.approx(-math.log(2 * math.sqrt(0.09)), abs=1e-14)
    assert d.table[0, 1] == pytest.approx(0.5108, abs=1e-4)
    assert np.all(bhattacharyya(Channel.bsc(0.5)).table == 0.0)


def test_chernoff_half_with_ml_is_bhattacharyya():
    rng = np.random.default_rng(2)
    w = Channel(rng.dirichlet(np.ones(3), size=3))
    np.testing.assert_allclose(chernoff(w, Metric.ml(w), 0.5).table, bhattacharyya(w).table, atol=1e-12)


def test_chernoff_degenerate_cases():
    rng = np.random.default_rng(3)
    w = Channel(rng.dirichlet(np.ones(3), size=2))
    q = Metric.additive(rng.normal(size=(2, 3)))
    assert np.all(chernoff(w, q, 0.0).table == 0.0)
    for s in (0.2, 1.3):
        assert np.all(np.diag(chernoff(w, q, s).table) == 0.0)


def test_neg_mutual_info():
    d = neg_mutual_info()
    assert d(np.outer([0.3, 0.7], [0.3, 0.7])) == pytest.approx(0.0, abs=1e-14)
    assert d(np.diag([0.5, 0.5])) == pytest.approx(-math.log(2), abs=1e-14)
    rng = np.random.default_rng(4)
    v = rng.random((3, 3))
    v /= v.sum()
    assert d(v) == pytest.approx(-mutual_info_xx(v), abs=1e-12)


def test_equivocation():
    d = equivocation()
    assert d(np.diag([0.5, 0.5])) == pytest.approx(0.0, abs=1e-14)
    assert d(np.full((2, 2), 0.25)) == pytest.approx(math.log(2), abs=1e-14)
    rng = np.random.default_rng(9)
    p = np.array([0.2, 0.3, 0.5])
    for _ in range(10):
        v = _equal_marginal_joint(rng, p)
        assert d(v) == pytest.approx(entropy(p) + neg_mutual_info()(v), abs=1e-9)


def test_beta_distance_nonnegative_and_vanishing():
    w = Channel.bsc(0.1)
    q = Metric.ml(w)
    d = beta_distance(0.05, w, q)
    rng = np.random.default_rng(10)
    for _ in range(4):
        v = _equal_marginal_joint(rng, np.array([0.5, 0.5]))
        assert d(v) >= 0.0
    # X~ = X at a rate above H(P) + I(X;Y): the copy joint costs nothing
    big = beta_distance(math.log(2) + 1.0, w, q)
    assert big(np.diag([0.5, 0.5])) == pytest.approx(0.0, abs=1e-6)


def test_beta_distance_pure_noise_is_zero():
    w = Channel.bsc(0.5)
    q = Metric.ml(w)
    d = beta_distance(math.log(2), w, q)
    for t in (0.0, 0.1, 0.25, 0.5):
        pxx = np.array([[0.5 - t, t], [t, 0.5 - t]])
        assert d(pxx) == pytest.approx(0.0, abs=1e-6)


@given(joints2)
@settings(max_examples=50, deadline=None)
def test_symmetrize_properties(pxx):
    w = Channel(np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]]))
    q = Metric.additive(np.array([[0.0, -1.0, -2.0], [-1.5, 0.3, 0.1]]))
    d = chernoff(w, q, 0.3)
    sd = symmetrize(d)
    assert sd(pxx) == pytest.approx(sd(pxx.T), abs=1e-15)
    assert sd(pxx) <= d(pxx) + 1e-15


def test_symmetrize_keeps_symmetric_distance():
    d = hamming(3)
    assert symmetrize(d) is d


@given(joints2)
@settings(max_examples=30, deadline=None)
def test_symmetric_flag_is_honest(pxx):
    for d in (hamming(), bhattacharyya(Channel.bsc(0.2)), neg_mutual_info()):
        assert d.symmetric
        assert d(pxx) == pytest.approx(d(pxx.T), abs=1e-12)


def test_additive_rejects_non_square():
    with pytest.raises(ValueError):
        additive(np.ones((2, 3)))


def test_additive_from_counts_matches_expectation():
    table = np.array([[0.0, 0.4, 1.1], [0.4, 0.05, 0.7], [1.1, 0.7, 0.2]])
    d = additive(table)
    counts = np.array([[3, 1, 0], [0, 2, 1], [1, 0, 4]])
    assert d.from_counts(counts) == pytest.approx(float(np.sum(counts * table) / counts.sum()), abs=1e-14)
