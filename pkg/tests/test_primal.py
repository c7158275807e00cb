import math

import numpy as np
import pytest

from rgvcodes.core import Channel, Metric, eval_metric, mutual_info_xx
from rgvcodes.distances import bhattacharyya, hamming, neg_mutual_info
from rgvcodes.dual import rc_dual
from rgvcodes.gridsearch import grid_oracle
from rgvcodes.primal import (
    PrimalProblem,
    beta_exponent_check,
    ck_exponent,
    compare_optimality,
    continuity_probe,
    ergv_primal,
    gamma,
    rate_limit_primal,
    rc_exponent,
)

pytestmark = pytest.mark.filterwarnings("ignore")

BSC = Channel.bsc(0.1)
ML = Metric.ml(BSC)
UNIFORM = np.array([0.5, 0.5])

# BSC(0.1), uniform input, ML metric, Bhattacharyya distance, Delta = 0.2, R = 0.05.
# Frozen from the conic solver; agrees with the dual route to 1e-10 and with
# the lattice oracle (an upper bound) to 3e-4.
E_BSC_BHATT = 0.17372269327704137


def test_gamma_cases():
    p = np.array([0.3, 0.7])
    v = p[:, None, None] * p[None, :, None] * BSC.w[:, None, :]
    assert gamma(v, BSC, 0.1) == pytest.approx(0.0, abs=1e-14)

    noiseless = Channel(np.eye(2))
    copy = np.zeros((2, 2, 2))
    copy[0, 0, 0] = copy[1, 1, 1] = 0.5
    assert gamma(copy, noiseless, 1e-12) == pytest.approx(math.log(2), abs=1e-9)

    rng = np.random.default_rng(1)
    for _ in range(5):
        v = rng.random((2, 2, 2))
        v /= v.sum()
        vxy = v.sum(1)
        kl = float(np.sum(vxy * np.log(vxy / (vxy.sum(1, keepdims=True) * BSC.w))))
        assert gamma(v, BSC, 0.2) >= kl - 1e-12


def test_pure_noise_has_zero_exponent():
    w = Channel.bsc(0.5)
    prob = PrimalProblem(0.1, UNIFORM, w, Metric.ml(w), hamming(), -0.1)
    assert ergv_primal(prob).value == pytest.approx(0.0, abs=1e-7)
    assert ck_exponent(0.1, UNIFORM, w, Metric.ml(w)).value == pytest.approx(0.0, abs=1e-7)


def test_vacuous_distance_gives_random_coding():
    rng = np.random.default_rng(2)
    w = Channel(rng.dirichlet(np.ones(3), size=3) * 0.9 + 0.1 / 3)
    p = np.array([0.2, 0.3, 0.5])
    q = Metric.ml(w)
    for r in (0.02, 0.08):
        e = ergv_primal(PrimalProblem(r, p, w, q, hamming(3), -1.0)).value
        assert e == pytest.approx(rc_exponent(r, p, w, q).value, abs=1e-7)
        assert e == pytest.approx(rc_dual(r, p, w, q).value, abs=1e-5)


def test_bsc_bhattacharyya_frozen_and_grid():
    prob = PrimalProblem(0.05, UNIFORM, BSC, ML, bhattacharyya(BSC), 0.2)
    res = ergv_primal(prob)
    assert res.value == pytest.approx(E_BSC_BHATT, abs=1e-7)
    g = grid_oracle(prob)
    assert g.value >= res.value - 1e-9  # the lattice only sees feasible points
    assert abs(g.value - res.value) <= 2e-3


def test_minimizer_is_feasible_and_attains_value():
    d = bhattacharyya(BSC)
    prob = PrimalProblem(0.05, UNIFORM, BSC, ML, d, 0.2)
    res = ergv_primal(prob)
    v = res.minimizer
    assert v.sum() == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(v.sum((1, 2)), UNIFORM, atol=1e-7)
    np.testing.assert_allclose(v.sum((0, 2)), UNIFORM, atol=1e-7)
    assert eval_metric(ML, v.sum(0)) >= eval_metric(ML, v.sum(1)) - 1e-7
    assert d(v.sum(2)) >= 0.2 - 1e-7
    assert gamma(v, BSC, 0.05) == pytest.approx(res.value, abs=1e-9)
    assert max(res.certificate["residuals"].values()) <= 1e-6


def test_infeasible_threshold_gives_inf():
    prob = PrimalProblem(0.05, UNIFORM, BSC, ML, hamming(), 1.5)
    assert ergv_primal(prob).value == math.inf


def test_rate_limit_hamming():
    delta = 0.01
    assert rate_limit_primal(UNIFORM, hamming(), 0.0, delta) == pytest.approx(math.log(2) - 2 * delta, abs=1e-6)
    assert rate_limit_primal(UNIFORM, hamming(), 1.0, delta) == pytest.approx(-2 * delta, abs=1e-12)
    # more room in the ball means a smaller limit
    assert rate_limit_primal(UNIFORM, hamming(), 0.1) > rate_limit_primal(UNIFORM, hamming(), 0.3)


def test_rate_limit_neg_mi_threshold():
    delta = 0.01
    for r in (0.05, 0.2, 0.5):
        limit = rate_limit_primal(UNIFORM, neg_mutual_info(), -(r + 2 * delta), delta)
        assert limit >= r - 1e-12


def test_ck_dominates_random_coding():
    for r in (0.02, 0.1, 0.2):
        assert ck_exponent(r, UNIFORM, BSC, ML).value >= rc_exponent(r, UNIFORM, BSC, ML).value - 1e-8


def test_ck_matches_neg_mi_at_small_delta():
    delta = 1e-4
    for r in (0.05, 0.2):
        prob = PrimalProblem(r, UNIFORM, BSC, ML, neg_mutual_info(), -(r + 2 * delta), delta)
        assert ergv_primal(prob).value == pytest.approx(ck_exponent(r, UNIFORM, BSC, ML).value, abs=1e-2)


def test_compare_optimality():
    delta = 1e-3
    r = 0.1
    self_cmp = compare_optimality(PrimalProblem(r, UNIFORM, BSC, ML, neg_mutual_info(), -(r + 2 * delta), delta))
    assert self_cmp
    assert self_cmp.values["exponent"] == pytest.approx(self_cmp.values["neg_mi_exponent"], abs=1e-9)
    for d, dc in ((hamming(), 0.15), (bhattacharyya(BSC), 0.1)):
        assert compare_optimality(PrimalProblem(r, UNIFORM, BSC, ML, d, dc, delta))


def test_compare_optimality_rejects_inadmissible_rate():
    with pytest.raises(ValueError):
        compare_optimality(PrimalProblem(0.6, UNIFORM, BSC, ML, hamming(), 0.3, 0.0))


def test_beta_check_at_zero_threshold():
    assert beta_exponent_check(0.1, UNIFORM, BSC, ML, 0.0, 1e-4)


def test_continuity_constant_for_exact_types():
    prob = PrimalProblem(0.05, UNIFORM, BSC, ML, hamming(), 0.2)
    rep = continuity_probe(prob, [4, 8, 16])
    np.testing.assert_allclose(rep.values, rep.baseline, atol=1e-9)


def test_continuity_trend_for_third():
    prob = PrimalProblem(0.05, np.array([1 / 3, 2 / 3]), BSC, ML, hamming(), 0.2)
    rep = continuity_probe(prob, [6, 12, 48, 96], n_min=48)
    assert rep.holds
    assert abs(rep.values[-1] - rep.baseline) <= 1e-2


def test_degenerate_input_is_constant():
    prob = PrimalProblem(0.05, np.array([1.0, 0.0]), BSC, ML, hamming(), -0.1)
    rep = continuity_probe(prob, [3, 5, 9])
    assert len(set(np.round(rep.values, 12))) == 1


def test_rate_limit_minimizer_mi_is_consistent():
    # the limit at a mid threshold sits between the two trivial extremes
    limit = rate_limit_primal(UNIFORM, hamming(), 0.2)
    assert 0.0 < limit < math.log(2)
    t = 0.1  # Hamming 0.2 with equal marginals means off-diagonal mass 0.1 each
    pxx = np.array([[0.5 - t, t], [t, 0.5 - t]])
    assert limit == pytest.approx(mutual_info_xx(pxx), abs=1e-6)
