import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgvcodes.core import Channel, Metric
from rgvcodes.distances import additive, bhattacharyya, hamming
from rgvcodes.dual import (
    DualParams,
    chernoff_substitution,
    check_rate_condition_consistency,
    dual_objective,
    ergv_dual,
    expurgated_dual,
    rate_dual_objective,
    rate_limit_dual,
    rc_dual,
    rc_dual_objective,
)
from rgvcodes.primal import PrimalProblem, ergv_primal, rate_limit_primal

pytestmark = pytest.mark.filterwarnings("ignore")

BSC = Channel.bsc(0.1)
ML = Metric.ml(BSC)
UNIFORM = np.array([0.5, 0.5])


def _random_problem(seed, nx, ny):
    rng = np.random.default_rng(seed)
    w = Channel(0.9 * rng.dirichlet(np.ones(ny), size=nx) + 0.1 / ny)
    p = 0.7 * rng.dirichlet(np.ones(nx)) + 0.3 / nx
    q = Metric.ml(w)
    t = rng.random((nx, nx))
    t = (t + t.T) / 2
    np.fill_diagonal(t, 0.0)
    d = additive(t)
    indep = float(p @ t @ p)
    return w, p, q, d, 0.5 * indep


def test_rho_zero_gives_zero():
    d = bhattacharyya(BSC)
    params = DualParams(0.0, 0.4, 1.3, np.array([0.2, -0.7]))
    assert dual_objective(params, 0.1, UNIFORM, BSC, ML, d, 0.2) == 0.0


@given(st.floats(-5, 5), st.floats(0.05, 1.0), st.floats(0.0, 2.0), st.floats(0.0, 3.0))
@settings(max_examples=40, deadline=None)
def test_shift_invariance(c, rho, rr, s):
    p = np.array([0.3, 0.7])
    d = hamming()
    a = np.array([0.4, -0.1])
    v0 = dual_objective(DualParams(rho, rr, s, a), 0.05, p, BSC, ML, d, 0.2)
    v1 = dual_objective(DualParams(rho, rr, s, a + c), 0.05, p, BSC, ML, d, 0.2)
    assert v1 == pytest.approx(v0, abs=1e-10)


def test_rr_zero_matches_independent_random_coding_dual():
    rng = np.random.default_rng(3)
    w = Channel(rng.dirichlet(np.ones(3), size=3))
    q = Metric.additive(rng.normal(size=(3, 3)))
    p = np.array([0.2, 0.5, 0.3])
    d = hamming(3)
    for _ in range(10):
        rho, s = rng.uniform(0, 1), rng.uniform(0, 3)
        a = rng.normal(size=3)
        v = dual_objective(DualParams(rho, 0.0, s, a), 0.07, p, w, q, d, 0.4)
        assert v == pytest.approx(rc_dual_objective(rho, s, a, 0.07, p, w, q), abs=1e-10)


@pytest.mark.parametrize("seed, nx, ny", [(1, 2, 2), (2, 2, 3), (3, 3, 3), (4, 3, 2)])
def test_dual_equals_primal(seed, nx, ny):
    w, p, q, d, dc = _random_problem(seed, nx, ny)
    r = 0.3 * rate_limit_primal(p, d, dc)
    ep = ergv_primal(PrimalProblem(r, p, w, q, d, dc)).value
    res = ergv_dual(r, p, w, q, d, dc)
    assert res.value == pytest.approx(ep, abs=1e-2)
    # weak duality: the reported parameters cannot beat the primal
    assert dual_objective(res.params, r, p, w, q, d, dc) <= ep + 1e-4


def test_weak_duality_at_random_params():
    w, p, q, d, dc = _random_problem(7, 3, 3)
    r = 0.05
    ep = ergv_primal(PrimalProblem(r, p, w, q, d, dc)).value
    rng = np.random.default_rng(8)
    for _ in range(25):
        params = DualParams(rng.uniform(0, 1), rng.uniform(0, 5), rng.uniform(0, 5), rng.normal(size=3))
        assert dual_objective(params, r, p, w, q, d, dc) <= ep + 1e-4


def test_pure_noise_dual_is_zero():
    w = Channel.bsc(0.5)
    assert ergv_dual(0.1, UNIFORM, w, Metric.ml(w), hamming(), -0.1).value == pytest.approx(0.0, abs=1e-8)


def test_frozen_bsc_value_by_dual_route():
    # same instance as the primal frozen value; the two routes stay independent
    res = ergv_dual(0.05, UNIFORM, BSC, ML, bhattacharyya(BSC), 0.2)
    assert res.value == pytest.approx(0.17372269327704137, abs=1e-6)


@pytest.mark.parametrize("seed", [1, 2, 5])
def test_rate_limit_dual_equals_primal(seed):
    _, p, _, d, dc = _random_problem(seed, 2, 2)
    assert rate_limit_dual(p, d, dc, 0.01) == pytest.approx(rate_limit_primal(p, d, dc, 0.01), abs=1e-3)


def test_rate_limit_dual_trivial_point_and_copy_limit():
    delta = 0.01
    d = hamming()
    assert rate_dual_objective(0.0, np.zeros(2), UNIFORM, d, 0.2) == pytest.approx(0.0, abs=1e-14)
    assert rate_limit_dual(UNIFORM, d, 0.2, delta) >= -2 * delta
    assert rate_limit_dual(UNIFORM, d, 0.0, delta) == pytest.approx(math.log(2) - 2 * delta, abs=1e-5)


def test_rate_limit_dual_negative_threshold_is_unbounded():
    # no pair of sequences is that close, so no rate is excluded
    assert rate_limit_dual(UNIFORM, hamming(), -0.1) == math.inf
    assert rate_limit_primal(UNIFORM, hamming(), -0.1) == math.inf


def test_expurgated_cases():
    w = Channel.bsc(0.5)
    assert expurgated_dual(0.05, UNIFORM, w, Metric.ml(w)).value == pytest.approx(0.0, abs=1e-9)
    vals = [expurgated_dual(r, UNIFORM, BSC, ML).value for r in (0.01, 0.05, 0.2, 0.5, 0.7)]
    assert all(a >= b - 1e-7 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0


def test_chernoff_substitution_reproduces_expurgated():
    for r in (0.003, 0.01):
        ex = expurgated_dual(r, UNIFORM, BSC, ML)
        val, _, _ = chernoff_substitution(r, UNIFORM, BSC, ML, ex.s, ex.rho_prime, ex.a)
        assert val == pytest.approx(ex.raw, abs=1e-3)


@pytest.mark.parametrize("rho_prime", [0.0, 1.0, 2.5])
def test_rate_condition_consistency(rho_prime):
    assert check_rate_condition_consistency(UNIFORM, BSC, ML, 0.5, rho_prime)
    rng = np.random.default_rng(12)
    w = Channel(rng.dirichlet(np.ones(3), size=3) * 0.9 + 0.1 / 3)
    rep = check_rate_condition_consistency(np.array([0.2, 0.3, 0.5]), w, Metric.ml(w), 0.7, rho_prime)
    assert rep, rep


def test_rc_dual_matches_primal_random_coding():
    from rgvcodes.primal import rc_exponent

    for r in (0.02, 0.1, 0.25):
        assert rc_dual(r, UNIFORM, BSC, ML).value == pytest.approx(rc_exponent(r, UNIFORM, BSC, ML).value, abs=1e-6)
