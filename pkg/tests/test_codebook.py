import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgvcodes import codebook as cbk
from rgvcodes.codebook import (
    Codebook,
    CostConfig,
    RgvConfig,
    check_packing,
    cost_generate,
    exact_tuple_law,
    generate,
    is_valid_codebook,
    lemma1_check,
    lemma2_check,
    lemma3_check,
    lemma4_check,
    type_class,
    volume,
)
from rgvcodes.core import Channel, Metric, TypeDescriptor, type_class_size
from rgvcodes.distances import additive, chernoff, hamming

pytestmark = pytest.mark.filterwarnings("ignore")

HAM = hamming()
T22 = TypeDescriptor((2, 2))


def tiny(m, delta_cap=0.25, delta=0.05):
    return RgvConfig(4, m, T22, HAM, delta_cap, delta)


# --- enumeration -----------------------------------------------------------

def test_type_class_enumeration():
    seqs = type_class(TypeDescriptor((2, 1)))
    assert [tuple(s) for s in seqs] == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert len(type_class(TypeDescriptor((1, 2, 2)))) == 30


@pytest.mark.parametrize("delta_cap, expect", [(-0.1, 0), (1.0, 6), (0.25, 1), (0.5, 5)])
def test_volume_small(delta_cap, expect):
    assert volume(T22, HAM, delta_cap) == expect
    assert volume(T22, HAM, delta_cap, method="sequences") == expect


@given(st.lists(st.integers(0, 3), min_size=2, max_size=3).filter(lambda c: 2 <= sum(c) <= 7),
       st.floats(-0.2, 1.2), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_volume_methods_agree(counts, delta_cap, seed):
    rng = np.random.default_rng(seed)
    k = len(counts)
    t = rng.random((k, k))
    d = additive((t + t.T) / 2)
    td = TypeDescriptor(tuple(counts))
    assert volume(td, d, delta_cap) == volume(td, d, delta_cap, method="sequences")


# --- packing ---------------------------------------------------------------

def test_packing_examples():
    assert check_packing(tiny(1))
    rep = check_packing(tiny(4))
    assert rep.ok and rep.volume == 1 and rep.type_class_size == 6
    assert rep.lhs == pytest.approx(4 * math.exp(0.2), rel=1e-12)
    assert not check_packing(tiny(6))
    assert check_packing(tiny(6)).lhs == pytest.approx(6 * math.exp(0.2), rel=1e-12)


def test_vacuous_threshold_always_packs():
    assert check_packing(RgvConfig(4, 50, T22, HAM, -0.5, 0.5))


def test_config_rejects_bad_input():
    with pytest.raises(ValueError):
        RgvConfig(5, 2, T22, HAM, 0.2)
    w = Channel(np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]]))
    asym = chernoff(w, Metric.additive(np.array([[0.0, -1.0, -2.0], [-1.5, 0.3, 0.1]])), 0.3)
    assert not asym.symmetric
    with pytest.raises(ValueError):
        RgvConfig(4, 2, T22, asym, 0.2)


# --- sampling --------------------------------------------------------------

def test_generate_refuses_when_packing_fails():
    with pytest.raises(ValueError):
        generate(tiny(6), 0)


def test_forced_complement():
    cfg = RgvConfig(2, 2, TypeDescriptor((1, 1)), HAM, 0.4, 0.0)
    firsts = set()
    for seed in range(20):
        cb = generate(cfg, seed)
        a, b = cb.words
        np.testing.assert_array_equal(b, 1 - a)
        firsts.add(tuple(a))
    assert firsts == {(0, 1), (1, 0)}


def test_vacuous_threshold_is_iid_uniform():
    cfg = RgvConfig(4, 2, T22, HAM, -0.5, 0.0)
    seqs = [tuple(s) for s in type_class(T22)]
    pair_counts = {}
    draws = 3000
    for seed in range(draws):
        a, b = generate(cfg, seed).words
        key = (seqs.index(tuple(a)), seqs.index(tuple(b)))
        pair_counts[key] = pair_counts.get(key, 0) + 1
    assert len(pair_counts) == 36  # repeats included
    expect = draws / 36
    chi2 = sum((c - expect) ** 2 / expect for c in pair_counts.values())
    assert chi2 < 70  # 35 degrees of freedom; 99.9% quantile is about 66.6


@pytest.mark.parametrize("seed", range(5))
def test_generated_codebooks_are_valid(seed):
    for cfg in (tiny(3), RgvConfig(8, 5, TypeDescriptor((4, 4)), HAM, 0.2, 0.05)):
        assert is_valid_codebook(generate(cfg, seed), cfg)


def test_rejection_path_for_large_type_class():
    t = TypeDescriptor((12, 12))
    assert type_class_size(t)[0] > cbk.LIVE_SET_LIMIT
    cfg = RgvConfig(24, 6, t, HAM, 0.3, 0.01)
    cb = generate(cfg, 11)
    assert cb.meta["sampler"] == "rejection"
    assert is_valid_codebook(cb, cfg)


def test_same_seed_same_codebook():
    cfg = RgvConfig(24, 6, TypeDescriptor((12, 12)), HAM, 0.3, 0.01)
    assert generate(cfg, 3).to_text() == generate(cfg, 3).to_text()
    assert generate(cfg, 3).to_text() != generate(cfg, 4).to_text()
    assert generate(tiny(3), 3).to_text() == generate(tiny(3), 3).to_text()


def test_codebook_text_roundtrip():
    cb = generate(RgvConfig(8, 5, TypeDescriptor((4, 4)), HAM, 0.2, 0.05), 9)
    back = Codebook.from_text(cb.to_text())
    np.testing.assert_array_equal(back.words, cb.words)
    assert (back.nx, back.seed) == (2, 9)
    assert Codebook.from_text(Codebook(cb.words, 2).to_text()).seed is None


@pytest.mark.parametrize("text", ["4 2 2 0\n0 1 1 0\n", "4 1 2 0\n0 1 2 0\n", "3 1 2 0\n0 1 1 0\n"])
def test_codebook_text_rejects_malformed(text):
    with pytest.raises(ValueError):
        Codebook.from_text(text)


# --- exact laws and the bracket checks -------------------------------------

def test_single_word_law_is_uniform():
    law = exact_tuple_law(tiny(1))
    assert set(law.probs.values()) == {Fraction(1, 6)}
    assert law.total() == 1


def test_marginals_are_exactly_uniform():
    rep = lemma4_check(tiny(3))
    assert rep.ok and rep.checks == 18
    law = exact_tuple_law(tiny(3))
    for k in range(3):
        for pr in law.marginal((k,)).values():
            assert pr == Fraction(1, 6)
            assert abs(float(pr) - 1 / 6) <= 1e-12


def test_pairwise_bracket():
    cfg = tiny(3)
    rep = lemma2_check(cfg)
    assert rep.ok
    dn = math.exp(-0.2) / (1 - math.exp(-0.2))
    assert rep.details["delta_n"] == pytest.approx(dn, rel=1e-14)
    assert rep.details["lower"] == pytest.approx((1 - 4 * dn**2) * math.exp(-2 * dn) / 36, rel=1e-14)
    assert rep.details["upper"] == pytest.approx(1 / ((1 - math.exp(-0.2)) ** 2 * 36), rel=1e-14)


def test_candidate_set_bracket():
    for m in (2, 3):
        assert lemma1_check(tiny(m))
    rep = lemma1_check(RgvConfig(4, 3, T22, HAM, -0.5, 0.05))
    assert rep.ok and rep.details["min_ratio"] == 1.0


def test_triple_bound_and_zero_inside_balls():
    assert lemma3_check(tiny(3))
    vacuous = RgvConfig(4, 3, T22, HAM, -0.5, 0.5)
    law = exact_tuple_law(vacuous)
    assert set(law.probs.values()) == {Fraction(1, 216)}
    assert lemma3_check(vacuous)
    law = exact_tuple_law(tiny(3))
    for trip, pr in law.probs.items():
        close = any(law.dist[a, b] <= 0.25 for a, b in itertools.combinations(trip, 2))
        assert not (close and pr != 0)


# --- cost-constrained construction -----------------------------------------

def test_cost_generate_without_constraints_is_iid():
    cfg = CostConfig(6, 2, np.array([0.3, 0.7]), HAM, -1.0, 0.0)
    ones = sum(int(cost_generate(cfg, s).words.sum()) for s in range(300))
    assert abs(ones / (300 * 12) - 0.7) < 4 * math.sqrt(0.21 / 3600)


def test_cost_generate_respects_distance_and_shell():
    cfg = CostConfig(8, 3, np.array([0.5, 0.5]), HAM, 0.2, 0.05, (np.array([0.0, 1.0]),), 0.125)
    for s in range(5):
        cb = cost_generate(cfg, s)
        for w in cb.words:
            assert abs(w.mean() - 0.5) <= 0.125 + 1e-12
        for a, b in itertools.combinations(cb.words, 2):
            assert HAM.sequences(a, b) > 0.2


def test_acceptance_rate_bound():
    est = cbk.acceptance_rates(CostConfig(16, 4, np.array([0.5, 0.5]), HAM, 0.2, 0.05), 2000, 4)
    assert est.ok
    assert est.bound == pytest.approx(1 - math.exp(-0.8))


def test_ball_probability_is_binomial_tail():
    n = 32
    for dc in (0.1, 0.3):
        pr = cbk.ball_probability([0.5, 0.5], HAM, dc, np.zeros(n, dtype=int))
        k = math.floor(dc * n + 1e-9)
        assert pr == Fraction(sum(math.comb(n, j) for j in range(k + 1)), 2**n)


@pytest.mark.parametrize("delta_cap", [-0.1, 0.1, 0.25, 1.0])
def test_property_a(delta_cap):
    rep = cbk.property_a_check([0.5, 0.5], HAM, delta_cap, 0.0, 32)
    assert rep.ok, rep
    if delta_cap < 0:
        assert rep.lhs == math.inf
    if delta_cap >= 1:
        assert rep.lhs == pytest.approx(0.0, abs=1e-12)
        assert rep.rhs <= 1e-9


def test_property_a_needs_additive_distance():
    from rgvcodes.distances import neg_mutual_info

    with pytest.raises(ValueError):
        cbk.property_a_check([0.5, 0.5], neg_mutual_info(), 0.1, 0.0, 8)


def test_cost_properties_on_tiny_instance():
    props = cbk.cost_properties_check(CostConfig(4, 3, np.array([0.6, 0.4]), HAM, 0.1, 0.3,
                                                 (np.array([0.0, 1.0]),), 0.25))
    for key in ("b", "c", "d"):
        assert props[key].ok, (key, props[key].violations[:3])
    assert props["law"].total() == 1
    assert sum(props["px"]) == 1


def test_shell_sensitivity_monotone():
    rows = cbk.shell_sensitivity([0.3, 0.7], (np.array([0.0, 1.0]),), [0.0, 0.1, 0.3, math.inf], 10)
    probs = [p for _, p in rows]
    assert probs == sorted(probs)
    assert probs[-1] == pytest.approx(1.0)
