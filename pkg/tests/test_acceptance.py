"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary
(and immediately with ``pytest -s``).
"""
import numpy as np
import pytest

from rgvcodes import verify
from rgvcodes.corpus import corpus

pytestmark = pytest.mark.filterwarnings("ignore")


@pytest.fixture(scope="module")
def instances():
    return corpus()


def report(log, num, title, res):
    worst = "; ".join(f"{c.name}: {c.detail}" for c in res.failures()[:3])
    line = f"{title} [{res.summary()}]" + (f" failures: {worst}" if worst else "")
    log.append((num, res.ok, line))
    print(f"criterion {num}: {'PASS' if res.ok else 'FAIL'}  {line}")
    assert res.ok, line


def test_c01_primal_dual_equivalence(instances, acceptance_log):
    assert len(instances) >= 20
    assert {p.problem.w.w.shape for p in instances} == {(2, 2), (2, 3), (3, 2), (3, 3)}
    res = verify.duality_suite(instances, tol=1e-2, rate_tol=1e-3)
    report(acceptance_log, 1, "primal and dual exponents (1e-2) and rate limits (1e-3)", res)


def test_c02_solver_against_grid(instances, acceptance_log):
    binary = [i for i in instances if i.problem.w.w.shape == (2, 2)]
    assert binary
    res = verify.grid_suite(instances, tol=2e-3)
    assert len(res.checks) == len(binary)
    report(acceptance_log, 2, "solver vs lattice oracle at 1/400 (2e-3)", res)


def test_c03_special_case_recoveries(instances, acceptance_log):
    res = verify.recoveries_suite(instances[:4], points=20, tol_rc=1e-6, tol_ex=1e-3)
    ex = [c for c in res.checks if c.name.endswith("/substitution")]
    assert len(ex) >= 10  # 5 rates on each of two channels
    report(acceptance_log, 3, "random-coding dual (1e-6) and expurgated substitution (1e-3)", res)


def test_c04_neg_mi_dominates(acceptance_log):
    res = verify.optimality_suite(delta=1e-4, points=10, tol=2e-3, ck_tol=1e-2)
    report(acceptance_log, 4, "neg-MI exponent dominates each admissible (d, Delta); equals CK (1e-2)", res)


def test_c05_beta_distance(acceptance_log):
    res = verify.beta_suite(rates=(0.02, 0.05, 0.1, 0.15, 0.2), delta=1e-4, tol=1e-3, env_tol=1e-2)
    report(acceptance_log, 5, "beta exponent >= Delta - 1e-3; envelope matches neg-MI (1e-2)", res)


def test_c06_exact_lemma_suite(acceptance_log):
    res = verify.lemmas_suite()
    report(acceptance_log, 6, "candidate sets, pairwise/triple brackets, uniform marginals (exact)", res)


def test_c07_simulation_consistency(acceptance_log):
    res = verify.simulation_suite(trials=100_000)
    report(acceptance_log, 7, "exact pe vs oracle, Monte Carlo 3 sigma, tracked-constant sandwich", res)


def test_c08_de_caen(acceptance_log):
    res = verify.decaen_suite(systems=100)
    report(acceptance_log, 8, "de Caen inequality on 100 random systems and pairwise-error systems", res)


def test_c09_cost_constrained(acceptance_log):
    res = verify.cost_suite(n_a=32, draws=10_000)
    report(acceptance_log, 9, "ball probability at n=32, acceptance rate 3 sigma, marginal brackets", res)


def test_c10_empirical_trend(acceptance_log):
    res = verify.trend_suite(trials=1_000_000, r=0.1, delta_cap=0.1, delta=0.01, band=0.1)
    slope = next(c for c in res.checks if c.name == "slope").detail
    assert np.isfinite(slope["exponent"])
    report(acceptance_log, 10, "fitted slope positive and <= exponent + 0.1 over n = 8..20", res)
