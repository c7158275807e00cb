"""Check batteries shared by the ``verify`` subcommand and the acceptance tests.

Every suite returns a :class:`SuiteResult` holding named checks with the
measured quantities, so failures carry their own diagnostics.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import codebook as cbk
from . import simulate as sim
from .core import Channel, Metric, TypeDescriptor, quantize_type
from .distances import bhattacharyya, chernoff, hamming, neg_mutual_info, symmetrize
from .dual import (
    DualParams,
    chernoff_substitution,
    dual_objective,
    ergv_dual,
    expurgated_dual,
    rate_limit_dual,
    rc_dual,
    rc_dual_objective,
)
from .primal import (
    PrimalProblem,
    beta_envelope,
    beta_threshold,
    ck_exponent,
    ergv_primal,
    rate_limit_primal,
)


@dataclass
class Check:
    name: str
    ok: bool
    detail: dict = field(default_factory=dict)


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(c.ok for c in self.checks)

    def add(self, name, ok, **detail):
        self.checks.append(Check(name, bool(ok), detail))

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def summary(self) -> str:
        n_ok = sum(c.ok for c in self.checks)
        return f"{self.suite}: {'PASS' if self.ok else 'FAIL'} ({n_ok}/{len(self.checks)} checks, {self.seconds:.1f}s)"


def _timed(fn: Callable) -> Callable:
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def bsc_setup(eps: float = 0.1):
    w = Channel.bsc(eps)
    return w, np.array([0.5, 0.5]), Metric.ml(w)


def ternary_channel() -> Channel:
    """A fixed, moderately noisy 3-input 3-output channel."""
    return Channel(np.array([[0.80, 0.15, 0.05],
                             [0.10, 0.75, 0.15],
                             [0.05, 0.20, 0.75]]))


def random_ternary_channel(seed: int = 11) -> Channel:
    rng = np.random.default_rng(seed)
    w = 0.6 * np.eye(3) + 0.4 * rng.dirichlet(np.ones(3), 3)
    return Channel(w / w.sum(1, keepdims=True))


# ---------------------------------------------------------------------------
# exponent suites


@_timed
def duality_suite(instances, tol: float = 1e-2, rate_tol: float = 1e-3) -> SuiteResult:
    """Primal and dual exponents, and primal and dual rate limits, agree."""
    res = SuiteResult("duality")
    for inst in instances:
        pr = inst.problem
        ep = ergv_primal(pr).value
        ed = ergv_dual(pr.r, pr.p, pr.w, pr.q, pr.d, pr.delta_cap).value
        res.add(f"{inst.name}/exponent", abs(ep - ed) <= tol, primal=ep, dual=ed)
        rp = rate_limit_primal(pr.p, pr.d, pr.delta_cap, pr.delta)
        rd = rate_limit_dual(pr.p, pr.d, pr.delta_cap, pr.delta)
        res.add(f"{inst.name}/rate-limit", abs(rp - rd) <= rate_tol, primal=rp, dual=rd)
    return res


@_timed
def grid_suite(instances, tol: float = 2e-3) -> SuiteResult:
    """Solver agrees with the lattice oracle on binary-input binary-output instances."""
    from .gridsearch import grid_oracle

    res = SuiteResult("grid")
    for inst in instances:
        pr = inst.problem
        if pr.w.nx != 2 or pr.w.ny != 2:
            continue
        ep = ergv_primal(pr).value
        g = grid_oracle(pr)
        res.add(inst.name, abs(ep - g.value) <= tol, solver=ep, grid=g.value, evaluations=g.evaluations)
    return res


@_timed
def recoveries_suite(instances=(), points: int = 20, seed: int = 3, rates=None,
                     tol_rc: float = 1e-6, tol_ex: float = 1e-3) -> SuiteResult:
    """Random coding (rr = 0) and expurgated (Chernoff distance) special cases."""
    res = SuiteResult("recoveries")
    rng = np.random.default_rng(seed)
    w, p, q = bsc_setup()
    cases = [("bsc", 0.05, p, w, q)]
    for inst in instances:
        pr = inst.problem
        cases.append((inst.name, pr.r, pr.p, pr.w, pr.q))
    for name, r, pp, ww, qq in cases:
        worst = 0.0
        for _ in range(points):
            rho, s = rng.uniform(0, 1), rng.uniform(0, 3)
            a = rng.normal(size=len(pp))
            dummy = np.zeros((len(pp), len(pp)))
            v1 = dual_objective(DualParams(rho, 0.0, s, a), r, pp, ww, qq, dummy, 0.0)
            v2 = rc_dual_objective(rho, s, a, r, pp, ww, qq)
            worst = max(worst, abs(v1 - v2))
        res.add(f"{name}/rc-points", worst <= tol_rc, max_abs_diff=worst, points=points)
        zero = np.zeros((len(pp), len(pp)))
        e1 = ergv_dual(r, pp, ww, qq, zero, 0.0, fix_rr=True).value
        e2 = rc_dual(r, pp, ww, qq).value
        res.add(f"{name}/rc-sup", abs(e1 - e2) <= tol_rc, ergv_rr0=e1, rc=e2)
    # low rates, where the optimal rho' is strictly positive on both channels
    w3 = random_ternary_channel()
    chans = [("bsc", bsc_setup(), (0.001, 0.003, 0.006, 0.01, 0.02)),
             ("ternary", (w3, np.ones(3) / 3, Metric.ml(w3)), (0.001, 0.002, 0.003, 0.006, 0.01))]
    for name, (ww, pp, qq), default_rates in chans:
        for r in rates or default_rates:
            ex = expurgated_dual(r, pp, ww, qq)
            sub, dc, _ = chernoff_substitution(r, pp, ww, qq, ex.s, ex.rho_prime, ex.a)
            res.add(f"{name}/R={r}/substitution", abs(sub - ex.raw) <= tol_ex,
                    expurgated=ex.raw, substituted=sub, delta_cap=dc, rho_prime=ex.rho_prime)
            full = ergv_dual(r, pp, ww, qq, chernoff(ww, qq, ex.s), dc).value
            res.add(f"{name}/R={r}/optimized", abs(full - ex.value) <= tol_ex,
                    expurgated=ex.value, ergv_dual=full)
    return res


def admissible_max(p, d, r, delta, lo=-1.0, hi=20.0, iters=60) -> float:
    """Largest threshold for which the rate condition still holds (bisection)."""
    if rate_limit_primal(p, d, lo, delta) < r:
        return -math.inf
    for _ in range(iters):
        mid = (lo + hi) / 2
        if rate_limit_primal(p, d, mid, delta) >= r:
            lo = mid
        else:
            hi = mid
    return lo


@_timed
def optimality_suite(cases=None, delta: float = 1e-4, points: int = 10,
                     tol: float = 2e-3, ck_tol: float = 1e-2) -> SuiteResult:
    """Negative mutual information at -(R+2 delta) dominates every admissible (d, Delta)."""
    res = SuiteResult("optimality")
    if cases is None:
        w, p, q = bsc_setup()
        w3 = ternary_channel()
        cases = [("bsc", 0.05, p, w, q), ("bsc", 0.2, p, w, q),
                 ("ternary", 0.1, np.ones(3) / 3, w3, Metric.ml(w3))]
    for name, r, p, w, q in cases:
        ref = ergv_primal(PrimalProblem(r, p, w, q, neg_mutual_info(), -(r + 2 * delta), delta)).value
        ck = ck_exponent(r, p, w, q).value
        res.add(f"{name}/R={r}/ck", abs(ref - ck) <= ck_tol, neg_mi=ref, ck=ck)
        dists = [("hamming", hamming(w.nx)), ("bhattacharyya", bhattacharyya(w)),
                 ("chernoff-sym", symmetrize(chernoff(w, q, 0.3)))]
        for dname, d in dists:
            top = admissible_max(p, d, r, delta)
            worst, arg = -math.inf, None
            for dc in np.linspace(0.0, top, points):
                e = ergv_primal(PrimalProblem(r, p, w, q, d, float(dc), delta)).value
                if e - ref > worst:
                    worst, arg = e - ref, float(dc)
            res.add(f"{name}/R={r}/{dname}", worst <= tol, max_excess=worst, at_delta=arg,
                    sweep_top=top, neg_mi=ref)
    return res


@_timed
def beta_suite(rates=(0.02, 0.05, 0.1, 0.15, 0.2), delta: float = 1e-4, points: int = 6,
               tol: float = 1e-3, env_tol: float = 1e-2) -> SuiteResult:
    """Beta distance: exponent at least Delta, and its envelope matches the neg-MI exponent."""
    res = SuiteResult("beta")
    w, p, q = bsc_setup()
    for r in rates:
        th = beta_threshold(r, p, w, q, delta)
        # the top of the sweep sits just inside the threshold so rounding cannot drop it
        env, rows = beta_envelope(r, p, w, q, delta, np.linspace(0.0, th - 1e-7, points))
        ref = ergv_primal(PrimalProblem(r, p, w, q, neg_mutual_info(), -(r + 2 * delta), delta)).value
        worst = min((e - dc for dc, e in rows), default=math.inf)
        res.add(f"R={r}/exponent>=Delta", bool(rows) and worst >= -tol, min_margin=worst, thresholds=len(rows))
        res.add(f"R={r}/envelope", abs(env - ref) <= env_tol, envelope=env, neg_mi=ref, threshold=th)
    return res


# ---------------------------------------------------------------------------
# finite-length suites


def lemma_configs():
    t = TypeDescriptor((2, 2))
    return [cbk.RgvConfig(4, m, t, hamming(), 0.25, 0.05) for m in (2, 3)]


@_timed
def lemmas_suite(configs=None) -> SuiteResult:
    """Exact brackets on candidate-set sizes and codeword marginals."""
    res = SuiteResult("lemmas")
    for cfg in configs or lemma_configs():
        tag = f"n={cfg.n},m={cfg.m}"
        law = cbk.exact_tuple_law(cfg)
        res.add(f"{tag}/normalised", law.total() == 1, total=str(law.total()))
        r1 = cbk.lemma1_check(cfg)
        res.add(f"{tag}/candidate-set", r1.ok, checks=r1.checks, **r1.details)
        r2 = cbk.lemma2_check(cfg, law)
        res.add(f"{tag}/pairwise", r2.ok, checks=r2.checks, violations=len(r2.violations), **r2.details)
        if cfg.m >= 3:
            r3 = cbk.lemma3_check(cfg, law)
            res.add(f"{tag}/triple", r3.ok, checks=r3.checks, violations=len(r3.violations), **r3.details)
        r4 = cbk.lemma4_check(cfg, law)
        res.add(f"{tag}/marginal", r4.ok, checks=r4.checks, target=str(r4.details["target"]))
    return res


@_timed
def decaen_suite(systems: int = 100, seed: int = 8) -> SuiteResult:
    """de Caen's union bound on random event systems and on codeword pairwise-error events."""
    res = SuiteResult("decaen")
    rng = np.random.default_rng(seed)
    bad = 0
    min_gap = None
    for _ in range(systems):
        ind, meas = sim.random_event_system(rng, int(rng.integers(1, 7)), int(rng.integers(2, 13)))
        rep = sim.de_caen_check(ind, meas)
        bad += not rep.ok
        gap = rep.union - rep.bound
        min_gap = gap if min_gap is None else min(min_gap, gap)
    res.add("random-systems", bad == 0, systems=systems, failures=bad, min_gap=float(min_gap))
    w, _, q = bsc_setup()
    for cfg in lemma_configs():
        bad = count = 0
        for *_, ind, meas in sim.pairwise_event_systems(cfg, w, q):
            count += 1
            bad += not sim.de_caen_check(ind, meas).ok
        res.add(f"pairwise-errors/m={cfg.m}", bad == 0, systems=count, failures=bad)
    return res


def tiny_instances():
    """Small configurations for the exact error-probability checks."""
    ham = hamming()
    w, _, q = bsc_setup()
    w2 = Channel.bsc(0.2)
    mismatched = Metric.additive(np.array([[0.0, -1.0], [-1.5, 0.2]]))
    return [
        ("n2-complement", cbk.RgvConfig(2, 2, TypeDescriptor((1, 1)), ham, 0.4, 0.0), w, q, True),
        ("n4-m2", cbk.RgvConfig(4, 2, TypeDescriptor((2, 2)), ham, 0.25, 0.05), w, q, True),
        ("n4-m3", cbk.RgvConfig(4, 3, TypeDescriptor((2, 2)), ham, 0.25, 0.05), w, q, True),
        ("n4-m3-mismatched", cbk.RgvConfig(4, 3, TypeDescriptor((2, 2)), ham, 0.25, 0.05), w2, mismatched, True),
        ("n3-skewed", cbk.RgvConfig(3, 2, TypeDescriptor((2, 1)), ham, 0.5, 0.1), w2, Metric.ml(w2), True),
        ("n6-m3", cbk.RgvConfig(6, 3, TypeDescriptor((3, 3)), ham, 0.2, 0.2), w, q, False),
    ]


@_timed
def simulation_suite(trials: int = 100_000, seed: int = 1, instances=None) -> SuiteResult:
    """Exact error probability versus brute force, Monte Carlo, and the tracked-constant sandwich."""
    res = SuiteResult("simulation")
    for name, cfg, w, q, brute in instances or tiny_instances():
        pe = sim.exact_pe(cfg, w, q)
        if brute:
            bf = sim.exact_pe_bruteforce(cfg, w, q)
            res.add(f"{name}/oracle", pe == bf, exact=float(pe), brute_force=float(bf))
        mc = sim.monte_carlo(cfg, w, q, trials, (seed, cfg.n, cfg.m))
        p = float(pe)
        sigma = math.sqrt(p * (1 - p) / trials)
        z = abs(mc.pe_estimate - p) / sigma if sigma > 0 else (0.0 if mc.pe_estimate == p else math.inf)
        res.add(f"{name}/monte-carlo", z <= 3.0, exact=p, estimate=mc.pe_estimate, z=z, backend=mc.backend)
        sw = sim.sandwich_check(cfg, w, q)
        res.add(f"{name}/sandwich", sw.ok, pe=p, upper=float(sw.upper), lower=float(sw.lower),
                lower_tracked=float(sw.lower_tracked), lower_de_caen=float(sw.lower_de_caen),
                **{f"holds_{k}": v for k, v in sw.checks.items()})
    return res


def cost_tiny_config() -> cbk.CostConfig:
    return cbk.CostConfig(4, 3, np.array([0.6, 0.4]), hamming(), 0.1, 0.3, (np.array([0.0, 1.0]),), 0.25)


@_timed
def cost_suite(n_a: int = 32, draws: int = 10_000, seed: int = 4) -> SuiteResult:
    """Cost-constrained construction: ball probability, acceptance rate, marginal brackets."""
    res = SuiteResult("cost")
    p = np.array([0.5, 0.5])
    ham = hamming()
    for dc in (-0.1, 0.1, 0.2, 0.3, 1.0):
        rep = cbk.property_a_check(p, ham, dc, 0.0, n_a)
        res.add(f"ball/n={n_a}/Delta={dc}", rep.ok, lhs=rep.lhs, rhs=rep.rhs)
    acc_cfg = cbk.CostConfig(16, 4, p, ham, 0.2, 0.05)
    est = cbk.acceptance_rates(acc_cfg, draws, seed)
    res.add("acceptance", est.ok, mu=est.mu_hat, sigma=est.sigma, bound=est.bound, draws=draws)
    props = cbk.cost_properties_check(cost_tiny_config())
    for key in ("b", "c", "d"):
        rep = props[key]
        res.add(f"tiny/{key}", rep.ok, checks=rep.checks, **{k: float(v) for k, v in rep.details.items()})
    return res


def trend_configs(r: float = 0.1, delta_cap: float = 0.1, delta: float = 0.01, ns=(8, 12, 16, 20)):
    w, p, _ = bsc_setup()
    d = bhattacharyya(w)
    out = []
    for n in ns:
        m = max(2, int(round(math.exp(n * r))))
        out.append(cbk.RgvConfig(n, m, quantize_type(p, n), d, delta_cap, delta))
    return out


@_timed
def trend_suite(trials: int = 1_000_000, seed: int = 6, r: float = 0.1, delta_cap: float = 0.1,
                delta: float = 0.01, band: float = 0.1) -> SuiteResult:
    """Fitted decay slope is positive and at most the computed exponent plus a band."""
    res = SuiteResult("trend")
    w, p, q = bsc_setup()
    cfgs = trend_configs(r, delta_cap, delta)
    d = cfgs[0].d
    limit = rate_limit_primal(p, d, delta_cap, delta)
    res.add("admissible", r <= limit and all(cbk.check_packing(c) for c in cfgs), rate_limit=limit)
    e = ergv_primal(PrimalProblem(r, p, w, q, d, delta_cap, delta)).value
    fit = sim.empirical_exponent(cfgs, w, q, trials, seed)
    ok = fit.slope is not None and 0 < fit.slope <= e + band
    res.add("slope", ok, slope=fit.slope, slope_se=fit.slope_se, exponent=e,
            points=[(n, y) for n, y, _ in fit.points], flagged=fit.flagged)
    return res


SUITES = {
    "lemmas": lemmas_suite,
    "decaen": decaen_suite,
    "duality": lambda: duality_suite(_corpus()),
    "grid": lambda: grid_suite(_corpus()),
    "recoveries": lambda: recoveries_suite(_corpus()[:4]),
    "optimality": optimality_suite,
    "beta": beta_suite,
    "simulation": simulation_suite,
    "cost": cost_suite,
    "trend": trend_suite,
}


def _corpus():
    from .corpus import corpus

    return corpus()


def run_suite(name: str) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
