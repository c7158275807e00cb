"""Error probability of recursive constant-composition codes.

Maximum-metric decoding with ties counted as errors, Monte Carlo over the
codebook ensemble, exact ensemble error probability for tiny instances,
the union-type expression with joint-type counting, and de Caen's lower
bound on a union.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .codebook import (
    Codebook,
    RgvConfig,
    TupleLaw,
    _compositions,
    _multinomial,
    delta_n,
    exact_tuple_law,
    generate,
    kernel_tables,
    philox,
)
from .core import CanonicalTable, Channel, Metric, exact_pmf, type_class_size

TIE = -1
EXACT_GUARD = 10**8


# ---------------------------------------------------------------------------
# scoring and decoding


class Scorer:
    """Order-independent metric scores q(x, y) for sequences."""

    def __init__(self, q: Metric, nx: int, ny: int):
        self.q = q
        self.nx, self.ny = nx, ny
        self.canon = None if q.kind == "general" else CanonicalTable.from_table(q.table)

    def counts_score(self, counts) -> float:
        """Score from joint counts over X x Y."""
        counts = np.asarray(counts, dtype=np.int64)
        if self.canon is None:
            return float(self.q.func(counts / counts.sum()))
        return self.canon.total_from_counts(counts)

    def scores(self, words, y) -> np.ndarray:
        """q(word, y) for every row of ``words``."""
        words = np.atleast_2d(np.asarray(words, dtype=np.int64))
        y = np.asarray(y, dtype=np.int64)
        if self.canon is None:
            n = words.shape[1]
            out = np.empty(len(words))
            for i, w in enumerate(words):
                c = np.bincount(w * self.ny + y, minlength=self.nx * self.ny).reshape(self.nx, self.ny)
                out[i] = self.q.func(c / n)
            return out
        vi = self.canon.index[words, y[None, :]]
        per_value = np.stack([(vi == j).sum(1) for j in range(len(self.canon.values))], axis=1)
        return self.canon.totals_from_value_counts(per_value)

    def score_matrix(self, words, outputs) -> np.ndarray:
        """S[i, k] = q(words[i], outputs[k])."""
        return np.stack([self.scores(words, y) for y in outputs], axis=1)


def decode(cb: Codebook, y, q: Metric, ny: Optional[int] = None) -> int:
    """Index (0-based) of the unique highest-scoring word, or ``TIE``."""
    y = np.asarray(y, dtype=np.int64)
    ny = ny if ny is not None else int(y.max()) + 1
    s = Scorer(q, cb.nx, ny).scores(cb.words, y)
    best = np.flatnonzero(s == s.max())
    return int(best[0]) if len(best) == 1 else TIE


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class SimResult:
    pe_estimate: float
    ci_halfwidth: float
    trials: int
    errors_by_cause: dict
    n: int = 0
    m: int = 0
    backend: str = ""

    @property
    def errors(self) -> int:
        return sum(self.errors_by_cause.values())

    @property
    def rate(self) -> float:
        return math.log(self.m) / self.n if self.n else float("nan")

    @property
    def exponent_estimate(self) -> float:
        if self.pe_estimate <= 0:
            return math.inf
        return -math.log(self.pe_estimate) / self.n

    def std(self) -> float:
        p = self.pe_estimate
        return math.sqrt(p * (1 - p) / self.trials)


def _result(beaten, ties, trials, cfg, backend) -> SimResult:
    pe = (beaten + ties) / trials
    ci = 1.96 * math.sqrt(pe * (1 - pe) / trials)
    return SimResult(pe, ci, trials, {"metric-beaten": int(beaten), "tie": int(ties)}, cfg.n, cfg.m, backend)


def kernel_supported(cfg: RgvConfig, q: Metric) -> bool:
    return q.kind != "general" and cfg.d.kind in ("additive", "min_additive")


def monte_carlo(cfg: RgvConfig, w: Channel, q: Metric, trials: int, seed,
                fixed_codebook: bool = False, backend: str = "auto") -> SimResult:
    """Ensemble-average error probability by simulation.

    Each trial draws a fresh codebook (unless ``fixed_codebook``), a uniform
    message and a channel output, then decodes.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if w.nx != cfg.nx:
        raise ValueError("channel input alphabet does not match the type")
    if backend == "auto":
        backend = "kernel" if kernel_supported(cfg, q) else "generic"
    if backend == "kernel":
        from . import kernels

        dv, dvals, dnv = kernel_tables(cfg.d)
        qc = CanonicalTable.from_table(q.table)
        beaten, ties, _ = kernels.mc_trials(
            cfg.t.representative(), cfg.m, dv, dvals, dnv, cfg.delta_cap,
            qc.index, qc.values, np.cumsum(w.w, axis=1), trials, philox(seed), fixed_codebook)
        return _result(beaten, ties, trials, cfg, kernels.BACKEND)
    return _monte_carlo_generic(cfg, w, q, trials, seed, fixed_codebook)


def _monte_carlo_generic(cfg, w, q, trials, seed, fixed_codebook) -> SimResult:
    rng = np.random.Generator(philox(seed))
    scorer = Scorer(q, w.nx, w.ny)
    cdf = np.cumsum(w.w, axis=1)
    beaten = ties = 0
    cb = None
    for t in range(trials):
        if cb is None or not fixed_codebook:
            cb = generate(cfg, (seed, t), check=False)
        msg = int(rng.integers(cfg.m))
        u = rng.random(cfg.n)
        x = cb.words[msg]
        y = np.minimum((u[:, None] >= cdf[x]).sum(1), w.ny - 1)
        s = scorer.scores(cb.words, y)
        others = np.delete(s, msg)
        if np.any(others > s[msg]):
            beaten += 1
        elif np.any(others == s[msg]):
            ties += 1
    return _result(beaten, ties, trials, cfg, "generic")


# ---------------------------------------------------------------------------
# exact ensemble error probability


def _outputs(ny: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(ny), repeat=n)), dtype=np.int64).reshape(-1, n)


def _channel_fractions(w: Channel):
    return [exact_pmf(row) for row in w.w]


def _wn(wf, x, y) -> Fraction:
    pr = Fraction(1)
    for a, b in zip(x, y):
        pr *= wf[a][b]
        if pr == 0:
            break
    return pr


def _integer_law(law: TupleLaw):
    """Tuple indices, integer numerators and common denominator of the law."""
    tuples = np.array(list(law.probs.keys()), dtype=np.int64)
    probs = list(law.probs.values())
    den = 1
    for pr in probs:
        den = den * pr.denominator // math.gcd(den, pr.denominator)
    nums = [pr.numerator * (den // pr.denominator) for pr in probs]
    if den >= 2**62 or max(nums) >= 2**62:
        raise OverflowError("tuple law denominators too large for integer accumulation")
    return tuples, np.array(nums, dtype=np.int64), den


@dataclass
class ExactSetup:
    law: TupleLaw
    outputs: np.ndarray
    scores: np.ndarray  # (|T|, |Y|^n)
    wn: list  # wn[i][k] = W^n(outputs[k] | seqs[i]) as Fraction
    tuples: np.ndarray
    nums: np.ndarray
    den: int


def exact_setup(cfg: RgvConfig, w: Channel, q: Metric, law: Optional[TupleLaw] = None) -> ExactSetup:
    size, _ = type_class_size(cfg.t)
    if size**cfg.m * w.ny**cfg.n > EXACT_GUARD:
        raise ValueError(f"|T|^m |Y|^n = {size**cfg.m * w.ny**cfg.n} exceeds the guard {EXACT_GUARD}")
    law = law or exact_tuple_law(cfg)
    outs = _outputs(w.ny, cfg.n)
    scores = Scorer(q, w.nx, w.ny).score_matrix(law.seqs, outs)
    wf = _channel_fractions(w)
    wn = [[_wn(wf, x, y) for y in outs] for x in law.seqs]
    tuples, nums, den = _integer_law(law)
    return ExactSetup(law, outs, scores, wn, tuples, nums, den)


def exact_pe(cfg: RgvConfig, w: Channel, q: Metric, setup: Optional[ExactSetup] = None) -> Fraction:
    """Exact ensemble-average error probability (rational).

    For every message position the error indicator over all (tuple, output)
    pairs is built in one array; tuple weights are integers over a common
    denominator so the accumulation is exact.
    """
    st = setup or exact_setup(cfg, w, q)
    size = len(st.law.seqs)
    acc = np.zeros((size, len(st.outputs)), dtype=object)
    for m in range(cfg.m):
        sent = st.scores[st.tuples[:, m]]  # (tuples, outputs)
        err = np.zeros(sent.shape, dtype=bool)
        for k in range(cfg.m):
            if k != m:
                err |= st.scores[st.tuples[:, k]] >= sent
        weighted = np.zeros((size, len(st.outputs)), dtype=np.int64)
        np.add.at(weighted, st.tuples[:, m], err * st.nums[:, None])
        acc += weighted.astype(object)
    total = Fraction(0)
    for i in range(size):
        for k in range(len(st.outputs)):
            if acc[i, k]:
                total += int(acc[i, k]) * st.wn[i][k]
    return total / (st.den * cfg.m)


def exact_pe_bruteforce(cfg: RgvConfig, w: Channel, q: Metric) -> Fraction:
    """Reference oracle: loops over tuples, messages and outputs, decoding each."""
    law = exact_tuple_law(cfg)
    wf = _channel_fractions(w)
    total = Fraction(0)
    for tup, pr in law.probs.items():
        cb = Codebook(law.seqs[list(tup)], cfg.nx)
        for m in range(cfg.m):
            for y in itertools.product(range(w.ny), repeat=cfg.n):
                if decode(cb, y, q, w.ny) != m:
                    total += pr * _wn(wf, cb.words[m], y) / cfg.m
    return total


# ---------------------------------------------------------------------------
# union-type expression via joint types


def _conditional_types(rows, ncols):
    """All count matrices with the given row sums and ``ncols`` columns."""
    for mat in itertools.product(*[list(_compositions(int(r), ncols)) for r in rows]):
        yield np.array(mat, dtype=np.int64).reshape(len(rows), ncols)


def _inner_count(nxy, counts, d, delta_cap, strict, q_ok) -> int:
    """Number of x' of type ``counts`` with q(x', y) >= q(x, y) and d(x, x') >/>= Delta.

    ``nxy[a, b]`` are the joint counts of (x, y).  x' is described by how
    each (a, b) cell splits over the letters of x'.
    """
    nx, ny = nxy.shape
    cells = [(a, b) for a in range(nx) for b in range(ny) if nxy[a, b] > 0]
    total = 0

    def rec(ci, remaining, k, mult):
        nonlocal total
        if ci == len(cells):
            if any(remaining):
                return
            dxx = np.zeros((nx, nx), dtype=np.int64)
            qxy = np.zeros((nx, ny), dtype=np.int64)
            for (a, b), split in zip(cells, k):
                dxx[a] += split
                qxy[:, b] += split
            dv = d.from_counts(dxx)
            if (dv > delta_cap if strict else dv >= delta_cap) and q_ok(qxy):
                total += mult
            return
        a, b = cells[ci]
        for split in _compositions(int(nxy[a, b]), nx, remaining):
            rem = [r - s for r, s in zip(remaining, split)]
            rec(ci + 1, rem, k + [np.array(split)], mult * _multinomial(int(nxy[a, b]), split))

    rec(0, list(counts), [], 1)
    return total


def rcu_like(cfg: RgvConfig, w: Channel, q: Metric, strict: bool = False, exact: bool = True,
             m: Optional[int] = None):
    """sum_{x,y} W^n(y|x)/|T| min{1, (M-1) sum_{x'} 1/|T|} over the type class.

    The inner sum runs over x' with q(x', y) >= q(x, y) and d(x', x) >= Delta
    (or > Delta when ``strict``).  Both sums are organised by joint types
    with exact multiplicities; by symmetry x is fixed to a representative.
    Returns a Fraction when ``exact`` and a float otherwise.
    """
    m = cfg.m if m is None else m
    size, _ = type_class_size(cfg.t)
    counts = list(cfg.t.counts)
    scorer = Scorer(q, w.nx, w.ny)
    wf = _channel_fractions(w) if exact else None
    with np.errstate(divide="ignore"):
        logw = np.log(w.w)
    total = Fraction(0) if exact else 0.0
    for nxy in _conditional_types(counts, w.ny):
        if exact:
            pw = Fraction(1)
            for a in range(w.nx):
                for b in range(w.ny):
                    if nxy[a, b]:
                        pw *= wf[a][b] ** int(nxy[a, b])
            if pw == 0:
                continue
        else:
            lw = float(np.sum(np.where(nxy > 0, nxy * logw, 0.0)))
            if lw == -math.inf:
                continue
        ref = scorer.counts_score(nxy)
        inner = _inner_count(nxy, counts, cfg.d, cfg.delta_cap, strict,
                             lambda qxy: scorer.counts_score(qxy) >= ref)
        mult = 1
        for a in range(w.nx):
            mult *= _multinomial(counts[a], nxy[a])
        if exact:
            factor = min(Fraction(1), Fraction((m - 1) * inner, size))
            total += mult * pw * factor
        else:
            factor = min(1.0, (m - 1) * inner / size)
            total += math.exp(math.log(mult) + lw) * factor
    return total


# ---------------------------------------------------------------------------
# de Caen's bound


@dataclass
class DeCaenReport:
    ok: bool
    union: Fraction
    bound: Fraction
    events: int

    def __bool__(self):
        return self.ok


def de_caen_bound(indicators, measure) -> Fraction:
    """sum_{i: Pr(E_i)>0} Pr(E_i)^2 / (Pr(E_i) + sum_{j != i} Pr(E_i and E_j))."""
    ind = np.asarray(indicators, dtype=bool)
    meas = list(measure)
    pr = [sum((meas[k] for k in np.flatnonzero(row)), Fraction(0)) for row in ind]
    bound = Fraction(0)
    for i, row in enumerate(ind):
        if pr[i] == 0:
            continue
        den = pr[i]
        for j in range(len(ind)):
            if j != i:
                den += sum((meas[k] for k in np.flatnonzero(row & ind[j])), Fraction(0))
        bound += pr[i] ** 2 / den
    return bound


def de_caen_check(indicators, measure) -> DeCaenReport:
    """Check Pr(union) >= de Caen's bound exactly on an explicit event system.

    ``indicators[i, k]`` says whether outcome k lies in event i; ``measure``
    gives outcome probabilities (Fractions or integers for exactness).
    """
    ind = np.asarray(indicators, dtype=bool)
    meas = [Fraction(v) for v in measure]
    union = sum((meas[k] for k in np.flatnonzero(ind.any(0))), Fraction(0)) if len(ind) else Fraction(0)
    bound = de_caen_bound(ind, meas)
    return DeCaenReport(bound <= union, union, bound, len(ind))


def random_event_system(rng: np.random.Generator, n_events: int, n_outcomes: int):
    """Random events with a random rational measure (for exercising de Caen)."""
    ind = rng.random((n_events, n_outcomes)) < rng.uniform(0.05, 0.7)
    weights = rng.integers(0, 20, n_outcomes)
    if weights.sum() == 0:
        weights[0] = 1
    tot = int(weights.sum())
    return ind, [Fraction(int(v), tot) for v in weights]


def pairwise_event_systems(cfg: RgvConfig, w: Channel, q: Metric, setup: Optional[ExactSetup] = None):
    """Yield (m, i, k, indicators, measure) for every sent word x_m = seqs[i] and output k.

    Outcomes are the codeword tuples with x_m fixed; event j is
    {q(X_j, y) >= q(x_m, y)} for j != m.
    """
    st = setup or exact_setup(cfg, w, q)
    for m in range(cfg.m):
        for i in range(len(st.law.seqs)):
            sel = st.tuples[:, m] == i
            tups = st.tuples[sel]
            if len(tups) == 0:
                continue
            nums = st.nums[sel]
            meas = [Fraction(int(v), int(nums.sum())) for v in nums]
            others = [j for j in range(cfg.m) if j != m]
            for k in range(len(st.outputs)):
                sent = st.scores[i, k]
                ind = np.stack([st.scores[tups[:, j], k] >= sent for j in others]) if others else \
                    np.zeros((0, len(tups)), dtype=bool)
                yield m, i, k, ind, meas


# ---------------------------------------------------------------------------
# sandwich with tracked constants


@dataclass
class SandwichReport:
    ok: bool
    pe: Fraction
    upper: Fraction  # (1 - e^{-n delta})^{-2} * S(>=); inf when delta = 0
    lower: Fraction  # -inf when delta = 0; (1/2)(1 - 4 delta_n^2) e^{-2 delta_n} * S(>)
    lower_tracked: Fraction  # same chain keeping the triple-marginal constant
    lower_de_caen: Fraction  # de Caen applied to the exact conditional events
    s_strict: Fraction
    s_nonstrict: Fraction
    checks: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def sandwich_check(cfg: RgvConfig, w: Channel, q: Metric) -> SandwichReport:
    """Non-asymptotic two-sided bracket around the exact error probability.

    Upper: Pr(err | x, y) <= min{1, (M-1) c_u p(x, y)} with c_u = (1-e^{-n delta})^{-2}
    and p the non-strict inner sum, so pe <= c_u S(>=).

    Lower: the displayed constant (1/2)(1-4 delta_n^2)e^{-2 delta_n} times the
    strict expression S(>); a fully tracked variant that also keeps the triple
    constant c_3 = (1-e^{-n delta})^{-3} (factor c_2/max(1, c_3/c_2)); and de
    Caen's bound evaluated on the exact conditional events.
    """
    st = exact_setup(cfg, w, q)
    pe = exact_pe(cfg, w, q, st)
    s_ge = rcu_like(cfg, w, q, strict=False)
    s_gt = rcu_like(cfg, w, q, strict=True)
    e = math.exp(-cfg.n * cfg.delta)
    dn = delta_n(cfg.n, cfg.delta)
    c_u = Fraction(1 / (1 - e) ** 2) if e < 1 else None
    c2 = (1 - 4 * dn**2) * math.exp(-2 * dn)
    c3 = 1 / (1 - e) ** 3 if e < 1 else math.inf
    # with delta = 0 the constants blow up and the bounds are vacuous
    upper = c_u * s_ge if c_u is not None else math.inf
    lower = Fraction(0.5 * c2) * s_gt if math.isfinite(c2) else -math.inf
    tracked = Fraction(0.5 * c2 / max(1.0, c3 / c2)) * s_gt if math.isfinite(c2) and c2 > 0 else Fraction(0)
    dc = Fraction(0)
    dc_ok = True
    for m, i, k, ind, meas in pairwise_event_systems(cfg, w, q, st):
        if st.wn[i][k] == 0:
            continue
        rep = de_caen_check(ind, meas)
        dc_ok &= rep.ok
        dc += rep.bound * st.wn[i][k] / (len(st.law.seqs) * cfg.m)
    checks = {
        "upper": pe <= upper,
        "lower": lower <= pe,
        "lower_tracked": tracked <= pe,
        "lower_de_caen": dc <= pe,
        "de_caen_each": dc_ok,
        "s_order": s_gt <= s_ge,
    }
    return SandwichReport(all(checks.values()), pe, upper, lower, tracked, dc, s_gt, s_ge, checks)


# ---------------------------------------------------------------------------
# exponent fitting


@dataclass
class ExponentFit:
    slope: Optional[float]
    intercept: Optional[float]
    slope_se: Optional[float]
    points: list  # (n, -log pe, sigma)
    flagged: list  # n values with zero errors

    @property
    def ok(self) -> bool:
        return self.slope is not None


def fit_exponent(results: Sequence[SimResult]) -> ExponentFit:
    """Weighted least-squares slope of -log pe against n.

    The standard deviation of -log pe is propagated from the binomial
    variance as sqrt((1-p)/(N p)); zero-error points are excluded and flagged.
    """
    pts, flagged = [], []
    for r in results:
        if r.errors == 0:
            flagged.append(r.n)
            continue
        p = r.pe_estimate
        sig = math.sqrt(max((1 - p) / (r.trials * p), 1.0 / r.trials**2))
        pts.append((r.n, -math.log(p), sig))
    if len(pts) < 2:
        return ExponentFit(None, None, None, pts, flagged)
    n = np.array([p[0] for p in pts], dtype=float)
    yv = np.array([p[1] for p in pts])
    wts = 1.0 / np.array([p[2] for p in pts]) ** 2
    a = np.vstack([n, np.ones_like(n)]).T
    aw = a * np.sqrt(wts)[:, None]
    coef, *_ = np.linalg.lstsq(aw, yv * np.sqrt(wts), rcond=None)
    cov = np.linalg.inv(aw.T @ aw)
    return ExponentFit(float(coef[0]), float(coef[1]), float(math.sqrt(cov[0, 0])), pts, flagged)


def empirical_exponent(cfgs: Sequence[RgvConfig], w: Channel, q: Metric, trials: int, seed) -> ExponentFit:
    """Simulate each configuration (increasing n) and fit the decay slope."""
    ns = [c.n for c in cfgs]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("blocklengths must increase")
    results = [monte_carlo(c, w, q, trials, (seed, c.n)) for c in cfgs]
    return fit_exponent(results)


CSV_FIELDS = ("n", "M", "R", "trials", "pe", "ci", "exponent_estimate")


def csv_row(r: SimResult) -> dict:
    return {"n": r.n, "M": r.m, "R": r.rate, "trials": r.trials, "pe": r.pe_estimate,
            "ci": r.ci_halfwidth, "exponent_estimate": r.exponent_estimate}
