"""Recursive constant-composition codebooks and their exact laws.

Word i is drawn uniformly from the type class minus the distance-Delta
balls around words 1..i-1.  For tiny instances the full law of the
ordered codeword tuple is computed exactly with rational arithmetic, which
drives the bracket checks below.  A cost-constrained variant draws words
i.i.d. from P^n conditioned on auxiliary-cost shells.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import TypeDescriptor, as_distribution, exact_pmf, type_class_size
from .distances import DistanceFn

ENUM_GUARD = 10**7
LIVE_SET_LIMIT = 10**6


def philox(seed) -> np.random.Philox:
    """Counter-based bit generator used for every random draw in the package."""
    return np.random.Philox(seed)


# ---------------------------------------------------------------------------
# configuration and codebook objects


@dataclass(frozen=True)
class RgvConfig:
    n: int
    m: int
    t: TypeDescriptor
    d: DistanceFn
    delta_cap: float
    delta: float = 0.0

    def __post_init__(self):
        if self.t.n != self.n:
            raise ValueError(f"type has length {self.t.n}, expected {self.n}")
        if self.m < 1:
            raise ValueError("codebook needs at least one word")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if not self.d.symmetric:
            raise ValueError("codebook construction needs a symmetric distance; wrap it with symmetrize()")

    @property
    def rate(self) -> float:
        return math.log(self.m) / self.n

    @property
    def nx(self) -> int:
        return self.t.nx


@dataclass(frozen=True)
class Codebook:
    words: np.ndarray  # (m, n) integer symbols
    nx: int
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def m(self) -> int:
        return self.words.shape[0]

    @property
    def n(self) -> int:
        return self.words.shape[1]

    def to_text(self) -> str:
        head = f"{self.n} {self.m} {self.nx} {self.seed if self.seed is not None else -1}"
        lines = [head] + [" ".join(str(int(s)) for s in w) for w in self.words]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Codebook":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        n, m, nx, seed = (int(v) for v in lines[0].split())
        words = np.array([[int(v) for v in ln.split()] for ln in lines[1:]], dtype=np.int64)
        if words.shape != (m, n):
            raise ValueError(f"expected {m} words of length {n}, found shape {words.shape}")
        if words.size and (words.min() < 0 or words.max() >= nx):
            raise ValueError("symbol index out of range")
        return cls(words, nx, None if seed < 0 else seed)


# ---------------------------------------------------------------------------
# enumeration helpers


def type_class(t: TypeDescriptor) -> np.ndarray:
    """All sequences of type ``t`` as rows, in lexicographic order."""
    size, _ = type_class_size(t)
    if size > ENUM_GUARD:
        raise ValueError(f"type class has {size} sequences; enumeration guard is {ENUM_GUARD}")
    out = []

    def rec(prefix, counts):
        if len(prefix) == t.n:
            out.append(list(prefix))
            return
        for a in range(t.nx):
            if counts[a]:
                counts[a] -= 1
                prefix.append(a)
                rec(prefix, counts)
                prefix.pop()
                counts[a] += 1

    rec([], list(t.counts))
    return np.array(out, dtype=np.int64).reshape(len(out), t.n)


def _compositions(total: int, parts: int, caps=None):
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        if caps is None or total <= caps[0]:
            yield (total,)
        return
    hi = total if caps is None else min(total, caps[0])
    for k in range(hi + 1):
        for rest in _compositions(total - k, parts - 1, None if caps is None else caps[1:]):
            yield (k,) + rest


def joint_count_matrices(rows: Sequence[int], cols: Sequence[int]):
    """All nonnegative integer matrices with the given row and column sums."""
    rows = list(rows)
    cols = list(cols)

    def rec(i, remaining):
        if i == len(rows) - 1:
            if sum(remaining) == rows[i]:
                yield [tuple(remaining)]
            return
        for row in _compositions(rows[i], len(cols), remaining):
            rem = [c - k for c, k in zip(remaining, row)]
            for tail in rec(i + 1, rem):
                yield [row] + tail

    for mat in rec(0, cols):
        yield np.array(mat, dtype=np.int64)


def _multinomial(total: int, parts) -> int:
    out = math.factorial(total)
    for k in parts:
        out //= math.factorial(int(k))
    return out


def batch_distances(d: DistanceFn, x, seqs, nx: int) -> np.ndarray:
    """d(x, s) for every row s of ``seqs``, with the canonical evaluation."""
    x = np.asarray(x, dtype=np.int64)
    seqs = np.asarray(seqs, dtype=np.int64)
    n = len(x)
    if d.kind in ("additive", "min_additive"):
        best = None
        for canon in d._canon:
            vi = canon.index[x[None, :], seqs]  # (k, n)
            per_value = np.stack([(vi == j).sum(1) for j in range(len(canon.values))], axis=1)
            vals = canon.totals_from_value_counts(per_value) / n
            best = vals if best is None else np.minimum(best, vals)
        return best
    out = np.empty(len(seqs))
    for i, s in enumerate(seqs):
        counts = np.bincount(x * nx + s, minlength=nx * nx).reshape(nx, nx)
        out[i] = d.from_counts(counts)
    return out


def _pairwise(d: DistanceFn, seqs, nx) -> np.ndarray:
    return np.stack([batch_distances(d, s, seqs, nx) for s in seqs])


# ---------------------------------------------------------------------------
# volume and packing


def volume(t: TypeDescriptor, d: DistanceFn, delta_cap: float, method: str = "types") -> int:
    """Number of sequences of type ``t`` within distance Delta of a representative.

    ``method="types"`` sums exact multiplicities over joint count matrices
    (valid for any type-dependent distance); ``"sequences"`` enumerates the
    type class and also confirms that two representatives agree.
    """
    if method == "sequences":
        seqs = type_class(t)
        x1 = t.representative()
        x2 = x1[::-1].copy()
        v1 = int(np.sum(batch_distances(d, x1, seqs, t.nx) <= delta_cap))
        v2 = int(np.sum(batch_distances(d, x2, seqs, t.nx) <= delta_cap))
        if v1 != v2:
            raise AssertionError(f"ball volume depends on the centre ({v1} vs {v2})")
        return v1
    if method != "types":
        raise ValueError(f"unknown method {method!r}")
    total = 0
    for mat in joint_count_matrices(t.counts, t.counts):
        if d.from_counts(mat) <= delta_cap:
            mult = 1
            for a, row in enumerate(mat):
                mult *= _multinomial(t.counts[a], row)
            total += mult
    return total


@dataclass
class PackingReport:
    ok: bool
    volume: int
    type_class_size: int
    lhs: float  # e^{n(R_n + delta)} * vol
    log_slack: float  # log|T| - log(lhs)

    def __bool__(self):
        return self.ok


def check_packing(cfg: RgvConfig) -> PackingReport:
    """Does m e^{n delta} vol <= |T| hold?"""
    vol = volume(cfg.t, cfg.d, cfg.delta_cap)
    size, log_size = type_class_size(cfg.t)
    if vol == 0:
        return PackingReport(True, 0, size, 0.0, math.inf)
    if cfg.delta == 0:
        ok = cfg.m * vol <= size
    else:
        ok = math.log(cfg.m) + cfg.n * cfg.delta + math.log(vol) <= math.log(size)
    log_lhs = math.log(cfg.m) + cfg.n * cfg.delta + math.log(vol)
    lhs = math.exp(log_lhs) if log_lhs < 700 else math.inf
    return PackingReport(bool(ok), vol, size, lhs, math.log(size) - log_lhs)


# ---------------------------------------------------------------------------
# sampling


def generate(cfg: RgvConfig, seed, check: bool = True) -> Codebook:
    """Draw a codebook from the recursive law.

    Small type classes keep an explicit set of live candidates; larger ones
    shuffle the type representative and reject candidates inside a ball.
    """
    if check and not check_packing(cfg):
        raise ValueError("packing condition fails for this configuration")
    size, _ = type_class_size(cfg.t)
    bg = philox(seed)
    if size <= LIVE_SET_LIMIT:
        rng = np.random.Generator(bg)
        seqs = type_class(cfg.t)
        alive = np.ones(len(seqs), dtype=bool)
        words = []
        for i in range(cfg.m):
            idx = np.flatnonzero(alive)
            if len(idx) == 0:
                raise RuntimeError(f"no candidates left for word {i + 1}; the packing invariant is violated")
            w = seqs[idx[rng.integers(len(idx))]]
            words.append(w)
            alive &= batch_distances(cfg.d, w, seqs, cfg.nx) > cfg.delta_cap
        return Codebook(np.array(words, dtype=np.int64), cfg.nx, seed, {"sampler": "live-set"})
    from . import kernels

    dv, dvals, dnv = kernel_tables(cfg.d)
    words, proposals = kernels.generate_rejection(cfg.t.representative(), cfg.m, dv, dvals, dnv,
                                                  cfg.delta_cap, bg)
    return Codebook(words, cfg.nx, seed, {"sampler": "rejection", "proposals": proposals})


def kernel_tables(d: DistanceFn):
    """Canonical tables of an additive distance packed for the kernels."""
    if d.kind not in ("additive", "min_additive"):
        raise ValueError("compiled kernels support additive distances only")
    canons = d._canon
    nv = [len(c.values) for c in canons]
    vals = np.zeros((len(canons), max(nv)))
    for i, c in enumerate(canons):
        vals[i, : nv[i]] = c.values
    idx = np.stack([c.index for c in canons]).astype(np.int64)
    return idx, vals, np.array(nv, dtype=np.int64)


def is_valid_codebook(cb: Codebook, cfg: RgvConfig) -> bool:
    counts = np.array(cfg.t.counts)
    for w in cb.words:
        if not np.array_equal(np.bincount(w, minlength=cfg.nx), counts):
            return False
    for i in range(cb.m):
        for j in range(i):
            if cfg.d.sequences(cb.words[i], cb.words[j], cfg.nx) <= cfg.delta_cap:
                return False
    return True


# ---------------------------------------------------------------------------
# exact laws


@dataclass
class TupleLaw:
    """Exact law of ordered codeword tuples; tuples hold indices into ``seqs``."""

    seqs: np.ndarray
    probs: dict  # tuple -> Fraction
    dist: np.ndarray  # pairwise distance matrix between candidates

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def marginal(self, positions: Sequence[int]) -> dict:
        out: dict = {}
        for tup, pr in self.probs.items():
            key = tuple(tup[k] for k in positions)
            out[key] = out.get(key, Fraction(0)) + pr
        return out


def _tuple_guard(size: int, m: int):
    if size**m > ENUM_GUARD:
        raise ValueError(f"{size}^{m} tuples exceeds the enumeration guard {ENUM_GUARD}")


def exact_tuple_law(cfg: RgvConfig) -> TupleLaw:
    size, _ = type_class_size(cfg.t)
    _tuple_guard(size, cfg.m)
    seqs = type_class(cfg.t)
    dist = _pairwise(cfg.d, seqs, cfg.nx)
    blocked = dist <= cfg.delta_cap
    probs = {}

    def rec(prefix, alive, pr):
        if len(prefix) == cfg.m:
            probs[tuple(prefix)] = pr
            return
        idx = np.flatnonzero(alive)
        if len(idx) == 0:
            raise RuntimeError("empty candidate set reached; the packing invariant is violated")
        step = pr / len(idx)
        for i in idx:
            rec(prefix + [int(i)], alive & ~blocked[i], step)

    rec([], np.ones(len(seqs), dtype=bool), Fraction(1))
    return TupleLaw(seqs, probs, dist)


def candidate_set_sizes(cfg: RgvConfig) -> list:
    """(prefix, |T(P_n, prefix)|) for every reachable prefix of length 0..m-1."""
    seqs = type_class(cfg.t)
    _tuple_guard(len(seqs), max(cfg.m - 1, 1))
    blocked = _pairwise(cfg.d, seqs, cfg.nx) <= cfg.delta_cap
    out = []

    def rec(prefix, alive):
        out.append((tuple(prefix), int(alive.sum())))
        if len(prefix) == cfg.m - 1:
            return
        for i in np.flatnonzero(alive):
            rec(prefix + [int(i)], alive & ~blocked[i])

    rec([], np.ones(len(seqs), dtype=bool))
    return out


def delta_n(n: int, delta: float) -> float:
    e = math.exp(-n * delta)
    return e / (1 - e) if e < 1 else math.inf


@dataclass
class LemmaReport:
    ok: bool
    checks: int
    violations: list
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def lemma1_check(cfg: RgvConfig) -> LemmaReport:
    """(1 - e^{-n delta}) |T| <= |T(P_n, prefix)| <= |T| for every reachable prefix."""
    size, _ = type_class_size(cfg.t)
    lo = (1 - math.exp(-cfg.n * cfg.delta)) * size
    viol, ratios = [], []
    sizes = candidate_set_sizes(cfg)
    for prefix, k in sizes:
        ratios.append(k / size)
        if not (lo <= k <= size):
            viol.append((prefix, k))
    return LemmaReport(not viol, len(sizes), viol, {"lower": lo, "upper": size, "min_ratio": min(ratios)})


def lemma2_check(cfg: RgvConfig, law: Optional[TupleLaw] = None) -> LemmaReport:
    """Pairwise marginals: zero inside a ball, otherwise within the two-sided bracket."""
    law = law or exact_tuple_law(cfg)
    size = len(law.seqs)
    e = math.exp(-cfg.n * cfg.delta)
    dn = delta_n(cfg.n, cfg.delta)
    lo = (1 - 4 * dn**2) * math.exp(-2 * dn) / size**2
    hi = 1 / ((1 - e) ** 2 * size**2) if e < 1 else math.inf
    viol, checks = [], 0
    for k, l in itertools.combinations(range(cfg.m), 2):
        marg = law.marginal((k, l))
        for i in range(size):
            for j in range(size):
                pr = marg.get((i, j), Fraction(0))
                checks += 1
                if law.dist[i, j] <= cfg.delta_cap:
                    if pr != 0:
                        viol.append(((k, l), (i, j), pr))
                elif not (lo <= pr <= hi):
                    viol.append(((k, l), (i, j), pr))
    return LemmaReport(not viol, checks, viol, {"lower": lo, "upper": hi, "delta_n": dn})


def lemma3_check(cfg: RgvConfig, law: Optional[TupleLaw] = None) -> LemmaReport:
    """Triple marginals: zero iff some pair is within Delta, else below the cubic bound."""
    if cfg.m < 3:
        return LemmaReport(True, 0, [], {"note": "fewer than three words"})
    law = law or exact_tuple_law(cfg)
    size = len(law.seqs)
    e = math.exp(-cfg.n * cfg.delta)
    hi = 1 / ((1 - e) ** 3 * size**3) if e < 1 else math.inf
    viol, checks = [], 0
    for pos in itertools.combinations(range(cfg.m), 3):
        marg = law.marginal(pos)
        for trip in itertools.product(range(size), repeat=3):
            pr = marg.get(trip, Fraction(0))
            checks += 1
            close = min(law.dist[trip[0], trip[1]], law.dist[trip[0], trip[2]],
                        law.dist[trip[1], trip[2]]) <= cfg.delta_cap
            if close and pr != 0:
                viol.append((pos, trip, pr, "positive inside a ball"))
            elif not close and pr == 0:
                viol.append((pos, trip, pr, "zero although all pairs are far apart"))
            elif pr > hi:
                viol.append((pos, trip, pr, "above bound"))
    return LemmaReport(not viol, checks, viol, {"upper": hi})


def lemma4_check(cfg: RgvConfig, law: Optional[TupleLaw] = None) -> LemmaReport:
    """Each codeword is marginally uniform on the type class (exactly)."""
    law = law or exact_tuple_law(cfg)
    size = len(law.seqs)
    target = Fraction(1, size)
    viol, checks = [], 0
    for k in range(cfg.m):
        marg = law.marginal((k,))
        for i in range(size):
            pr = marg.get((i,), Fraction(0))
            checks += 1
            if pr != target or abs(float(pr) - 1 / size) > 1e-12:
                viol.append((k, i, pr))
    return LemmaReport(not viol, checks, viol, {"target": target})


# ---------------------------------------------------------------------------
# cost-constrained construction


@dataclass(frozen=True)
class CostConfig:
    n: int
    m: int
    p: np.ndarray
    d: DistanceFn
    delta_cap: float
    delta: float = 0.0
    aux_costs: tuple = ()
    eps: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "p", as_distribution(self.p))
        costs = tuple(np.asarray(a, dtype=float) for a in self.aux_costs)
        if len(costs) > 4:
            raise ValueError("at most four auxiliary costs are supported")
        for a in costs:
            if a.shape != self.p.shape:
                raise ValueError("auxiliary cost must have one entry per input letter")
        object.__setattr__(self, "aux_costs", costs)

    @property
    def rate(self) -> float:
        return math.log(self.m) / self.n

    @property
    def nx(self) -> int:
        return len(self.p)

    def phi(self):
        return [float(np.dot(self.p, a)) for a in self.aux_costs]

    def in_shell_counts(self, counts) -> bool:
        """Shell membership from the letter counts of a sequence."""
        for a, ph in zip(self.aux_costs, self.phi()):
            acc = 0.0
            for c, v in zip(counts, a):
                if c:
                    acc += int(c) * float(v)
            if abs(acc / self.n - ph) > self.eps:
                return False
        return True

    def rate_condition_holds(self) -> bool:
        from .dual import rate_limit_dual

        return self.rate <= rate_limit_dual(self.p, self.d, self.delta_cap, self.delta)


def _draw_shell(cfg: CostConfig, rng, cdf, max_stall):
    for _ in range(max_stall + 1):
        u = rng.random(cfg.n)
        x = np.minimum(np.searchsorted(cdf, u, side="right"), cfg.nx - 1)
        if cfg.in_shell_counts(np.bincount(x, minlength=cfg.nx)):
            return x
    raise RuntimeError(f"no shell sequence in {max_stall} proposals")


def cost_generate(cfg: CostConfig, seed, max_stall: int = 10**6) -> Codebook:
    """Rejection sampler for the cost-constrained recursive construction."""
    rng = np.random.Generator(philox(seed))
    cdf = np.cumsum(cfg.p)
    words = []
    proposed = []
    for i in range(cfg.m):
        tries = 0
        while True:
            x = _draw_shell(cfg, rng, cdf, max_stall)
            tries += 1
            if all(cfg.d.sequences(x, w, cfg.nx) > cfg.delta_cap for w in words):
                break
            if tries > max_stall:
                raise RuntimeError(f"acceptance stalled at word {i + 1}: estimated mu ~ {1 / tries:.3g}")
        words.append(x)
        proposed.append(tries)
    return Codebook(np.array(words, dtype=np.int64), cfg.nx, seed, {"proposals": proposed})


@dataclass
class AcceptanceEstimate:
    mu_hat: list  # per step
    draws: int
    bound: float  # 1 - e^{-n delta}
    sigma: list
    ok: bool


def acceptance_rates(cfg: CostConfig, draws: int, seed) -> AcceptanceEstimate:
    """Monte Carlo estimate of mu_m for each step of one sampled prefix."""
    cb = cost_generate(cfg, seed)
    rng = np.random.Generator(philox((seed, 1)))
    cdf = np.cumsum(cfg.p)
    bound = 1 - math.exp(-cfg.n * cfg.delta)
    mus, sig = [], []
    ok = True
    for step in range(1, cfg.m):
        prev = cb.words[:step]
        hits = 0
        for _ in range(draws):
            x = _draw_shell(cfg, rng, cdf, 10**6)
            if all(cfg.d.sequences(x, w, cfg.nx) > cfg.delta_cap for w in prev):
                hits += 1
        mu = hits / draws
        s = math.sqrt(max(mu * (1 - mu), 1e-300) / draws)
        mus.append(mu)
        sig.append(s)
        ok &= mu >= bound - 3 * s
    return AcceptanceEstimate(mus, draws, bound, sig, ok)


def shell_law(cfg: CostConfig) -> tuple[np.ndarray, list]:
    """All shell sequences and their exact conditional probabilities P_X."""
    if cfg.nx**cfg.n > ENUM_GUARD:
        raise ValueError("alphabet^n exceeds the enumeration guard")
    pf = exact_pmf(cfg.p)
    seqs, probs = [], []
    for x in itertools.product(range(cfg.nx), repeat=cfg.n):
        counts = np.bincount(np.array(x), minlength=cfg.nx)
        if not cfg.in_shell_counts(counts):
            continue
        pr = Fraction(1)
        for a, c in enumerate(counts):
            pr *= pf[a] ** int(c)
        if pr == 0:
            continue
        seqs.append(x)
        probs.append(pr)
    z = sum(probs, Fraction(0))
    return np.array(seqs, dtype=np.int64), [pr / z for pr in probs]


def exact_cost_law(cfg: CostConfig) -> tuple[TupleLaw, list, list]:
    """Exact tuple law of the cost-constrained construction.

    Returns the law, the shell probabilities P_X, and the acceptance
    probabilities mu(prefix) of every reachable prefix.
    """
    seqs, px = shell_law(cfg)
    _tuple_guard(len(seqs), cfg.m)
    dist = _pairwise(cfg.d, seqs, cfg.nx)
    blocked = dist <= cfg.delta_cap
    probs, mus = {}, []

    def rec(prefix, alive, pr):
        if len(prefix) == cfg.m:
            probs[tuple(prefix)] = pr
            return
        idx = np.flatnonzero(alive)
        mu = sum((px[i] for i in idx), Fraction(0))
        if len(prefix):
            mus.append((tuple(prefix), mu))
        for i in idx:
            rec(prefix + [int(i)], alive & ~blocked[i], pr * px[i] / mu)

    rec([], np.ones(len(seqs), dtype=bool), Fraction(1))
    return TupleLaw(seqs, probs, dist), px, mus


def cost_properties_check(cfg: CostConfig) -> dict:
    """Exact checks of the acceptance, marginal and pairwise brackets on a tiny instance."""
    law, px, mus = exact_cost_law(cfg)
    e = math.exp(-cfg.n * cfg.delta)
    dn = delta_n(cfg.n, cfg.delta)
    out = {}
    min_mu = min((float(mu) for _, mu in mus), default=1.0)
    out["b"] = LemmaReport(min_mu >= 1 - e, len(mus), [p for p, mu in mus if mu < 1 - e],
                           {"min_mu": min_mu, "bound": 1 - e})
    lo_f = (1 - dn**2) * math.exp(-dn)
    hi_f = 1 / (1 - e)
    viol, checks = [], 0
    for k in range(cfg.m):
        marg = law.marginal((k,))
        for i, p_i in enumerate(px):
            pr = marg.get((i,), Fraction(0))
            checks += 1
            if not (lo_f * p_i <= pr <= hi_f * p_i):
                viol.append((k, i, pr, p_i))
    out["c"] = LemmaReport(not viol, checks, viol, {"lower_factor": lo_f, "upper_factor": hi_f})
    viol, checks = [], 0
    hi2 = 1 / (1 - e) ** 2
    for k, l in itertools.combinations(range(cfg.m), 2):
        marg = law.marginal((k, l))
        for i in range(len(px)):
            for j in range(len(px)):
                pr = marg.get((i, j), Fraction(0))
                checks += 1
                bound = hi2 * px[i] * px[j] if law.dist[i, j] > cfg.delta_cap else 0
                if pr > bound:
                    viol.append(((k, l), (i, j), pr))
    out["d"] = LemmaReport(not viol, checks, viol, {"factor": hi2})
    out["law"] = law
    out["px"] = px
    return out


def ball_probability(p, d: DistanceFn, delta_cap: float, x, aux_costs=(), eps: float = math.inf) -> Fraction:
    """Exact Pr(d(x, X') <= Delta) for X' ~ P^n, optionally conditioned on the cost shell.

    Positions are grouped by the letter of ``x``; within a group the letters
    of X' follow a multinomial law, and the distance depends only on the
    resulting joint counts.
    """
    p = as_distribution(p)
    x = np.asarray(x, dtype=np.int64)
    nx = len(p)
    n = len(x)
    rows = np.bincount(x, minlength=nx)
    pf = exact_pmf(p)
    shell = CostConfig(n, 1, p, d, delta_cap, 0.0, tuple(aux_costs), eps)
    hit = Fraction(0)
    total = Fraction(0)
    for mat in itertools.product(*[list(_compositions(int(r), nx)) for r in rows]):
        counts = np.array(mat, dtype=np.int64)
        pr = Fraction(1)
        for a, row in enumerate(counts):
            pr *= _multinomial(int(rows[a]), row)
            for b, c in enumerate(row):
                pr *= pf[b] ** int(c)
        if pr == 0 or not shell.in_shell_counts(counts.sum(0)):
            continue
        total += pr
        if d.from_counts(counts) <= delta_cap:
            hit += pr
    return hit / total if total else Fraction(0)


def _log_fraction(fr: Fraction) -> float:
    if fr == 0:
        return -math.inf
    return math.log(fr.numerator) - math.log(fr.denominator)


@dataclass
class PropertyAReport:
    ok: bool
    lhs: float  # -(1/n) log Pr(ball)
    rhs: float  # dual rate supremum - delta
    probability: Fraction


def property_a_check(p, d: DistanceFn, delta_cap: float, delta: float, n: int, x=None,
                     aux_costs=(), eps: float = math.inf, tol: float = 1e-9) -> PropertyAReport:
    """-(1/n) log Pr(d(x, X') <= Delta) >= (dual rate supremum) - delta, evaluated exactly."""
    from .core import quantize_type
    from .dual import rate_limit_dual

    if d.kind != "additive":
        raise ValueError("the exact ball probability needs an additive distance")
    p = as_distribution(p)
    if x is None:
        x = quantize_type(p, n).representative()
    pr = ball_probability(p, d, delta_cap, x, aux_costs, eps)
    lhs = -_log_fraction(pr) / n
    rhs = rate_limit_dual(p, d, delta_cap, 0.0) - delta
    return PropertyAReport(lhs >= rhs - tol, lhs, rhs, pr)


def shell_sensitivity(p, aux_costs, eps_list, n: int) -> list:
    """Probability that P^n lands in the cost shell, for each shell width."""
    from .distances import hamming

    out = []
    p = as_distribution(p)
    for eps in eps_list:
        cfg = CostConfig(n, 1, p, hamming(len(p)), -1.0, 0.0, tuple(aux_costs), eps)
        tot = Fraction(0)
        pf = exact_pmf(p)
        for counts in _compositions(n, len(p)):
            if cfg.in_shell_counts(counts):
                pr = Fraction(_multinomial(n, counts))
                for b, c in enumerate(counts):
                    pr *= pf[b] ** c
                tot += pr
        out.append((eps, float(tot)))
    return out
