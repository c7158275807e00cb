"""Dual (Lagrangian) forms of the exponent and of the rate condition.

For additive q and d the exponent equals

    sup_{rho in [0,1], rr >= 0, s >= 0, a}
        -sum_x P(x) log sum_y W(y|x) [ sum_x' P(x') e^{s q(x',y) + a(x') + rr (d(x,x') - Delta)}
                                         / e^{s q(x,y) + a(x)} ]^rho  -  rho R

and the rate condition reads

    R <= sup_{rr >= 0, a} -sum_x P(x) log sum_x' P(x') e^{a(x') - phi_a} e^{-rr (d(x,x') - Delta)} - 2 delta.

Everything is evaluated with log-sum-exp.  For fixed rho the objective is
concave in (s, rr, a), so the inner problem is solved by L-BFGS-B with an
analytic gradient; rho is handled by a grid followed by golden-section
refinement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .core import Channel, Metric, as_distribution
from .distances import DistanceFn, chernoff_table

CAP = 50.0
WIDE_CAP = 500.0
RHO_GRID = np.linspace(0.0, 1.0, 11)
GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class DualParams:
    rho: float
    rr: float
    s: float
    a: np.ndarray

    def canonical(self, p) -> "DualParams":
        """Shift ``a`` so that its P-mean is zero (the objective is shift invariant)."""
        a = np.asarray(self.a, dtype=float)
        return replace(self, a=a - float(np.dot(p, a)))


@dataclass
class DualResult:
    value: float
    params: object
    info: dict = field(default_factory=dict)


def _table(x) -> np.ndarray:
    if isinstance(x, DistanceFn):
        if x.kind != "additive":
            raise ValueError("dual forms need an additive distance")
        return x.table
    if isinstance(x, Metric):
        if not x.bounded:
            raise ValueError("dual forms need a bounded additive metric")
        return x.table
    return np.asarray(x, dtype=float)


class _Instance:
    """Support-reduced arrays shared by the objective and its gradient."""

    def __init__(self, p, w: Channel, q, d=None, delta_cap=0.0):
        p = as_distribution(p)
        self.full_p = p
        self.sx = np.flatnonzero(p > 0)
        self.p = p[self.sx]
        self.logp = np.log(self.p)
        ww = w.w[self.sx]
        qt = _table(q)[self.sx]
        if not np.all(np.isfinite(qt[ww > 0])):
            raise ValueError("metric must be finite wherever W is positive")
        self.logw = np.where(ww > 0, np.log(np.where(ww > 0, ww, 1.0)), -np.inf)
        self.q = np.where(np.isfinite(qt), qt, 0.0)
        if d is None:
            self.dd = np.zeros((len(self.sx), len(self.sx)))
        else:
            self.dd = _table(d)[np.ix_(self.sx, self.sx)] - delta_cap

    def expand_a(self, a_red):
        a = np.zeros(len(self.full_p))
        a[self.sx] = a_red
        return a


def _eval(inst: _Instance, rho, rr, s, a, r, grad=False):
    """Objective (and gradient in (rho, s, rr, a)) on the reduced support."""
    # z[x, x', y] = log P(x') + s q(x',y) + a(x') + rr (d(x,x') - Delta)
    z = (inst.logp[None, :, None] + s * inst.q[None, :, :] + a[None, :, None]
         + rr * inst.dd[:, :, None])
    lse = logsumexp(z, axis=1)  # (x, y)
    L = lse - s * inst.q - a[:, None]
    t = inst.logw + rho * L
    inner = logsumexp(t, axis=1)
    if not np.all(np.isfinite(inner)):
        bad = np.argwhere(~np.isfinite(t))
        raise OverflowError(f"dual objective overflow at (x, y) = {tuple(bad[0]) if len(bad) else '?'}")
    val = -float(np.dot(inst.p, inner)) - rho * r
    if not grad:
        return val
    pi = np.exp(z - lse[:, None, :])  # softmax over x'
    wt = np.exp(t - inner[:, None])  # softmax over y
    dL_ds = np.einsum("xzy,zy->xy", pi, inst.q) - inst.q
    dL_drr = np.einsum("xzy,xz->xy", pi, inst.dd)
    k = len(a)
    dL_da = pi.transpose(0, 2, 1) - np.eye(k)[:, None, :]  # (x, y, z)
    pw = inst.p[:, None] * wt
    g_rho = -float(np.sum(pw * L)) - r
    g_s = -rho * float(np.sum(pw * dL_ds))
    g_rr = -rho * float(np.sum(pw * dL_drr))
    g_a = -rho * np.einsum("xy,xyz->z", pw, dL_da)
    return val, g_rho, g_s, g_rr, g_a


def dual_objective(params: DualParams, r: float, p, w: Channel, q, d, delta_cap: float) -> float:
    """Value of the Lagrangian dual at ``params`` (log-domain evaluation)."""
    inst = _Instance(p, w, q, d, delta_cap)
    if params.rho == 0:
        return 0.0  # the inner power is identically 1
    a = np.asarray(params.a, dtype=float)[inst.sx]
    return _eval(inst, params.rho, params.rr, params.s, a, r)


def _inner_max(inst, rho, r, x0, cap, fix_rr=False):
    """Maximise over (s, rr, a) at fixed rho; returns (value, x)."""
    k = len(inst.p)

    def f(x):
        s, rr, a = x[0], (0.0 if fix_rr else x[1]), x[2:]
        val, _, gs, grr, ga = _eval(inst, rho, rr, s, a, r, grad=True)
        g = np.concatenate([[gs, 0.0 if fix_rr else grr], ga])
        return -val, -g

    bounds = [(0.0, cap), (0.0, 0.0 if fix_rr else cap)] + [(None, None)] * k
    x0 = np.array(x0, dtype=float)
    x0[0] = min(max(x0[0], 0.0), cap)
    x0[1] = 0.0 if fix_rr else min(max(x0[1], 0.0), cap)
    res = minimize(f, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options=dict(maxiter=3000, ftol=1e-15, gtol=1e-11))
    x = res.x.copy()
    x[2:] -= np.dot(inst.p, x[2:])
    return -res.fun, x


def _starts(k):
    base = [(1.0, 0.0), (0.5, 1.0), (2.0, 5.0), (0.1, 0.1), (5.0, 20.0)]
    return [np.concatenate([[s, rr], np.zeros(k)]) for s, rr in base]


def _sup_over_rho(inst, r, cap, fix_rr=False, rho_max=1.0):
    k = len(inst.p)
    cache = {}
    warm = [np.concatenate([[1.0, 0.0], np.zeros(k)])]

    def g(rho):
        if rho in cache:
            return cache[rho][0]
        v, x = _inner_max(inst, rho, r, warm[0], cap, fix_rr)
        cache[rho] = (v, x)
        warm[0] = x
        return v

    grid = RHO_GRID * rho_max
    vals = [g(float(rh)) for rh in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    a, b = float(lo), float(hi)
    c, dpt = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = g(c), g(dpt)
    while b - a > 1e-7:
        if fc >= fd:
            b, dpt, fd = dpt, c, fc
            c = b - GOLDEN * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, dpt, fd
            dpt = a + GOLDEN * (b - a)
            fd = g(dpt)
    rho_best = max(cache, key=lambda t: cache[t][0])
    # multi-start polish at the best rho
    best_v, best_x = cache[rho_best]
    if rho_best > 0:
        for x0 in _starts(k):
            v, x = _inner_max(inst, rho_best, r, x0, cap, fix_rr)
            if v > best_v:
                best_v, best_x = v, x
    return best_v, rho_best, best_x


def _at_cap(x, cap, fix_rr):
    return x[0] >= cap - 1e-6 or (not fix_rr and x[1] >= cap - 1e-6)


def ergv_dual(r: float, p, w: Channel, q, d, delta_cap: float, fix_rr: bool = False) -> DualResult:
    """Supremum of :func:`dual_objective`; ``fix_rr=True`` pins rr to 0.

    When s or rr sits at the box limit the search is repeated once with a
    wider box.  If the value still improves and the multiplier is again at
    the limit, the supremum is reported as ``inf``.
    """
    inst = _Instance(p, w, q, d, delta_cap)
    val, rho, x = _sup_over_rho(inst, r, CAP, fix_rr)
    info = {"cap": CAP}
    if _at_cap(x, CAP, fix_rr):
        v2, rho2, x2 = _sup_over_rho(inst, r, WIDE_CAP, fix_rr)
        info.update(cap=WIDE_CAP, widened=True)
        if v2 > val + 1e-6 and _at_cap(x2, WIDE_CAP, fix_rr):
            params = DualParams(rho2, x2[1], x2[0], inst.expand_a(x2[2:]))
            return DualResult(math.inf, params, dict(info, unbounded=True, last=v2))
        if v2 > val:
            val, rho, x = v2, rho2, x2
    params = DualParams(rho, 0.0 if fix_rr else x[1], x[0], inst.expand_a(x[2:])).canonical(inst.full_p)
    return DualResult(val, params, info)


def rc_dual_objective(rho: float, s: float, a, r: float, p, w: Channel, q) -> float:
    """Random-coding dual, written out term by term with scalar arithmetic.

    -sum_x P(x) log sum_y W(y|x) [sum_x' P(x') e^{s q(x',y) + a(x')} / e^{s q(x,y) + a(x)}]^rho - rho R

    Kept deliberately separate from the vectorised general dual so the two
    can be checked against each other.
    """
    p = np.asarray(p, dtype=float)
    ww = w.w
    qt = _table(q)
    a = np.asarray(a, dtype=float)
    total = 0.0
    for x in range(len(p)):
        if p[x] <= 0:
            continue
        outer = []
        for y in range(ww.shape[1]):
            if ww[x, y] <= 0:
                continue
            exps = [s * (qt[xp, y] - qt[x, y]) + a[xp] - a[x] for xp in range(len(p)) if p[xp] > 0]
            wts = [p[xp] for xp in range(len(p)) if p[xp] > 0]
            m = max(exps)
            log_ratio = m + math.log(sum(wt * math.exp(e - m) for wt, e in zip(wts, exps)))
            outer.append(math.log(ww[x, y]) + rho * log_ratio)
        m = max(outer)
        total += p[x] * (m + math.log(sum(math.exp(o - m) for o in outer)))
    return -total - rho * r


def rc_dual(r: float, p, w: Channel, q, starts=(0.25, 0.5, 0.75, 1.0)) -> DualResult:
    """Supremum of :func:`rc_dual_objective` over rho in [0,1], s >= 0 and a.

    Uses a finite-difference quasi-Newton search from several starting
    values of rho, independent of :func:`ergv_dual`.
    """
    p = as_distribution(p)
    k = len(p)

    def f(x):
        return -rc_dual_objective(x[0], x[1], np.concatenate([[0.0], x[2:]]), r, p, w, q)

    best = DualResult(0.0, DualParams(0.0, 0.0, 0.0, np.zeros(k)))
    bounds = [(0.0, 1.0), (0.0, CAP)] + [(None, None)] * (k - 1)
    for rho0 in starts:
        for s0 in (0.5, 1.0, 3.0):
            x0 = np.concatenate([[rho0, s0], np.zeros(k - 1)])
            res = minimize(f, x0, method="L-BFGS-B", bounds=bounds,
                           options=dict(maxiter=5000, ftol=1e-15, gtol=1e-10, eps=1e-9))
            if -res.fun > best.value:
                a = np.concatenate([[0.0], res.x[2:]])
                best = DualResult(-res.fun, DualParams(res.x[0], 0.0, res.x[1], a).canonical(p))
    return best


# ---------------------------------------------------------------------------
# rate condition


def _rate_eval(inst, rr, a, grad=False):
    z = inst.logp[None, :] + a[None, :] - rr * inst.dd
    lse = logsumexp(z, axis=1)
    phi = float(np.dot(inst.p, a))
    val = -float(np.dot(inst.p, lse)) + phi
    if not grad:
        return val
    pi = np.exp(z - lse[:, None])
    g_rr = float(np.dot(inst.p, np.sum(pi * inst.dd, axis=1)))
    g_a = -(inst.p @ pi) + inst.p
    return val, g_rr, g_a


def rate_dual_objective(rr: float, a, p, d, delta_cap: float) -> float:
    """-sum_x P(x) log sum_x' P(x') e^{a(x') - phi_a} e^{-rr (d(x,x') - Delta)}."""
    p = as_distribution(p)
    inst = _Instance(p, Channel(np.eye(len(p))), np.zeros((len(p), len(p))), d, delta_cap)
    return _rate_eval(inst, rr, np.asarray(a, dtype=float)[inst.sx])


def _rate_sup(inst, cap):
    k = len(inst.p)

    def f(x):
        v, grr, ga = _rate_eval(inst, x[0], x[1:], grad=True)
        return -v, -np.concatenate([[grr], ga])

    best = None
    for rr0 in (0.0, 1.0, 10.0):
        res = minimize(f, np.concatenate([[rr0], np.zeros(k)]), jac=True, method="L-BFGS-B",
                       bounds=[(0.0, cap)] + [(None, None)] * k,
                       options=dict(maxiter=3000, ftol=1e-15, gtol=1e-11))
        if best is None or -res.fun > best[0]:
            best = (-res.fun, res.x)
    return best


def rate_limit_dual(p, d, delta_cap: float, delta: float = 0.0) -> float:
    """Dual form of the rate condition; ``inf`` when the supremum is unbounded."""
    p = as_distribution(p)
    inst = _Instance(p, Channel(np.eye(len(p))), np.zeros((len(p), len(p))), d, delta_cap)
    val, x = _rate_sup(inst, CAP)
    if x[0] >= CAP - 1e-6:
        v2, x2 = _rate_sup(inst, WIDE_CAP)
        if v2 > val + 1e-6 and x2[0] >= WIDE_CAP - 1e-6:
            return math.inf
        val = max(val, v2)
    return val - 2 * delta


# ---------------------------------------------------------------------------
# expurgated form and the Chernoff-distance substitution


def _exp_eval(inst, lam, s, a, r, grad=False):
    """-(1/lam) sum_x P log sum_x' P' e^{lam c_s(x,x') + a' - a} - R/lam, with c_s = -d_s."""
    dq = inst.q[None, :, :] - inst.q[:, None, :]  # q(x',y) - q(x,y)
    u = inst.logw[:, None, :] + s * dq
    c = logsumexp(u, axis=2)  # (x, x')
    z = inst.logp[None, :] + lam * c + a[None, :]
    lse = logsumexp(z, axis=1) - a
    val = -float(np.dot(inst.p, lse)) / lam - r / lam
    if not grad:
        return val
    om = np.exp(u - c[:, :, None])
    dc_ds = np.sum(om * np.where(np.isfinite(u), dq, 0.0), axis=2)
    pi = np.exp(z - (lse + a)[:, None])
    g_s = -float(np.dot(inst.p, np.sum(pi * lam * dc_ds, axis=1))) / lam
    k = len(a)
    g_a = -(inst.p @ (pi - np.eye(k))) / lam
    return val, g_s, g_a


def expurgated_objective(rho_prime, s, a, r, p, w: Channel, q) -> float:
    """-(1+rho') sum_x P log sum_x' P(x') e^{-d_s(x,x')/(1+rho')} e^{a(x') - a(x)} - (1+rho') R."""
    inst = _Instance(p, w, q)
    return _exp_eval(inst, 1.0 / (1.0 + rho_prime), s, np.asarray(a, dtype=float)[inst.sx], r)


@dataclass
class ExpurgatedResult:
    value: float  # max(raw, 0)
    raw: float
    rho_prime: float
    s: float
    a: np.ndarray


def expurgated_dual(r: float, p, w: Channel, q, rho_max: float = 200.0) -> ExpurgatedResult:
    """Mismatched expurgated exponent in dual form.

    ``raw`` is the supremum over rho' in [0, rho_max], s >= 0 and a; the
    reported ``value`` is clipped at zero since an exponent cannot be negative.
    """
    inst = _Instance(p, w, q)
    k = len(inst.p)
    warm = [np.concatenate([[0.5], np.zeros(k)])]
    cache = {}

    def g(lam):
        if lam in cache:
            return cache[lam][0]

        def f(x):
            v, gs, ga = _exp_eval(inst, lam, x[0], x[1:], r, grad=True)
            return -v, -np.concatenate([[gs], ga])

        best = None
        for x0 in (warm[0], np.concatenate([[0.5], np.zeros(k)]), np.concatenate([[2.0], np.zeros(k)])):
            res = minimize(f, x0, jac=True, method="L-BFGS-B",
                           bounds=[(0.0, CAP)] + [(None, None)] * k,
                           options=dict(maxiter=3000, ftol=1e-15, gtol=1e-11))
            if best is None or -res.fun > best[0]:
                best = (-res.fun, res.x)
        cache[lam] = best
        warm[0] = best[1]
        return best[0]

    # search over lam = 1/(1+rho') in [1/(1+rho_max), 1] in log scale
    lo_l = math.log(1.0 / (1.0 + rho_max))
    grid = np.linspace(lo_l, 0.0, 25)
    vals = [g(math.exp(t)) for t in grid]
    i = int(np.argmax(vals))
    a_, b_ = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    c, dpt = b_ - GOLDEN * (b_ - a_), a_ + GOLDEN * (b_ - a_)
    fc, fd = g(math.exp(c)), g(math.exp(dpt))
    while b_ - a_ > 1e-8:
        if fc >= fd:
            b_, dpt, fd = dpt, c, fc
            c = b_ - GOLDEN * (b_ - a_)
            fc = g(math.exp(c))
        else:
            a_, c, fc = c, dpt, fd
            dpt = a_ + GOLDEN * (b_ - a_)
            fd = g(math.exp(dpt))
    lam = max(cache, key=lambda t: cache[t][0])
    raw, x = cache[lam]
    a_full = inst.expand_a(x[1:] - np.dot(inst.p, x[1:]))
    return ExpurgatedResult(max(raw, 0.0), raw, 1.0 / lam - 1.0, float(x[0]), a_full)


def chernoff_threshold(r: float, p, w: Channel, q, s: float, rho_prime: float, a=None, delta: float = 0.0) -> float:
    """Threshold Delta paired with the Chernoff distance d_s and multiplier rho'.

    Delta = -(1+rho') (sum_x P(x) log S(x) + R + 2 delta) with
    S(x) = sum_x' P(x') e^{-d_s(x,x')/(1+rho')} e^{a(x') - a(x)}.
    """
    p = as_distribution(p)
    a = np.zeros(len(p)) if a is None else np.asarray(a, dtype=float)
    sx = np.flatnonzero(p > 0)
    ds = chernoff_table(w, q, s)[np.ix_(sx, sx)]
    ps, as_ = p[sx], a[sx]
    z = np.log(ps)[None, :] - ds / (1 + rho_prime) + as_[None, :]
    logS = logsumexp(z, axis=1) - as_
    return -(1 + rho_prime) * (float(np.dot(ps, logS)) + r + 2 * delta)


def chernoff_substitution(r: float, p, w: Channel, q, s: float, rho_prime: float, a=None, delta: float = 0.0):
    """Evaluate the general dual at rho = 1, rr = rho'/(1+rho') with d = d_s.

    Returns ``(value, Delta, DualParams)``.  Algebraically the value equals
    the expurgated objective at (rho', s, a) minus 2 delta rho'.
    """
    from .distances import chernoff

    p = as_distribution(p)
    a = np.zeros(len(p)) if a is None else np.asarray(a, dtype=float)
    d = chernoff(w, q, s)
    dc = chernoff_threshold(r, p, w, q, s, rho_prime, a, delta)
    params = DualParams(1.0, rho_prime / (1 + rho_prime), s, a)
    return dual_objective(params, r, p, w, q, d, dc), dc, params


@dataclass
class ConsistencyReport:
    holds: bool
    lhs: float
    rhs: float

    def __bool__(self):
        return self.holds


def check_rate_condition_consistency(p, w: Channel, q, s: float, rho_prime: float,
                                     r: float = 0.1, delta: float = 0.0, a=None,
                                     tol: float = 1e-9) -> ConsistencyReport:
    """Rate condition at rr = 1/(1+rho') for d_s and the matching threshold.

    The right-hand side collapses to R, so both sides must agree.
    """
    p = as_distribution(p)
    a = np.zeros(len(p)) if a is None else np.asarray(a, dtype=float)
    from .distances import chernoff

    d = chernoff(w, q, s)
    dc = chernoff_threshold(r, p, w, q, s, rho_prime, a, delta)
    rhs = rate_dual_objective(1.0 / (1 + rho_prime), a, p, d, dc) - 2 * delta
    return ConsistencyReport(abs(rhs - r) <= tol, r, rhs)
