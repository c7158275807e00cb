"""Type-domain (primal) exponents.

The central quantity is

    E(R) = min  D(V_{Y|X} || W | P) + |I(X~; X, Y) - R|_+

over joints V[x, x~, y] with both input marginals equal to P, the metric
constraint q(V_{X~Y}) >= q(V_{XY}) and the distance constraint
d(V_{XX~}) >= Delta.

When q is additive and the distance constraint is convex (additive tables,
minima of additive tables, -I(X;X~) or H(X~|X) under fixed marginals), the
problem is a conic program over exponential cones.  It is built with cvxpy
and solved by Clarabel.  Other distances go through an outer search over
the pairwise joint P_XX~, whose inner problem is again conic.  Non-additive
metrics use a multi-start SLSQP fallback on tiny alphabets.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize

from .core import (
    Channel,
    Metric,
    as_distribution,
    cond_kl_joint,
    entropy,
    eval_metric,
    mutual_info_xt_xy,
    mutual_info_xx,
    quantize_type,
)
from .distances import DistanceFn, neg_mutual_info

SOLVER_OPTS = dict(tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10, max_iter=300)
OUTER_GRID = 100


class SolverError(RuntimeError):
    """Raised when an optimisation does not converge; carries the best bound."""

    def __init__(self, msg, best=math.inf):
        super().__init__(f"{msg} (best upper bound {best!r})")
        self.best = best


@dataclass(frozen=True)
class PrimalProblem:
    r: float
    p: np.ndarray
    w: Channel
    q: Metric
    d: DistanceFn
    delta_cap: float
    delta: float = 0.0
    eps: float = 0.0  # margin in the metric constraint, q(V_X~Y) >= q(V_XY) + eps

    def __post_init__(self):
        object.__setattr__(self, "p", as_distribution(self.p))
        if not self.r > 0:
            raise ValueError("rate must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if len(self.p) != self.w.nx:
            raise ValueError("input distribution and channel disagree on |X|")

    def replace(self, **kw) -> "PrimalProblem":
        f = dict(r=self.r, p=self.p, w=self.w, q=self.q, d=self.d,
                 delta_cap=self.delta_cap, delta=self.delta, eps=self.eps)
        f.update(kw)
        return PrimalProblem(**f)


@dataclass
class ExponentResult:
    value: float
    minimizer: Optional[np.ndarray]
    certificate: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)


def gamma(v, w: Channel, r: float) -> float:
    """D(V_{Y|X} || W | V_X) + |I(X~; X, Y) - R|_+."""
    v = np.asarray(v, dtype=float)
    return cond_kl_joint(v, w) + max(mutual_info_xt_xy(v) - r, 0.0)


# ---------------------------------------------------------------------------
# conic building block


def _metric_table(q: Metric, nx: int, ny: int) -> np.ndarray:
    t = np.asarray(q.table, dtype=float)
    if t.shape != (nx, ny):
        raise ValueError(f"metric table has shape {t.shape}, expected {(nx, ny)}")
    return t


def _conic(wr, q_rows, q_cols, r, *, pxx=None, px=None, pt=None, lin_tables=(),
           delta_cap=0.0, mi_cap=None, eps=0.0):
    """Solve the exponent program on reduced alphabets.

    Either the pairwise joint ``pxx`` is fixed, or only the marginals
    ``px``/``pt`` are.  ``q_rows``/``q_cols`` are the metric table restricted
    to the X and X~ supports.  Returns ``(status, V)`` with ``V`` of shape
    (kx, kt, ny), or ``V = None`` when the solver failed.
    """
    if pxx is not None:
        px, pt = pxx.sum(1), pxx.sum(0)
    kx, ny = wr.shape
    kt = len(pt)
    Ax = np.kron(np.eye(kx), np.ones((1, kt)))  # sums out x~
    At = np.kron(np.ones((1, kx)), np.eye(kt))  # sums out x
    B = (Ax.T * np.tile(pt, kx)[:, None]) @ Ax  # V -> P(x~) V(x, y)

    V = cp.Variable((kx * kt, ny), nonneg=True)
    VXY = Ax @ V
    if pxx is None:
        cons = [cp.sum(VXY, axis=1) == px, cp.sum(At @ V, axis=1) == pt]
    else:
        cons = [cp.sum(V, axis=1) == pxx.reshape(-1)]

    ref = px[:, None] * wr
    zero_ref = ref <= 0
    if zero_ref.any():
        cons.append(VXY[zero_ref] == 0)

    # metric constraint; entries where q(x~, y) = -inf are pinned to zero
    qx = np.repeat(q_rows, kt, axis=0)
    qtt = np.tile(q_cols, (kx, 1))
    live = np.repeat(~zero_ref, kt, axis=0)
    forbid = live & ~np.isfinite(qtt)
    if forbid.any():
        cons.append(V[forbid] == 0)
    coef = np.where(live & ~forbid, qtt - np.where(np.isfinite(qx), qx, 0.0), 0.0)
    cons.append(cp.sum(cp.multiply(coef, V)) >= eps)

    vxx = cp.sum(V, axis=1)
    for tab in lin_tables:
        cons.append(vxx @ tab.reshape(-1) >= delta_cap)
    if mi_cap is not None:
        cons.append(cp.sum(cp.rel_entr(vxx, np.outer(px, pt).reshape(-1))) <= mi_cap)

    kl = cp.sum(cp.rel_entr(VXY, np.where(zero_ref, 1.0, ref)))
    mi = cp.sum(cp.rel_entr(V, B @ V))
    prob = cp.Problem(cp.Minimize(kl + cp.pos(mi - r)), cons)
    status = _solve(prob)
    if status in ("infeasible", "infeasible_inaccurate"):
        return "infeasible", None
    if V.value is None:
        return status, None
    return status, np.clip(np.asarray(V.value), 0.0, None).reshape(kx, kt, ny)


def _solve(prob: cp.Problem) -> str:
    # cvxpy warns about inaccurate solutions; the status already records that
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        try:
            prob.solve(solver=cp.CLARABEL, **SOLVER_OPTS)
            status = prob.status
        except cp.SolverError:
            status = "solver_error"
        if status not in ("optimal", "infeasible"):
            try:
                prob.solve(solver=cp.CLARABEL)
                status = prob.status
            except cp.SolverError:
                status = "solver_error"
    return status


def _embed(vr: np.ndarray, sx, st, nx: int, ny: int) -> np.ndarray:
    v = np.zeros((nx, nx, ny))
    v[np.ix_(sx, st, np.arange(ny))] = vr
    s = v.sum()
    return v / s if s > 0 else v


def _residuals(v, p, qfull: Metric, d: Optional[DistanceFn], delta_cap, eps, pxx=None) -> dict:
    res = {}
    if pxx is None:
        res["marginal"] = float(max(np.abs(v.sum((1, 2)) - p).max(), np.abs(v.sum((0, 2)) - p).max()))
    else:
        res["marginal"] = float(np.abs(v.sum(2) - pxx).max())
    gap = eval_metric(qfull, v.sum(0)) - eval_metric(qfull, v.sum(1)) - eps
    res["metric"] = float(max(0.0, -gap)) if np.isfinite(gap) else math.inf
    if d is not None and delta_cap is not None:
        res["distance"] = float(max(0.0, delta_cap - d(v.sum(2))))
    return res


# ---------------------------------------------------------------------------
# convex cases


def _convex_distance_spec(d: DistanceFn, delta_cap: float, p: np.ndarray):
    """Translate ``d >= Delta`` into linear tables and/or an MI cap."""
    if d.kind in ("additive", "min_additive"):
        return list(d.tables), None
    if d.kind == "neg_mi":
        return [], -delta_cap
    if d.kind == "equivocation":
        return [], entropy(p) - delta_cap
    raise ValueError(f"distance kind {d.kind} is not convex-representable")


def _marginal_problem(p, w: Channel, q: Metric, r: float, *, tables=(), delta_cap=0.0,
                      mi_cap=None, eps=0.0, d_for_cert=None) -> ExponentResult:
    p = np.asarray(p, dtype=float)
    nx, ny = w.nx, w.ny
    if mi_cap is not None and mi_cap < 0:
        return ExponentResult(math.inf, None, {"status": "infeasible", "reason": "mutual information cap below zero"})
    s = np.flatnonzero(p > 0)
    qt = _metric_table(q, nx, ny)[s]
    tabs = [np.asarray(t)[np.ix_(s, s)] for t in tables]
    status, vr = _conic(w.w[s], qt, qt, r, px=p[s], pt=p[s], lin_tables=tabs,
                        delta_cap=delta_cap, mi_cap=mi_cap, eps=eps)
    if status == "infeasible":
        return ExponentResult(math.inf, None, {"status": "infeasible", "solver": "clarabel"})
    if vr is None:
        raise SolverError(f"conic solver failed with status {status}")
    v = _embed(vr, s, s, nx, ny)
    cert = {"status": status, "solver": "clarabel"}
    cert["residuals"] = _residuals(v, p, q, d_for_cert, delta_cap if d_for_cert else None, eps)
    return ExponentResult(gamma(v, w, r), v, cert)


def beta_value(pxx, r: float, w: Channel, q: Metric, eps: float = 0.0) -> float:
    """Smallest Gamma over joints whose pairwise marginal is exactly ``pxx``."""
    return _beta_result(pxx, r, w, q, eps).value


def _beta_result(pxx, r: float, w: Channel, q: Metric, eps: float = 0.0) -> ExponentResult:
    pxx = np.asarray(pxx, dtype=float)
    pxx = np.clip(pxx, 0.0, None)
    pxx = pxx / pxx.sum()
    nx, ny = w.nx, w.ny
    sx = np.flatnonzero(pxx.sum(1) > 0)
    st = np.flatnonzero(pxx.sum(0) > 0)
    qfull = _metric_table(q, nx, ny)
    sub = pxx[np.ix_(sx, st)]
    status, vr = _conic(w.w[sx], qfull[sx], qfull[st], r, pxx=sub, eps=eps)
    if status == "infeasible":
        return ExponentResult(math.inf, None, {"status": "infeasible"})
    if vr is None:
        raise SolverError(f"inner solver failed with status {status}")
    v = _embed(vr, sx, st, nx, ny)
    cert = {"status": status, "residuals": _residuals(v, None, q, None, None, eps, pxx=pxx)}
    return ExponentResult(gamma(v, w, r), v, cert)


# ---------------------------------------------------------------------------
# outer search over the pairwise joint (non-convex distances)


def _binary_joint(p, t):
    return np.array([[p[0] - t, t], [t, p[1] - t]])


def _free_to_joint(u, p):
    """Joint with both marginals ``p`` from its leading (k-1)x(k-1) block."""
    k = len(p)
    m = np.zeros((k, k))
    m[: k - 1, : k - 1] = np.asarray(u).reshape(k - 1, k - 1)
    m[: k - 1, k - 1] = p[: k - 1] - m[: k - 1, : k - 1].sum(1)
    m[k - 1, : k - 1] = p[: k - 1] - m[: k - 1, : k - 1].sum(0)
    m[k - 1, k - 1] = p[k - 1] - m[k - 1, : k - 1].sum()
    return m


def _min_over_joints(p, objective: Callable, feasible: Callable, grid: int = OUTER_GRID):
    """Minimise ``objective(pxx)`` over joints with marginals ``p`` where ``feasible``.

    Binary supports are handled by a 1-D grid with refinement at every
    feasibility boundary and around the best grid point.  Larger supports
    use multi-start Nelder-Mead on the free block, which returns an upper
    bound on the minimum.  Returns ``(value, pxx)``.
    """
    p = np.asarray(p, dtype=float)
    k = len(p)
    if k == 1:
        pxx = np.array([[1.0]])
        return (objective(pxx), pxx) if feasible(pxx) else (math.inf, None)
    if k == 2:
        return _min_binary(p, objective, feasible, grid)
    return _min_nelder_mead(p, objective, feasible)


def _min_binary(p, objective, feasible, grid):
    tmax = min(p)
    ts = np.linspace(0.0, tmax, grid + 1)
    feas = np.array([feasible(_binary_joint(p, t)) for t in ts])
    best = (math.inf, None)
    vals = np.full(len(ts), math.inf)
    for i in np.flatnonzero(feas):
        vals[i] = objective(_binary_joint(p, ts[i]))
        if vals[i] < best[0]:
            best = (vals[i], _binary_joint(p, ts[i]))
    cands = []
    # boundary crossings of the feasible set
    for i in range(len(ts) - 1):
        if feas[i] != feas[i + 1]:
            cands.append(_boundary_point(p, feasible, ts[i], ts[i + 1], feas[i]))
    # golden-section around the best feasible grid point
    if best[1] is not None:
        i = int(np.nanargmin(vals))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        f = lambda t: objective(_binary_joint(p, t)) if feasible(_binary_joint(p, t)) else math.inf
        cands.append(_golden(f, lo, hi))
    for t in cands:
        if t is None:
            continue
        pxx = _binary_joint(p, t)
        if feasible(pxx):
            v = objective(pxx)
            if v < best[0]:
                best = (v, pxx)
    return best


def _boundary_point(p, feasible, a, b, a_feasible, iters: int = 40):
    """Bisection for the feasibility switch between ``a`` and ``b``; returns the feasible side."""
    good, bad = (a, b) if a_feasible else (b, a)
    for _ in range(iters):
        mid = 0.5 * (good + bad)
        if feasible(_binary_joint(p, mid)):
            good = mid
        else:
            bad = mid
    return good


def _golden(f, lo, hi, tol=1e-7):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def _min_nelder_mead(p, objective, feasible, starts: int = 6, seed: int = 0):
    k = len(p)
    rng = np.random.default_rng(seed)
    penalty = 1e3

    def wrapped(u):
        m = _free_to_joint(u, p)
        neg = -min(m.min(), 0.0)
        if neg > 0:
            return penalty * (1 + neg)
        if not feasible(m):
            return penalty
        return objective(m)

    inits = [np.outer(p, p), np.diag(p)]
    for _ in range(starts - 2):
        m = rng.random((k, k)) + 0.1
        for _ in range(200):  # Sinkhorn to marginals p
            m *= (p / m.sum(1))[:, None]
            m *= (p / m.sum(0))[None, :]
        inits.append(m)
    best = (math.inf, None)
    for m0 in inits:
        u0 = m0[: k - 1, : k - 1].ravel()
        res = minimize(wrapped, u0, method="Nelder-Mead",
                       options=dict(maxfev=400, xatol=1e-7, fatol=1e-9))
        m = _free_to_joint(res.x, p)
        if m.min() >= 0 and feasible(m):
            v = objective(m)
            if v < best[0]:
                best = (v, m)
    return best


# ---------------------------------------------------------------------------
# general (non-additive) metric fallback


def _general_metric_search(prob: PrimalProblem, starts: int = 5, seed: int = 0) -> ExponentResult:
    p, w, q, d = prob.p, prob.w, prob.q, prob.d
    nx, ny = w.nx, w.ny
    size = nx * nx * ny
    rng = np.random.default_rng(seed)

    def unpack(z):
        return np.clip(z[:size], 0, None).reshape(nx, nx, ny)

    def obj(z):
        v = unpack(z)
        return _smooth_kl(v, w) + z[size]

    cons = [
        {"type": "eq", "fun": lambda z: unpack(z).sum((1, 2)) - p},
        {"type": "eq", "fun": lambda z: unpack(z).sum((0, 2)) - p},
        {"type": "ineq", "fun": lambda z: eval_metric(q, unpack(z).sum(0)) - eval_metric(q, unpack(z).sum(1)) - prob.eps},
        {"type": "ineq", "fun": lambda z: d(unpack(z).sum(2)) - prob.delta_cap},
        {"type": "ineq", "fun": lambda z: z[size] - (_smooth_mi(unpack(z)) - prob.r)},
    ]
    bounds = [(0, 1)] * size + [(0, None)]
    best = ExponentResult(math.inf, None, {"status": "no feasible start"})
    for k in range(starts):
        v0 = rng.random((nx, nx, ny)) if k else np.einsum("a,b,by->aby", p, p, w.w)
        v0 = v0 / v0.sum()
        z0 = np.concatenate([v0.ravel(), [1.0]])
        res = minimize(obj, z0, method="SLSQP", bounds=bounds, constraints=cons,
                       options=dict(maxiter=500, ftol=1e-12))
        v = unpack(res.x)
        v = v / v.sum()
        resid = _residuals(v, p, q, d, prob.delta_cap, prob.eps)
        if max(resid.values()) > 1e-6:
            continue
        val = gamma(v, w, prob.r)
        if val < best.value:
            best = ExponentResult(val, v, {"status": "slsqp", "residuals": resid, "starts": starts})
    return best


def _smooth_kl(v, w):
    vxy = v.sum(1)
    ref = vxy.sum(1)[:, None] * w.w
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(vxy > 0, vxy * np.log(np.maximum(vxy, 1e-300) / np.maximum(ref, 1e-300)), 0.0)
    return float(t.sum())


def _smooth_mi(v):
    return mutual_info_xt_xy(v)


# ---------------------------------------------------------------------------
# public operations


def ergv_primal(prob: PrimalProblem, method: str = "auto") -> ExponentResult:
    """Exponent of the recursive construction for the given problem.

    ``method`` is ``"auto"`` (conic when possible, otherwise an outer search
    on alphabets with at most three letters), ``"conic"``, or ``"outer"``
    (explicitly request the non-convex outer search on larger alphabets).
    An empty constraint set gives ``value = inf``.
    """
    p, w, q, d = prob.p, prob.w, prob.q, prob.d
    k = int((p > 0).sum())
    convex_d = d.kind in ("additive", "min_additive", "neg_mi", "equivocation")
    if q.kind == "general":
        if w.nx > 3 and method != "outer":
            raise ValueError("non-additive metric on an alphabet larger than 3: request method='outer'")
        return _general_metric_search(prob)
    if convex_d and method in ("auto", "conic"):
        tables, mi_cap = _convex_distance_spec(d, prob.delta_cap, p)
        return _marginal_problem(p, w, q, prob.r, tables=tables, delta_cap=prob.delta_cap,
                                 mi_cap=mi_cap, eps=prob.eps, d_for_cert=d)
    if method == "conic":
        raise ValueError(f"distance kind {d.kind} has no conic formulation")
    if k > 3 and method != "outer":
        raise ValueError("non-additive distance on an alphabet larger than 3: request method='outer'")
    return _outer_exponent(prob)


def _outer_exponent(prob: PrimalProblem) -> ExponentResult:
    p, w, q, d = prob.p, prob.w, prob.q, prob.d
    s = np.flatnonzero(p > 0)
    nx = w.nx

    def full(m):
        out = np.zeros((nx, nx))
        out[np.ix_(s, s)] = m
        return out

    same_beta = (d.kind == "beta" and getattr(d, "rate", None) == prob.r
                 and getattr(d, "channel", None) == w and getattr(d, "metric", None) == q
                 and prob.eps == 0.0)
    inner = d if same_beta else (lambda pxx: beta_value(pxx, prob.r, w, q, prob.eps))
    val, m = _min_over_joints(p[s], lambda m: inner(full(m)),
                              lambda m: d(full(m)) >= prob.delta_cap)
    if m is None:
        return ExponentResult(math.inf, None, {"status": "infeasible", "method": "outer"})
    res = _beta_result(full(m), prob.r, w, q, prob.eps)
    res.certificate.update(method="outer", outer_value=val)
    res.certificate["residuals"]["distance"] = float(max(0.0, prob.delta_cap - d(full(m))))
    return res


def rc_exponent(r: float, p, w: Channel, q: Metric, eps: float = 0.0) -> ExponentResult:
    """Constant-composition random-coding exponent (no distance constraint)."""
    return _marginal_problem(as_distribution(p), w, q, r, eps=eps)


def ck_exponent(r: float, p, w: Channel, q: Metric, eps: float = 0.0) -> ExponentResult:
    """Exponent with the pairwise constraint I(X;X~) <= R in place of a distance."""
    return _marginal_problem(as_distribution(p), w, q, r, mi_cap=r, eps=eps)


def rate_limit_primal(p, d: DistanceFn, delta_cap: float, delta: float = 0.0) -> float:
    """min I(X;X~) over equal-marginal joints with d <= Delta, minus 2*delta.

    Returns ``inf`` when no such joint exists.
    """
    p = as_distribution(p)
    s = np.flatnonzero(p > 0)
    ps = p[s]
    h = entropy(p)
    if d.kind == "neg_mi":
        val = max(-delta_cap, 0.0) if -delta_cap <= h + 1e-15 else math.inf
    elif d.kind == "equivocation":
        val = max(h - delta_cap, 0.0) if delta_cap >= 0 else math.inf
    elif d.kind in ("additive", "min_additive"):
        val = min(_min_mi_linear(ps, t[np.ix_(s, s)], delta_cap) for t in d.tables)
    else:
        nx = len(p)

        def full(m):
            out = np.zeros((nx, nx))
            out[np.ix_(s, s)] = m
            return out

        val, _ = _min_over_joints(ps, mutual_info_xx, lambda m: d(full(m)) <= delta_cap)
    return val - 2 * delta


def _min_mi_linear(p, table, delta_cap):
    k = len(p)
    prod = np.outer(p, p)
    if np.sum(prod * table) <= delta_cap:
        return 0.0
    m = cp.Variable((k, k), nonneg=True)
    cons = [cp.sum(m, axis=1) == p, cp.sum(m, axis=0) == p, cp.sum(cp.multiply(table, m)) <= delta_cap]
    prob = cp.Problem(cp.Minimize(cp.sum(cp.rel_entr(m, prod))), cons)
    status = _solve(prob)
    if status in ("infeasible", "infeasible_inaccurate"):
        return math.inf
    if m.value is None:
        raise SolverError(f"rate-limit solver failed with status {status}")
    return mutual_info_xx(np.clip(m.value, 0, None))


@dataclass
class Report:
    holds: bool
    values: dict

    def __bool__(self):
        return self.holds


def compare_optimality(prob: PrimalProblem, tol: float = 1e-4) -> Report:
    """Check E(d, Delta) <= E(-I, -(R + 2 delta)) for an admissible problem."""
    limit = rate_limit_primal(prob.p, prob.d, prob.delta_cap, prob.delta)
    if prob.r > limit + 1e-9:
        raise ValueError(f"rate {prob.r} violates the rate condition (limit {limit})")
    e = ergv_primal(prob).value
    ref = ergv_primal(prob.replace(d=neg_mutual_info(), delta_cap=-(prob.r + 2 * prob.delta))).value
    return Report(e <= ref + 2 * tol, {"exponent": e, "neg_mi_exponent": ref, "rate_limit": limit})


def beta_exponent_check(r, p, w, q, delta_cap, delta, tol: float = 1e-3, d=None) -> Report:
    """Check that the beta distance at threshold Delta gives exponent >= Delta."""
    from .distances import beta_distance

    d = d if d is not None else beta_distance(r, w, q)
    limit = rate_limit_primal(p, d, delta_cap, delta)
    if r > limit + 1e-9:
        raise ValueError(f"rate {r} violates the beta rate condition (limit {limit})")
    e = ergv_primal(PrimalProblem(r, p, w, q, d, delta_cap, delta)).value
    return Report(e >= delta_cap - tol, {"exponent": e, "delta_cap": delta_cap, "rate_limit": limit})


def beta_threshold(r, p, w, q, delta, d=None) -> float:
    """Largest Delta for which the beta distance satisfies the rate condition.

    Equals the smallest beta over equal-marginal joints with I(X;X~) < R + 2 delta.
    """
    from .distances import beta_distance

    p = as_distribution(p)
    d = d if d is not None else beta_distance(r, w, q)
    s = np.flatnonzero(p > 0)
    nx = len(p)

    def full(m):
        out = np.zeros((nx, nx))
        out[np.ix_(s, s)] = m
        return out

    val, _ = _min_over_joints(p[s], lambda m: d(full(m)), lambda m: mutual_info_xx(m) <= r + 2 * delta)
    return val


def beta_envelope(r, p, w, q, delta, deltas) -> tuple[float, list]:
    """Best exponent over a sweep of thresholds for the beta distance.

    Only thresholds satisfying the rate condition are used.  Returns the
    envelope value and the per-threshold ``(Delta, exponent)`` pairs.
    """
    from .distances import beta_distance

    d = beta_distance(r, w, q)
    rows = []
    for dc in deltas:
        if rate_limit_primal(p, d, dc, delta) < r:
            continue
        rows.append((float(dc), ergv_primal(PrimalProblem(r, p, w, q, d, dc, delta)).value))
    env = max((e for _, e in rows), default=-math.inf)
    return env, rows


@dataclass
class ContinuityReport:
    values: list
    baseline: float
    holds: bool


def continuity_probe(prob: PrimalProblem, n_list, tol: float = 1e-2, n_min: int = 64) -> ContinuityReport:
    """Exponent evaluated at the length-n type closest to P, for each n."""
    vals = []
    for n in n_list:
        pn = quantize_type(prob.p, n).distribution()
        vals.append(ergv_primal(prob.replace(p=pn)).value)
    base = ergv_primal(prob).value
    ok = all(v >= base - tol for n, v in zip(n_list, vals) if n >= n_min)
    return ContinuityReport(vals, base, ok)
