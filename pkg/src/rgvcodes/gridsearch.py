"""Dense-grid oracle for the exponent on binary-input, binary-output problems.

With |X| = |Y| = 2 and both marginals of V_XX~ pinned to P, a joint
distribution V[x, x~, y] is fixed by the off-diagonal mass t of V_XX~
and the four conditionals c[x, x~] = V(y=0 | x, x~).  The oracle scans a
lattice over these five coordinates, then repeatedly refines boxes around
the best cells.  Only lattice points that satisfy the constraints are
scored, so the result upper-bounds the true minimum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .primal import PrimalProblem

LEVELS = (20, 50, 100, 200, 400)


@dataclass
class GridResult:
    value: float
    point: np.ndarray  # (t, c00, c01, c10, c11)
    joint: np.ndarray  # V[x, x~, y]
    evaluations: int


def _xlogy_ratio(a, b):
    """sum-ready a*log(a/b) with 0 log 0 = 0 and a log(a/0) = inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, a * np.log(a / b), 0.0)
    return np.where((a > 0) & (b <= 0), np.inf, out)


def _joint(p, t, c):
    """V[..., x, x~, y] from t (shape (k,)) and c (shape (k, 2, 2))."""
    pxx = np.stack([np.stack([p[0] - t, t], -1), np.stack([t, p[1] - t], -1)], -2)
    return np.stack([pxx * c, pxx * (1 - c)], -1)


def evaluate(prob: PrimalProblem, t, c):
    """Objective values at points (t, c); infeasible points get +inf."""
    p = prob.p
    v = _joint(p, t, c)
    vxy = v.sum(2)
    vty = v.sum(1)
    pw = p[:, None] * prob.w.w
    kl = _xlogy_ratio(vxy, pw[None]).sum((1, 2))
    denom = p[None, None, :, None] * vxy[:, :, None, :]
    mi = _xlogy_ratio(v, denom).sum((1, 2, 3))
    qt = prob.q.table
    with np.errstate(invalid="ignore"):
        qx = np.where(vxy > 0, vxy * qt, 0.0).sum((1, 2))
        qtl = np.where(vty > 0, vty * qt, 0.0).sum((1, 2))
    pxx = v.sum(3)
    dist = np.array([prob.d(m) for m in pxx]) if not prob.d.is_additive else \
        (pxx * prob.d.table).sum((1, 2))
    ok = (qtl >= qx + prob.eps) & (dist >= prob.delta_cap)
    val = kl + np.maximum(mi - prob.r, 0.0)
    return np.where(ok, val, np.inf)


def _axis(lo, hi, step):
    k0 = int(np.ceil(lo / step - 1e-9))
    k1 = int(np.floor(hi / step + 1e-9))
    return np.arange(k0, k1 + 1) * step


def _scan(prob, t_axis, c_axes, chunk=400_000):
    """Evaluate the product lattice; returns (values, points) of feasible points."""
    cgrid = np.stack(np.meshgrid(*c_axes, indexing="ij"), -1).reshape(-1, 4)
    vals, pts = [], []
    for t in t_axis:
        for s in range(0, len(cgrid), chunk):
            cs = cgrid[s: s + chunk]
            tt = np.full(len(cs), t)
            f = evaluate(prob, tt, cs.reshape(-1, 2, 2))
            keep = np.isfinite(f)
            if keep.any():
                vals.append(f[keep])
                pts.append(np.column_stack([tt[keep], cs[keep]]))
    if not vals:
        return np.empty(0), np.empty((0, 5))
    return np.concatenate(vals), np.concatenate(pts)


def _top(vals, pts, k, min_sep):
    order = np.argsort(vals, kind="stable")
    chosen = []
    for i in order:
        if all(np.max(np.abs(pts[i] - pts[j])) >= min_sep for j in chosen):
            chosen.append(i)
            if len(chosen) == k:
                break
    return chosen


def grid_oracle(prob: PrimalProblem, levels=LEVELS, top_k: int = 12, halfwidth: int = 2) -> GridResult:
    """Coarse-to-fine lattice minimum of the exponent objective.

    Level 1 covers the whole box at spacing 1/levels[0]; each later level
    scans boxes of +-halfwidth previous spacings around the ``top_k`` best
    distinct points at spacing 1/levels[i].
    """
    if prob.w.nx != 2 or prob.w.ny != 2:
        raise ValueError("grid oracle is for binary input and output")
    if not prob.q.is_additive:
        raise ValueError("grid oracle needs an additive metric")
    tmax = float(min(prob.p))
    step = 1.0 / levels[0]
    vals, pts = _scan(prob, _axis(0.0, tmax, step), [_axis(0.0, 1.0, step)] * 4)
    evals = len(_axis(0.0, tmax, step)) * len(_axis(0.0, 1.0, step)) ** 4
    if len(vals) == 0:
        return GridResult(np.inf, None, None, evals)
    best_v, best_p = vals.min(), pts[np.argmin(vals)]
    for res in levels[1:]:
        prev = step
        step = 1.0 / res
        centres = pts[_top(vals, pts, top_k, prev)]
        all_v, all_p = [], []
        for cen in centres:
            h = halfwidth * prev
            t_ax = _axis(max(0.0, cen[0] - h), min(tmax, cen[0] + h), step)
            c_ax = [_axis(max(0.0, cen[j] - h), min(1.0, cen[j] + h), step) for j in range(1, 5)]
            evals += len(t_ax) * int(np.prod([len(a) for a in c_ax]))
            v, p = _scan(prob, t_ax, c_ax)
            all_v.append(v)
            all_p.append(p)
        vals = np.concatenate(all_v)
        pts = np.concatenate(all_p)
        if len(vals) and vals.min() < best_v:
            best_v, best_p = vals.min(), pts[np.argmin(vals)]
    joint = _joint(prob.p, np.array([best_p[0]]), best_p[1:].reshape(1, 2, 2))[0]
    return GridResult(float(best_v), best_p, joint, evals)


def lattice_size(levels=LEVELS) -> int:
    """Points a full lattice at the finest spacing would need (for comparison)."""
    return (levels[-1] + 1) ** 5


__all__ = ["grid_oracle", "evaluate", "GridResult", "LEVELS", "lattice_size"]
