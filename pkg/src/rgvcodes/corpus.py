"""Seeded random problem instances with additive metric and distance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import Channel, Metric
from .distances import DistanceFn, additive
from .primal import PrimalProblem, ergv_primal, rate_limit_primal

SHAPES = ((2, 2), (2, 3), (3, 2), (3, 3))


@dataclass
class Instance:
    name: str
    problem: PrimalProblem
    rate_limit: float
    distance_range: tuple  # (min, value at P x P)


def distance_range(p, table) -> tuple:
    """(min over couplings with both marginals P, value at the product coupling)."""
    nx = len(p)
    a_eq = np.zeros((2 * nx, nx * nx))
    for i in range(nx):
        a_eq[i, i * nx:(i + 1) * nx] = 1.0
        a_eq[nx + i, i::nx] = 1.0
    res = linprog(np.ravel(table), A_eq=a_eq, b_eq=np.concatenate([p, p]), bounds=(0, None), method="highs")
    return float(res.fun), float(p @ table @ p)


def _channel(rng, nx, ny) -> Channel:
    w = rng.dirichlet(np.ones(ny) * 0.6, size=nx)
    w = 0.92 * w + 0.08 / ny
    return Channel(w / w.sum(1, keepdims=True))


def random_instance(rng: np.random.Generator, nx: int, ny: int, name: str = "",
                    min_exponent: float = 1e-3) -> Instance:
    """One admissible instance: Delta strictly inside the achievable range, R below the rate limit.

    Instances whose exponent is below ``min_exponent`` are redrawn.
    """
    while True:
        w = _channel(rng, nx, ny)
        p = rng.dirichlet(np.ones(nx) * 2.0)
        p = 0.8 * p + 0.2 / nx
        p = p / p.sum()
        if rng.random() < 0.5:
            q = Metric.ml(w)
        else:
            # mismatched but informative: perturbed log-likelihood
            q = Metric.additive(np.log(w.w) + 0.4 * rng.normal(size=(nx, ny)))
        dt = rng.uniform(0.0, 1.0, size=(nx, nx))
        dt = (dt + dt.T) / 2
        np.fill_diagonal(dt, rng.uniform(0.0, 0.2, nx))
        d: DistanceFn = additive(dt)
        lo, indep = distance_range(p, dt)
        if indep - lo < 0.05:
            continue
        delta_cap = lo + rng.uniform(0.15, 0.7) * (indep - lo)
        limit = rate_limit_primal(p, d, delta_cap)
        if not np.isfinite(limit) or limit < 0.03:
            continue
        r = rng.uniform(0.05, 0.6) * limit
        prob = PrimalProblem(r, p, w, q, d, delta_cap)
        if ergv_primal(prob).value < min_exponent:
            continue
        return Instance(name, prob, limit, (lo, indep))


def corpus(seed: int = 2024, per_shape: int = 6, shapes=SHAPES) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for nx, ny in shapes:
        for k in range(per_shape):
            out.append(random_instance(rng, nx, ny, f"{nx}x{ny}-{k}"))
    return out
