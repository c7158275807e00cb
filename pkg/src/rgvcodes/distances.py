"""Distance functions on joint types over X x X.

A distance is either additive (a single-letter table averaged over the
joint type) or an arbitrary function of the joint type.  A few structured
kinds are kept distinct so the exponent solvers can recognise when the
constraint ``d >= Delta`` stays convex:

``additive``       single table, linear in the joint
``min_additive``   pointwise minimum of several tables (symmetrised tables)
``neg_mi``         -I(X;X~)
``equivocation``   H(X~|X)
``typedep``        anything else (evaluated through ``func``)
``beta``           the exponent-defined distance built by :func:`beta_distance`
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .core import CanonicalTable, Channel, Metric, entropy, mutual_info_xx

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class DistanceFn:
    kind: str
    symmetric: bool
    name: str = ""
    tables: tuple = ()
    func: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind in ("additive", "min_additive"):
            tabs = []
            for t in self.tables:
                t = np.array(t, dtype=float)
                if t.ndim != 2 or t.shape[0] != t.shape[1] or not np.all(np.isfinite(t)):
                    raise ValueError("distance tables must be finite square matrices")
                t.setflags(write=False)
                tabs.append(t)
            if not tabs:
                raise ValueError("additive distance needs a table")
            object.__setattr__(self, "tables", tuple(tabs))
            object.__setattr__(self, "_canon", tuple(CanonicalTable.from_table(t) for t in tabs))
        elif self.kind in ("typedep", "beta"):
            if self.func is None:
                raise ValueError("type-dependent distance needs an evaluator")
        elif self.kind not in ("neg_mi", "equivocation"):
            raise ValueError(f"unknown distance kind {self.kind!r}")

    @property
    def table(self) -> np.ndarray:
        if self.kind != "additive":
            raise AttributeError("only additive distances have a single table")
        return self.tables[0]

    @property
    def is_additive(self) -> bool:
        return self.kind == "additive"

    def __call__(self, pxx) -> float:
        pxx = np.asarray(pxx, dtype=float)
        if self.kind in ("additive", "min_additive"):
            return float(min(np.sum(pxx * t) for t in self.tables))
        if self.kind == "neg_mi":
            return -mutual_info_xx(pxx)
        if self.kind == "equivocation":
            return max(entropy(pxx) - entropy(pxx.sum(1)), 0.0)
        return float(self.func(pxx))

    def from_counts(self, counts) -> float:
        """Distance of a sequence pair summarised by its joint counts.

        For additive tables this uses the order-independent canonical sum,
        so pairs with equal joint types always get bit-identical values.
        """
        counts = np.asarray(counts)
        n = int(counts.sum())
        if self.kind in ("additive", "min_additive"):
            return min(c.total_from_counts(counts) / n for c in self._canon)
        return self(counts / n)

    def sequences(self, x, xp, nx: Optional[int] = None) -> float:
        """d(x, x') for two integer sequences."""
        from .core import joint_counts

        x = np.asarray(x)
        xp = np.asarray(xp)
        k = nx if nx is not None else int(max(x.max(), xp.max())) + 1
        return self.from_counts(joint_counts(x, xp, k, k))


def additive(table, name: str = "additive") -> DistanceFn:
    table = np.asarray(table, dtype=float)
    sym = bool(np.allclose(table, table.T, rtol=0, atol=SYMMETRY_TOL))
    return DistanceFn("additive", sym, name, (table,))


def hamming(nx: int = 2) -> DistanceFn:
    """Fraction of positions in which two sequences differ."""
    return DistanceFn("additive", True, "hamming", (1.0 - np.eye(nx),))


def bhattacharyya(w: Channel) -> DistanceFn:
    ww = w.w
    overlap = np.sqrt(ww[:, None, :] * ww[None, :, :]).sum(-1)
    if np.any(overlap <= 0):
        bad = np.argwhere(overlap <= 0)[0]
        raise ValueError(f"inputs {bad[0]} and {bad[1]} share no output; distance is unbounded")
    table = -np.log(overlap)
    table = np.where(np.eye(w.nx, dtype=bool), 0.0, table)
    table = 0.5 * (table + table.T)
    return DistanceFn("additive", True, "bhattacharyya", (table,))


def chernoff_table(w: Channel, q: Metric, s: float) -> np.ndarray:
    """d_s(x,x') = -log sum_y W(y|x) exp(s (q(x',y) - q(x,y)))."""
    if q.kind == "general":
        raise ValueError("chernoff distance needs an additive metric")
    if s < 0:
        raise ValueError("s must be nonnegative")
    ww, qt = w.w, q.table
    nx = w.nx
    table = np.zeros((nx, nx))
    if s == 0:
        return table  # -log of a row sum, which is exactly 1
    for x in range(nx):
        live = ww[x] > 0
        if not np.all(np.isfinite(qt[x, live])):
            raise ValueError(f"metric is -inf where W(.|{x}) is positive")
        for xp in range(nx):
            with np.errstate(invalid="ignore"):
                expo = s * (qt[xp, live] - qt[x, live])
            lse = logsumexp(expo, b=ww[x, live])
            if not np.isfinite(lse):
                raise ValueError(f"chernoff sum diverges for pair ({x},{xp})")
            table[x, xp] = -lse
    np.fill_diagonal(table, 0.0)
    return table


def chernoff(w: Channel, q: Metric, s: float) -> DistanceFn:
    table = chernoff_table(w, q, s)
    d = additive(table, name=f"chernoff(s={s:g})")
    return d


def neg_mutual_info() -> DistanceFn:
    return DistanceFn("neg_mi", True, "neg_mi")


def equivocation() -> DistanceFn:
    return DistanceFn("equivocation", False, "equivocation")


def symmetrize(d: DistanceFn) -> DistanceFn:
    """min{d(P), d(P^T)}; returns ``d`` itself when it is already symmetric."""
    if d.symmetric:
        return d
    if d.kind in ("additive", "min_additive"):
        tabs = list(d.tables) + [t.T for t in d.tables]
        return DistanceFn("min_additive", True, f"sym({d.name})", tuple(tabs))
    inner = d
    return DistanceFn(
        "typedep", True, f"sym({d.name})",
        func=lambda pxx: min(inner(pxx), inner(np.asarray(pxx).T)),
    )


class _BetaCache:
    """Thread-safe memo of beta values keyed by the joint rounded to 1e-4."""

    def __init__(self, evaluate: Callable[[np.ndarray], float], resolution: float = 1e-4):
        self._evaluate = evaluate
        self._res = resolution
        self._store: dict = {}
        self._lock = threading.Lock()

    def __call__(self, pxx) -> float:
        pxx = np.asarray(pxx, dtype=float)
        key = (pxx.shape, tuple(np.rint(pxx.ravel() / self._res).astype(np.int64)))
        with self._lock:
            if key in self._store:
                return self._store[key]
        val = self._evaluate(pxx)
        with self._lock:
            self._store.setdefault(key, val)
        return val

    def __len__(self):
        return len(self._store)


def beta_distance(r: float, w: Channel, q: Metric) -> DistanceFn:
    """Exponent-defined distance: the smallest Gamma over joints with this P_XX~.

    Each evaluation solves a convex program (see ``primal.beta_value``);
    results are cached.
    """
    from .primal import beta_value

    cache = _BetaCache(lambda pxx: beta_value(pxx, r, w, q))
    d = DistanceFn("beta", False, f"beta(R={r:g})", func=cache)
    object.__setattr__(d, "rate", float(r))
    object.__setattr__(d, "channel", w)
    object.__setattr__(d, "metric", q)
    return d
