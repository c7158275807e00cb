"""Alphabets, distributions, channels, types, metrics and information measures.

Alphabets are dense integer ranges ``0..k-1``.  All logarithms are natural,
so every information quantity is in nats.  Distributions and joints are
plain read-only numpy arrays validated by the ``as_*`` helpers; channels,
types and metrics are small frozen objects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_prob_array(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")
    if np.any(a < 0):
        raise ValueError(f"{what} has negative entries")
    s = a.sum()
    if abs(s - 1.0) > TOL * max(1, a.size):
        raise ValueError(f"{what} sums to {s!r}, not 1")


def as_distribution(p) -> np.ndarray:
    """Validate a probability vector and return a read-only float copy."""
    p = _frozen(p)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("distribution must be a non-empty vector")
    _check_prob_array(p, "distribution")
    return p


def exact_pmf(p) -> list:
    """Rational copy of a pmf that sums to exactly 1.

    Entries go through their shortest decimal form (0.1 becomes 1/10) and
    are then renormalised, so rows such as (0.9, 0.1) stay exact.
    """
    fr = [Fraction(repr(float(v))) for v in np.ravel(p)]
    total = sum(fr, Fraction(0))
    return [f / total for f in fr]


def as_joint(v, ndim: int) -> np.ndarray:
    """Validate a joint pmf of the given rank (2 for X x X, 3 for X x X x Y)."""
    v = _frozen(v)
    if v.ndim != ndim:
        raise ValueError(f"joint must have {ndim} axes, got {v.ndim}")
    _check_prob_array(v, "joint")
    return v


@dataclass(frozen=True)
class Channel:
    """Discrete memoryless channel; ``w[x, y] = W(y|x)``."""

    w: np.ndarray

    def __post_init__(self):
        w = _frozen(self.w)
        if w.ndim != 2:
            raise ValueError("channel matrix must be 2-D")
        for row in w:
            _check_prob_array(row, "channel row")
        object.__setattr__(self, "w", w)

    @property
    def nx(self) -> int:
        return self.w.shape[0]

    @property
    def ny(self) -> int:
        return self.w.shape[1]

    @classmethod
    def bsc(cls, eps: float) -> "Channel":
        return cls([[1 - eps, eps], [eps, 1 - eps]])


@dataclass(frozen=True)
class TypeDescriptor:
    """Composition of a length-n sequence: ``counts[x]`` occurrences of x."""

    counts: tuple

    def __post_init__(self):
        c = tuple(int(k) for k in self.counts)
        if not c or any(k < 0 for k in c):
            raise ValueError("counts must be a non-empty vector of nonnegative integers")
        if sum(c) < 1:
            raise ValueError("counts must sum to a positive blocklength")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def nx(self) -> int:
        return len(self.counts)

    def distribution(self) -> np.ndarray:
        return _frozen(np.array(self.counts, dtype=float) / self.n)

    def representative(self) -> np.ndarray:
        """The lexicographically smallest sequence of this type."""
        return np.repeat(np.arange(self.nx), self.counts)


def quantize_type(p, n: int) -> TypeDescriptor:
    """Closest composition of ``n`` with the support of ``p``.

    The result satisfies ``max |counts/n - p| <= 1/n``; a ValueError is
    raised when no such composition exists (e.g. support larger than n).
    """
    p = as_distribution(p)
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    support = p > 0
    if support.sum() > n:
        raise ValueError(f"no type of length {n} has support size {support.sum()}")
    target = n * p
    lo = np.where(support, np.maximum(1, np.ceil(target - 1 - 1e-12)), 0).astype(int)
    hi = np.where(support, np.floor(target + 1 + 1e-12), 0).astype(int)
    if lo.sum() > n or hi.sum() < n:
        raise ValueError(f"no type of length {n} lies within 1/n of {p.tolist()}")
    c = np.clip(np.rint(target).astype(int), lo, hi)
    while c.sum() < n:
        room = np.where(c < hi, target - c, -np.inf)
        c[int(np.argmax(room))] += 1
    while c.sum() > n:
        room = np.where(c > lo, target - c, np.inf)
        c[int(np.argmin(room))] -= 1
    return TypeDescriptor(tuple(c.tolist()))


def type_class_size(t: TypeDescriptor) -> tuple[int, float]:
    """Exact multinomial coefficient n!/prod(counts!) and its natural log."""
    size = math.factorial(t.n)
    for k in t.counts:
        size //= math.factorial(k)
    log_size = math.lgamma(t.n + 1) - sum(math.lgamma(k + 1) for k in t.counts)
    return size, log_size


# ---------------------------------------------------------------------------
# information measures


def entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def mutual_info_xx(pxx) -> float:
    """I(X;X~) of a joint over X x X."""
    pxx = np.asarray(pxx, dtype=float)
    val = entropy(pxx.sum(1)) + entropy(pxx.sum(0)) - entropy(pxx)
    return max(val, 0.0)


def mutual_info_xt_xy(v) -> float:
    """I(X~; X, Y) for a tensor indexed ``v[x, x~, y]``."""
    v = np.asarray(v, dtype=float)
    val = entropy(v.sum((0, 2))) + entropy(v.sum(1)) - entropy(v)
    return max(val, 0.0)


def cond_kl(v_cond, w: Channel, p) -> float:
    """D(V_{Y|X} || W | P) for a conditional ``v_cond[x, y]`` and input pmf ``p``.

    Rows with ``p[x] == 0`` are ignored.  Mass placed where ``W(y|x) = 0``
    gives ``inf``.
    """
    v_cond = np.asarray(v_cond, dtype=float)
    p = np.asarray(p, dtype=float)
    return kl_joint(p[:, None] * v_cond, p[:, None] * w.w)


def cond_kl_joint(v, w: Channel) -> float:
    """D(V_{Y|X} || W | V_X) computed from a joint over X x Y or X x X~ x Y."""
    v = np.asarray(v, dtype=float)
    vxy = v.sum(1) if v.ndim == 3 else v
    vx = vxy.sum(1)
    return kl_joint(vxy, vx[:, None] * w.w)


def kl_joint(a, b) -> float:
    """Sum of a*log(a/b) with the usual 0 conventions; inf when a>0=b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mask = a > 0
    if np.any(b[mask] <= 0):
        return math.inf
    return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Metric:
    """Decoding metric q.

    ``kind`` is ``"additive"`` (single-letter ``table[x, y]``), ``"ml"``
    (table ``log W``, possibly with ``-inf`` entries) or ``"general"`` (an
    arbitrary function of the joint type over X x Y).
    """

    kind: str
    table: Optional[np.ndarray] = None
    func: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("additive", "ml", "general"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "general":
            if self.func is None:
                raise ValueError("general metric needs an evaluator")
            return
        t = _frozen(self.table)
        if t.ndim != 2 or np.any(np.isnan(t)) or np.any(t == np.inf):
            raise ValueError("metric table must be a 2-D array without nan/+inf")
        if self.kind == "additive" and not np.all(np.isfinite(t)):
            raise ValueError("additive metric table must be finite")
        object.__setattr__(self, "table", t)

    @classmethod
    def additive(cls, table) -> "Metric":
        return cls("additive", table)

    @classmethod
    def ml(cls, w: Channel) -> "Metric":
        with np.errstate(divide="ignore"):
            return cls("ml", np.log(w.w))

    @classmethod
    def general(cls, func: Callable) -> "Metric":
        return cls("general", func=func)

    @property
    def is_additive(self) -> bool:
        return self.kind != "general"

    @property
    def bounded(self) -> bool:
        return self.is_additive and bool(np.all(np.isfinite(self.table)))


def eval_metric(q: Metric, joint) -> float:
    """q evaluated on a joint type over X x Y (an expectation when additive)."""
    joint = np.asarray(joint, dtype=float)
    if q.kind == "general":
        return float(q.func(joint))
    mask = joint > 0
    return float(np.sum(joint[mask] * q.table[mask]))


# ---------------------------------------------------------------------------
# canonical evaluation of additive scores on joint counts
#
# Scores of sequence pairs are compared for exact ties, so they must not
# depend on summation order.  Each table is reduced to its sorted distinct
# values; a pair of sequences is summarised by how many positions hit each
# distinct value, and the score is the fixed-order sum of count*value.


@dataclass(frozen=True)
class CanonicalTable:
    index: np.ndarray  # index[a, b] -> position in ``values``
    values: np.ndarray  # sorted distinct table values

    @classmethod
    def from_table(cls, table) -> "CanonicalTable":
        table = np.asarray(table, dtype=float)
        values, inv = np.unique(table, return_inverse=True)
        index = inv.reshape(table.shape).astype(np.int64)
        index.setflags(write=False)
        values = values.astype(float)
        values.setflags(write=False)
        return cls(index, values)

    def total_from_counts(self, counts) -> float:
        """Score of a pair summarised by joint counts ``counts[a, b]``."""
        per_value = np.zeros(len(self.values), dtype=np.int64)
        np.add.at(per_value, self.index.ravel(), np.asarray(counts, dtype=np.int64).ravel())
        return self.total_from_value_counts(per_value)

    def total_from_value_counts(self, per_value) -> float:
        acc = 0.0
        for c, v in zip(per_value, self.values):
            if c:
                acc += int(c) * float(v)
        return acc

    def totals_from_value_counts(self, per_value: np.ndarray) -> np.ndarray:
        """Vectorised version over rows of ``per_value`` (shape ``(k, nvalues)``)."""
        acc = np.zeros(per_value.shape[0])
        for j, v in enumerate(self.values):
            c = per_value[:, j]
            mask = c > 0
            term = np.zeros(per_value.shape[0])
            term[mask] = c[mask].astype(float) * v
            acc = acc + term
        return acc


def joint_counts(a, b, na: int, nb: int) -> np.ndarray:
    """Joint count matrix of two equal-length integer sequences."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return np.bincount(a * nb + b, minlength=na * nb).reshape(na, nb)
