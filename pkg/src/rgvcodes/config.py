"""Run configuration: a JSON document describing channel, input, metric and distance.

Example::

    {
      "channel": {"W": [[0.9, 0.1], [0.1, 0.9]]},
      "input": {"P": [0.5, 0.5]},
      "metric": {"kind": "ml"},
      "distance": {"kind": "bhattacharyya"},
      "delta_cap": 0.1,
      "delta": 0.01,
      "rate": {"grid": [0.02, 0.05, 0.1]},
      "code": {"n": 12, "m": 3}
    }

Errors are reported with the line of the offending key.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Channel, Metric, TypeDescriptor, quantize_type
from .distances import (
    DistanceFn,
    additive,
    beta_distance,
    bhattacharyya,
    chernoff,
    equivocation,
    hamming,
    neg_mutual_info,
    symmetrize,
)

DISTANCE_KINDS = ("hamming", "bhattacharyya", "chernoff", "additive", "neg_mi", "equivocation", "beta")
METRIC_KINDS = ("ml", "additive")


class ConfigError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None, path: str = "<config>"):
        self.line = line
        self.path = path
        where = f"{path}:{line}" if line else path
        super().__init__(f"{where}: {msg}")


@dataclass
class RunConfig:
    w: Channel
    p: np.ndarray
    q: Metric
    d: DistanceFn
    delta_cap: float
    delta: float
    rates: list
    n: Optional[int] = None
    m: Optional[int] = None
    distance_spec: Optional[dict] = None

    def type_for(self, n: int) -> TypeDescriptor:
        return quantize_type(self.p, n)

    def messages(self, n: int) -> int:
        if self.m is not None:
            return self.m
        return max(1, int(round(math.exp(n * self.rates[0]))))


class _Locator:
    def __init__(self, text: str):
        self.lines = text.splitlines()

    def line_of(self, key: str) -> Optional[int]:
        pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
        for i, ln in enumerate(self.lines, 1):
            if pat.search(ln):
                return i
        return None


def _matrix(val, what, err):
    try:
        a = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise err(f"{what} must be a numeric matrix")
    if a.ndim != 2:
        raise err(f"{what} must be a 2-D matrix")
    return a


def parse_config(text: str, path: str = "<config>") -> RunConfig:
    loc = _Locator(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, path)
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object", 1, path)

    def fail(key):
        return lambda msg: ConfigError(msg, loc.line_of(key), path)

    def need(obj, key, ctx):
        if not isinstance(obj, dict) or key not in obj:
            raise ConfigError(f"missing field '{ctx}{key}'", loc.line_of(ctx.rstrip(".").split(".")[-1]) if ctx else None, path)
        return obj[key]

    wm = _matrix(need(need(doc, "channel", ""), "W", "channel."), "channel.W", fail("W"))
    try:
        w = Channel(wm)
    except ValueError as exc:
        raise fail("W")(f"channel.W: {exc}")
    try:
        p = np.array(need(need(doc, "input", ""), "P", "input."), dtype=float)
        if p.shape != (w.nx,):
            raise ValueError(f"input.P must have {w.nx} entries")
        from .core import as_distribution

        p = as_distribution(p)
    except (TypeError, ValueError) as exc:
        raise fail("P")(f"input.P: {exc}")

    ms = need(doc, "metric", "")
    kind = need(ms, "kind", "metric.")
    if kind == "ml":
        q = Metric.ml(w)
    elif kind == "additive":
        t = _matrix(need(ms, "table", "metric."), "metric.table", fail("table"))
        if t.shape != (w.nx, w.ny):
            raise fail("table")(f"metric.table must be {w.nx}x{w.ny}")
        q = Metric.additive(t)
    else:
        raise fail("metric")(f"metric.kind must be one of {', '.join(METRIC_KINDS)}; got {kind!r}")

    ds = need(doc, "distance", "")
    d = _distance(ds, w, q, doc, fail, need)

    def number(key, default=None):
        if key not in doc:
            if default is None:
                raise ConfigError(f"missing field '{key}'", None, path)
            return default
        v = doc[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise fail(key)(f"{key} must be a finite number")
        return float(v)

    delta_cap = number("delta_cap")
    delta = number("delta", 0.0)
    if delta < 0:
        raise fail("delta")("delta must be nonnegative")

    rs = need(doc, "rate", "")
    if "single" in rs:
        rates = [rs["single"]]
    elif "grid" in rs:
        g = rs["grid"]
        if isinstance(g, dict):
            try:
                rates = list(np.linspace(float(g["start"]), float(g["stop"]), int(g["num"])))
            except (KeyError, TypeError, ValueError):
                raise fail("grid")("rate.grid object needs numeric start, stop and num")
        else:
            rates = g
    else:
        raise fail("rate")("rate needs 'single' or 'grid'")
    if not isinstance(rates, list) or not rates or not all(
            isinstance(r, (int, float)) and not isinstance(r, bool) and r > 0 for r in rates):
        raise fail("rate")("rates must be positive numbers")
    rates = [float(r) for r in rates]

    n = m = None
    if "code" in doc:
        code = doc["code"]
        n = code.get("n") if isinstance(code, dict) else None
        if not isinstance(n, int) or n < 1:
            raise fail("n")("code.n must be a positive integer")
        m = code.get("m")
        if m is not None and (not isinstance(m, int) or m < 1):
            raise fail("m")("code.m must be a positive integer")
    return RunConfig(w, p, q, d, delta_cap, delta, rates, n, m, ds)


def _distance(ds, w, q, doc, fail, need) -> DistanceFn:
    kind = need(ds, "kind", "distance.")
    if kind not in DISTANCE_KINDS:
        raise fail("distance")(f"distance.kind must be one of {', '.join(DISTANCE_KINDS)}; got {kind!r}")
    try:
        if kind == "hamming":
            d = hamming(w.nx)
        elif kind == "bhattacharyya":
            d = bhattacharyya(w)
        elif kind == "chernoff":
            s = ds.get("s", 0.5)
            if not isinstance(s, (int, float)) or s < 0:
                raise ValueError("distance.s must be a nonnegative number")
            d = chernoff(w, q, float(s))
        elif kind == "additive":
            t = _matrix(need(ds, "table", "distance."), "distance.table", fail("table"))
            if t.shape != (w.nx, w.nx):
                raise ValueError(f"distance.table must be {w.nx}x{w.nx}")
            d = additive(t)
        elif kind == "neg_mi":
            d = neg_mutual_info()
        elif kind == "equivocation":
            d = equivocation()
        else:
            rate = doc.get("rate", {})
            r0 = rate.get("single", (rate.get("grid") or [None])[0] if isinstance(rate.get("grid"), list) else None)
            if r0 is None:
                raise ValueError("beta distance needs a single rate")
            d = beta_distance(float(r0), w, q)
    except ValueError as exc:
        raise fail("distance")(str(exc))
    if ds.get("symmetrize"):
        d = symmetrize(d)
    return d


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path)
    return parse_config(text, path)
