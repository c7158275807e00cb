"""Compare the compiled kernels against the pure-Python fallback.

Both backends consume the same Philox stream, so besides timing we check
that they return identical counts.

    python3 benchmarks/bench_kernels.py --n 24 --m 8 --trials 2000
"""
import argparse
import time

import numpy as np

from rgvcodes import _kernels_py
from rgvcodes.codebook import RgvConfig, kernel_tables, philox
from rgvcodes.core import CanonicalTable, Channel, Metric, quantize_type
from rgvcodes.distances import hamming

try:
    from rgvcodes import _kernels as _compiled
except ImportError:
    _compiled = None


def _setup(n, m, delta_cap, eps):
    w = Channel.bsc(eps)
    q = Metric.ml(w)
    cfg = RgvConfig(n, m, quantize_type([0.5, 0.5], n), hamming(2), delta_cap, 0.0)
    dv, dvals, dnv = kernel_tables(cfg.d)
    qc = CanonicalTable.from_table(q.table)
    return cfg, (dv, dvals, dnv), qc, np.cumsum(w.w, axis=1)


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(n=24, m=8, trials=2000, delta_cap=0.25, eps=0.1, seed=1, repeat=3):
    cfg, (dv, dvals, dnv), qc, cdf = _setup(n, m, delta_cap, eps)
    base = cfg.t.representative()
    rows = []
    backends = [("python", _kernels_py)] + ([("cython", _compiled)] if _compiled else [])
    for name, mod in backends:
        t_mc, counts = _time(lambda: mod.mc_trials(base, m, dv, dvals, dnv, delta_cap, qc.index, qc.values,
                                                   cdf, trials, philox(seed)), repeat)
        t_gen, (words, _) = _time(lambda: mod.generate_rejection(base, m, dv, dvals, dnv, delta_cap,
                                                                 philox(seed)), repeat)
        rows.append((name, t_mc, t_gen, counts, words))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=24)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--delta-cap", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rows = run(args.n, args.m, args.trials, args.delta_cap, seed=args.seed, repeat=args.repeat)
    print(f"n={args.n} m={args.m} trials={args.trials} delta_cap={args.delta_cap}")
    print(f"{'backend':8s} {'mc_trials [s]':>14s} {'generate [s]':>13s}  counts (beaten, ties, proposals)")
    for name, t_mc, t_gen, counts, _ in rows:
        print(f"{name:8s} {t_mc:14.4f} {t_gen:13.5f}  {counts}")
    if len(rows) == 2:
        (_, tp, gp, cp, wp), (_, tc, gc, cc, wc) = rows
        same = cp == tuple(cc) and np.array_equal(wp, wc)
        print(f"speedup: mc_trials x{tp / tc:.1f}, generate x{gp / gc:.1f}; identical output: {same}")
        return 0 if same else 1
    print("compiled extension not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
