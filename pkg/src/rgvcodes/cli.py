"""Command-line front end.

Subcommands: exponent, simulate, codebook, rate-limit, verify.
Exit status: 0 success, 1 verification failure, 2 configuration or usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from fractions import Fraction

from .config import ConfigError, RunConfig, load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

EXPONENT_FIELDS = ("R", "E_primal", "E_dual", "E_rc", "E_ex", "E_ck",
                   "rate_limit_primal", "rate_limit_dual", "flag")
RATE_FIELDS = ("delta_cap", "delta", "rate_limit_primal", "rate_limit_dual")


def fmt(x) -> str:
    """Decimal text that parses back to the same float."""
    if x is None:
        return ""
    if isinstance(x, (bool, str)):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        x = float(x)
    x = float(x) + 0.0  # normalises -0.0
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def write_csv(rows, fields, out) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(fields)
    for row in rows:
        wr.writerow([fmt(row.get(f)) for f in fields])
    text = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _dual_ok(cfg: RunConfig) -> bool:
    return cfg.q.is_additive and cfg.d.kind == "additive"


def exponent_rows(cfg: RunConfig) -> list:
    from .dual import ergv_dual, expurgated_dual, rate_limit_dual
    from .primal import PrimalProblem, ck_exponent, ergv_primal, rate_limit_primal, rc_exponent

    dual = _dual_ok(cfg)
    if not dual:
        print("warning: dual columns left blank (metric or distance is not additive)", file=sys.stderr)
    rl_p = rate_limit_primal(cfg.p, cfg.d, cfg.delta_cap, cfg.delta)
    rl_d = rate_limit_dual(cfg.p, cfg.d, cfg.delta_cap, cfg.delta) if dual else None
    rows = []
    for r in cfg.rates:
        row = {"R": r, "rate_limit_primal": rl_p, "rate_limit_dual": rl_d, "flag": ""}
        try:
            row["E_primal"] = ergv_primal(PrimalProblem(r, cfg.p, cfg.w, cfg.q, cfg.d, cfg.delta_cap, cfg.delta)).value
            if dual:
                row["E_dual"] = ergv_dual(r, cfg.p, cfg.w, cfg.q, cfg.d, cfg.delta_cap).value
            row["E_rc"] = rc_exponent(r, cfg.p, cfg.w, cfg.q).value
            row["E_ck"] = ck_exponent(r, cfg.p, cfg.w, cfg.q).value
            if cfg.q.is_additive:
                row["E_ex"] = expurgated_dual(r, cfg.p, cfg.w, cfg.q).value
            if r > rl_p + 1e-9:
                row["flag"] = "rate-condition-violated"
        except Exception as exc:  # reported per row; the sweep continues
            row["flag"] = f"error: {exc}"
        rows.append(row)
    return rows


def cmd_exponent(args) -> int:
    cfg = load_config(args.config)
    write_csv(exponent_rows(cfg), EXPONENT_FIELDS, args.out)
    return EXIT_OK


def cmd_rate_limit(args) -> int:
    from .dual import rate_limit_dual
    from .primal import rate_limit_primal

    cfg = load_config(args.config)
    row = {"delta_cap": cfg.delta_cap, "delta": cfg.delta,
           "rate_limit_primal": rate_limit_primal(cfg.p, cfg.d, cfg.delta_cap, cfg.delta)}
    if _dual_ok(cfg):
        row["rate_limit_dual"] = rate_limit_dual(cfg.p, cfg.d, cfg.delta_cap, cfg.delta)
    write_csv([row], RATE_FIELDS, args.out)
    return EXIT_OK


def _rgv_config(cfg: RunConfig):
    from .codebook import RgvConfig

    if cfg.n is None:
        raise ConfigError("this command needs a 'code' section with blocklength n")
    try:
        return RgvConfig(cfg.n, cfg.messages(cfg.n), cfg.type_for(cfg.n), cfg.d, cfg.delta_cap, cfg.delta)
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_codebook(args) -> int:
    from .codebook import check_packing, generate

    cfg = load_config(args.config)
    rc = _rgv_config(cfg)
    rep = check_packing(rc)
    if not rep.ok:
        print(f"error: packing condition fails (log slack {rep.log_slack:.6g})", file=sys.stderr)
        return EXIT_CONFIG
    text = generate(rc, args.seed).to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .codebook import check_packing
    from .simulate import CSV_FIELDS, csv_row, exact_pe, monte_carlo

    cfg = load_config(args.config)
    rc = _rgv_config(cfg)
    if not check_packing(rc):
        print("error: packing condition fails for this configuration", file=sys.stderr)
        return EXIT_CONFIG
    if args.exact:
        pe = float(exact_pe(rc, cfg.w, cfg.q))
        row = {"n": rc.n, "M": rc.m, "R": rc.rate, "trials": 0, "pe": pe, "ci": 0.0,
               "exponent_estimate": -math.log(pe) / rc.n if pe > 0 else math.inf}
    else:
        row = csv_row(monte_carlo(rc, cfg.w, cfg.q, args.trials, args.seed))
    write_csv([row], CSV_FIELDS, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    names = list(SUITES) if args.suite == ["all"] else args.suite
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        print(f"error: unknown suite {', '.join(unknown)}; available: {', '.join(SUITES)}, all",
              file=sys.stderr)
        return EXIT_CONFIG
    status = EXIT_OK
    for name in names:
        res = run_suite(name)
        print(res.summary())
        for c in res.checks:
            if not c.ok or args.verbose:
                detail = ", ".join(f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in c.detail.items())
                print(f"  {'ok  ' if c.ok else 'FAIL'} {c.name}: {detail}")
        if not res.ok:
            status = EXIT_FAIL
    return status


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rgv", description="Error exponents and simulations for recursive constant-composition codes.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        return p

    p = with_config(sub.add_parser("exponent", help="exponent sweep over the configured rates"))
    p.set_defaults(func=cmd_exponent)
    p = with_config(sub.add_parser("rate-limit", help="largest admissible rate for the configured distance"))
    p.set_defaults(func=cmd_rate_limit)
    p = with_config(sub.add_parser("codebook", help="generate and serialize a codebook"))
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_codebook)
    p = with_config(sub.add_parser("simulate", help="error probability by Monte Carlo or exact enumeration"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--exact", action="store_true", help="exact ensemble error probability (tiny instances)")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("verify", help="run check suites")
    p.add_argument("suite", nargs="+", help="suite names, or 'all'")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
