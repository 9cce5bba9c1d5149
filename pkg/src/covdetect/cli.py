"""Command-line entry point: ``covdetect {sweep,mse,bench,verify}``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from contextlib import contextmanager

from .config import parse_config
from .errors import ConfigError, InvalidParameterError
from . import harness

SWEEP_HEADER = ["M", "P_MD", "P_FA", "mse_emp", "mse_analytic", "detect_time_s", "trials"]
MSE_HEADER = ["M", "pilots", "mse_emp", "mse_analytic", "trials"]
BENCH_HEADER = ["L", "M", "median_detect_time_s", "repeats"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; keys are the flag names")
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--l", type=int, action="append",
                        help="pilot length (repeat for bench to sweep L)")
    common.add_argument("--m", type=int, action="append", help="antenna count (repeatable)")
    common.add_argument("--delta", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--threshold", help="ideal | mp:<gamma> | fixed:<eta>")
    common.add_argument("--pilots", choices=["designed", "gaussian"])
    common.add_argument("--dmin-km", type=float)
    common.add_argument("--dmax-km", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="covdetect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="detection error rates and MSE versus M")
    sub.add_parser("mse", parents=[common],
                   help="channel-estimation MSE with known active users, designed vs gaussian pilots")
    bench = sub.add_parser("bench", parents=[common], help="median detection time per (L, M)")
    bench.add_argument("--repeats", type=int, default=100)
    sub.add_parser("verify", parents=[common], help="noise-free exhaustive and oracle checks")
    return parser


def _flag_values(ns) -> dict:
    keys = ["n", "k", "m", "delta", "trials", "seed", "threshold", "pilots",
            "dmin_km", "dmax_km", "workers", "out"]
    values = {k: getattr(ns, k) for k in keys}
    if ns.l:
        values["l"] = ns.l[-1]
    return values


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with _output(path) as fh:
        fh.write(buf.getvalue())


def _num(x) -> str:
    return repr(float(x))


def cmd_sweep(cfg) -> int:
    summary = harness.run_experiment(cfg)
    rows = [[r.M, _num(r.p_md), _num(r.p_fa), _num(r.mse_emp), _num(r.mse_analytic),
             _num(r.detect_time_s), r.trials] for r in summary.rows]
    _write_csv(cfg.out, SWEEP_HEADER, rows)
    return 0


def cmd_mse(cfg, explicit_pilots) -> int:
    schemes = (explicit_pilots,) if explicit_pilots else ("designed", "gaussian")
    rows = harness.run_mse_experiment(cfg, schemes)
    _write_csv(cfg.out, MSE_HEADER,
               [[r.M, r.pilots, _num(r.mse_emp), _num(r.mse_analytic), r.trials] for r in rows])
    return 0


def cmd_bench(cfg, L_list, repeats) -> int:
    table = harness.benchmark_scaling(cfg, cfg.M, L_list or [cfg.L], repeats=repeats)
    _write_csv(cfg.out, BENCH_HEADER, [[L, M, _num(t), n] for L, M, t, n in table])
    return 0


def cmd_verify() -> int:
    from .verify import run_all

    results = run_all()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(_flag_values(ns), ns.config)
        if ns.command == "sweep":
            return cmd_sweep(cfg)
        if ns.command == "mse":
            return cmd_mse(cfg, ns.pilots)
        if ns.command == "bench":
            return cmd_bench(cfg, ns.l, ns.repeats)
        return cmd_verify()
    except (ConfigError, InvalidParameterError, OSError) as exc:
        print(f"covdetect: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
