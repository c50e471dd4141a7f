"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 verification failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import ConfigError, IdxFormatError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3


def _log(msg: str):
    print(msg, file=sys.stderr, flush=True)


def cmd_train(args) -> int:
    from .harness.config import load_config
    from .harness.experiment import run_experiment
    from .harness.metrics import write_csv

    cfg = load_config(args.config, args.set)
    if args.output:
        cfg.output = args.output
    rows = run_experiment(cfg, progress=None if args.quiet else _log)
    if not cfg.output:
        write_csv(rows, sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .harness.suites import verify_operator

    report = verify_operator(args.seed, args.draws, args.mdps, args.episodes)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_fig1(args) -> int:
    from .harness.fig1 import fig1_probability_curve

    curve = fig1_probability_curve(args.max_updates, args.trials, np.random.default_rng(args.seed))
    print("updates,uniform,ebu")
    for k, u, e in curve.rows():
        print(f"{k},{u:.4f},{e:.4f}")
    return EXIT_OK


def cmd_maze_bench(args) -> int:
    from .harness.config import load_config
    from .harness.metrics import write_csv
    from .harness.suites import bench_run_config, directional_checks, run_maze_bench

    cfg = load_config(args.config, args.set, base=bench_run_config())
    result = run_maze_bench(cfg, progress=None if args.quiet else _log)
    out = args.output or cfg.output
    if out:
        with open(out, "w", newline="") as fh:
            write_csv(result.rows, fh)
    for line in result.summary_lines():
        print(line)
    print("median relative length by step")
    for line in result.curve_lines():
        print(line)
    ok = True
    for text, passed in directional_checks(result):
        print(f"{'PASS' if passed else 'FAIL'} {text}")
        ok &= passed
    print(f"total {result.seconds:.1f}s")
    return EXIT_VERIFY if (args.check and not ok) else EXIT_OK


def cmd_idx_inspect(args) -> int:
    from .idx import describe_idx

    for path in args.files:
        print(describe_idx(path))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ebu", description="Episodic backward update experiments")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train agents from a config file and emit metric CSV")
    t.add_argument("config", nargs="?", help="key = value config file")
    t.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    t.add_argument("-o", "--output", help="CSV path (default: stdout)")
    t.add_argument("-q", "--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    v = sub.add_parser("verify-operator", help="check contraction and fixed point of the backward operator")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--draws", type=int, default=200)
    v.add_argument("--mdps", type=int, default=50)
    v.add_argument("--episodes", type=int, default=100)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fig1", help="probability of the optimal chain policy after k updates")
    f.add_argument("--max-updates", type=int, default=40)
    f.add_argument("--trials", type=int, default=10_000)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fig1)

    m = sub.add_parser("maze-bench", help="relative-length benchmark on random mazes")
    m.add_argument("config", nargs="?", help="optional config file overriding the desk defaults")
    m.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    m.add_argument("-o", "--output", help="write every evaluation row to this CSV")
    m.add_argument("--check", action="store_true", help="exit 3 when an EBU ordering check fails")
    m.add_argument("-q", "--quiet", action="store_true")
    m.set_defaults(func=cmd_maze_bench)

    i = sub.add_parser("idx-inspect", help="print the header of IDX image/label files")
    i.add_argument("files", nargs="+")
    i.set_defaults(func=cmd_idx_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except (IdxFormatError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_RUNTIME if not isinstance(exc, FileNotFoundError) else EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime failure
        _log(f"runtime failure: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
