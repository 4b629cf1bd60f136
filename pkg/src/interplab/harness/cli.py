"""Command-line entry point.

Subcommands: generate, run, sweep, select-stepsize, verify.
Exit codes: 0 success, 1 configuration error, 2 failures present in the
report (diverged/errored runs, rejected selections, failed checks).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from ..errors import ConfigError, InterplabError
from . import config as config_mod
from . import runner, select, verify


def _parse_seeds(text):
    try:
        return [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be a list of integers, got {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(
        prog="interplab",
        description="Config-driven experiment harness for interpolating "
        "linear models and preconditioned optimizers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True, out=True, seeds=False, jobs=False):
        if config:
            p.add_argument("--config", required=True, help="TOML experiment config")
        if out:
            p.add_argument("--out", required=True, help="output directory")
        if seeds:
            p.add_argument("--seeds", help="override config seeds, e.g. '0,1,2'")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="parallel workers")

    p_gen = sub.add_parser("generate", help="serialize the configured dataset")
    add_common(p_gen)

    p_run = sub.add_parser("run", help="execute the configured sweep")
    add_common(p_run, seeds=True, jobs=True)

    p_sweep = sub.add_parser(
        "sweep", help="execute the sweep in parallel (defaults --jobs to CPU count)"
    )
    add_common(p_sweep, seeds=True, jobs=True)

    p_sel = sub.add_parser(
        "select-stepsize", help="pick step sizes from completed run CSVs"
    )
    add_common(p_sel)

    p_ver = sub.add_parser("verify", help="run built-in consistency suites")
    p_ver.add_argument("suites", nargs="*", help="suite names (default: all)")
    p_ver.add_argument("--out", help="optional report CSV path")
    return parser


def cmd_generate(args):
    cfg = config_mod.load(args.config)
    for path in runner.write_dataset_files(cfg, args.out):
        print(path)
    return 0


def _cmd_run(args, default_jobs=None):
    cfg = config_mod.load(args.config)
    seeds = _parse_seeds(args.seeds) if args.seeds else None
    jobs = args.jobs if default_jobs is None else (args.jobs or default_jobs)
    results = runner.execute(cfg, args.out, seeds=seeds, jobs=jobs)
    bad = 0
    for res in results:
        line = (
            f"{res['status']:<9} {res['optimizer']} eta={res['eta']:g} "
            f"seed={res['seed']} rows={res['rows']}"
        )
        if res["error"]:
            line += f"  ({res['error']})"
        print(line)
        bad += res["status"] != "ok"
    print(f"{len(results) - bad}/{len(results)} runs ok")
    return 2 if bad else 0


def cmd_run(args):
    return _cmd_run(args)


def cmd_sweep(args):
    if args.jobs == 1:
        args.jobs = os.cpu_count() or 1
    return _cmd_run(args)


def cmd_select(args):
    cfg = config_mod.load(args.config)
    choices, rows = select.select_stepsizes(args.out, cfg.config_hash)
    for row in rows:
        mark = "selected" if row["selected"] else row["reason"]
        print(
            f"{row['optimizer']} eta={row['eta']:g} "
            f"admissible={row['admissible']} {mark}"
        )
    failed = [opt for opt, eta in choices.items() if eta is None]
    for opt in failed:
        print(f"selection failed for {opt}: every candidate rejected")
    return 2 if failed else 0


def cmd_verify(args):
    rows, failed = verify.run_suites(args.suites or None)
    for row in rows:
        print(
            f"{row['suite']}/{row['check']},{row['observed']:.3e},"
            f"{row['threshold']:.3e},{'PASS' if row['passed'] else 'FAIL'}"
        )
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["suite", "check", "observed", "threshold", "passed"]
            )
            writer.writeheader()
            writer.writerows(rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return 2 if failed else 0


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "select-stepsize": cmd_select,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InterplabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
