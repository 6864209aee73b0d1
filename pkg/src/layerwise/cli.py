"""Command line entry point: ``layerwise {sweep,transfer,diagnose,csq,validate}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time

from .config import ExperimentConfig, apply_profile, load_config

DEFAULT_OUT = {
    "sweep": "results/sweep.csv",
    "transfer": "results/transfer.csv",
    "diagnose": "results/diagnose",
    "csq": "results/csq.csv",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML experiment config")
    common.add_argument("--out", metavar="PATH", help="output CSV (a directory for diagnose)")
    common.add_argument("--profile", choices=("full", "fast"), default="full",
                        help="fast: test sets of 1e4 and 3 seeds")
    common.add_argument("--seeds", type=int, metavar="K", help="use seeds 0..K-1")
    common.add_argument("--resample-stage2", action="store_true",
                        help="fit the head on a fresh sample instead of reusing the first-step data")
    common.add_argument("--resume", action="store_true", help="skip cells already present in the output file")
    common.add_argument("--workers", type=int, metavar="W", help="worker processes (output does not depend on W)")
    common.add_argument("--master-seed", type=int, metavar="S")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="layerwise", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="sample-complexity sweep over methods x n x seeds")
    sub.add_parser("transfer", parents=[common], help="pretrain then refit the head on a new target")
    sub.add_parser("diagnose", parents=[common], help="residual scaling, alignment and v_k tables")
    sub.add_parser("csq", parents=[common], help="quasi-orthogonal class, query lower bound, adversary game")
    sub.add_parser("validate", parents=[common], help="fast invariant checks; nonzero exit on failure")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig(kind=args.command)
    cfg.kind = args.command
    cfg = apply_profile(cfg, args.profile)
    if args.seeds is not None:
        if args.seeds < 1:
            raise SystemExit("--seeds must be at least 1")
        cfg.seeds = list(range(args.seeds))
    if args.resample_stage2:
        cfg.train = dataclasses.replace(cfg.train, resample_stage2=True)
    if args.workers is not None:
        cfg.workers = args.workers
    if args.master_seed is not None:
        cfg.master_seed = args.master_seed
    if args.out:
        cfg.out = args.out
    elif cfg.out is None:
        cfg.out = DEFAULT_OUT.get(cfg.kind)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    from . import harness, validate

    if args.command == "validate":
        t0 = time.perf_counter()
        checks = validate.run_validate()
        for c in checks:
            print(c.line())
        failed = sum(not c.passed for c in checks)
        print(f"{len(checks) - failed}/{len(checks)} checks passed in {time.perf_counter() - t0:.1f}s")
        return 1 if failed else 0

    cfg = resolve_config(args)
    if cfg.kind == "sweep":
        records = harness.run_sweep(cfg, resume=args.resume)
    elif cfg.kind == "transfer":
        records = harness.run_transfer(cfg, resume=args.resume)
    elif cfg.kind == "diagnose":
        tables = harness.run_diagnose(cfg)
        for name, rows in tables.items():
            print(f"{name}: {len(rows)} rows -> {cfg.out}/{name}.csv")
        return 1 if any("error" in rows[0] for rows in tables.values() if rows) else 0
    else:
        rows = harness.run_csq(cfg)
        for row in rows:
            print(", ".join(f"{k}={v}" for k, v in row.items()))
        return 0

    failed = sum(not r.ok for r in records)
    print(f"{len(records)} records ({failed} failed) -> {cfg.out}")
    for cell in harness.summarize(records):
        N = "" if cell["N"] is None else f" N={cell['N']}"
        print(f"  {cell['method']:<10} n={cell['n']}{N}: l2 {cell['l2_mean']:.4f} +/- {cell['l2_std']:.4f} "
              f"({cell['count']} seeds)")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
