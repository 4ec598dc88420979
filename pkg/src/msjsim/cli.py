"""Command-line front end: run, sweep, verify, rank-dump.

`run` and `sweep` execute every (policy, load, seed) triple of a config;
sweep writes the fixed-schema CSV, run prints a summary table.  `verify`
executes the randomized property suites.  `rank-dump` tabulates the
Gittins rank curves of a config's workload.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 runtime
abort.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import workload as wl
from .analysis import (
    recycle_bound,
    recycle_integral_estimate,
    theorem_gap_bound,
    waste_bound,
    waste_integral_estimate,
)
from .config import ConfigError, ExperimentConfig, parse_config
from .engine import EngineError, RGrid, run_simulation
from .gittins import dump_rank_curves_csv, need_rank_curves
from .policies import PolicyKind
from .verify import SUITES, run_suites

CSV_COLUMNS = [
    "policy", "k", "need_mode", "load", "lambda", "seed", "n_arrivals",
    "stable", "mean_T", "ci95_T", "mean_N", "mean_T_srpt1", "ratio_T",
    "gap_T", "gap_bound", "waste_est", "waste_bound", "recycle_est",
    "recycle_bound", "rwe_violations", "wall_seconds",
]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "" if not math.isfinite(x) else repr(x)
    return str(x)


def _run_one(cfg: ExperimentConfig, policy: PolicyKind, load, seed):
    workload = cfg.workload_for(load)
    grid = None
    if cfg.r_thresholds > 0 and policy not in (
        PolicyKind.SERVERFILLING_GITTINS, PolicyKind.DIVISORFILLING_GITTINS
    ):
        grid = RGrid.for_workload(workload, cfg.system, n_r=cfg.r_thresholds)
    return run_simulation(
        cfg.system, workload, policy, cfg.n_arrivals,
        warmup_fraction=cfg.warmup_fraction, r_grid=grid, seed=seed,
    )


def _task(args):
    cfg, policy, load, seed = args
    return (policy, load, seed), _run_one(cfg, policy, load, seed)


def collect_reports(cfg: ExperimentConfig, jobs=1):
    """All simulation reports keyed by (policy, load, seed); always includes
    the pooled SRPT baseline needed for the ratio columns."""
    policies = list(cfg.policies)
    if PolicyKind.SRPT_1 not in policies:
        policies.append(PolicyKind.SRPT_1)
    tasks = [(cfg, p, load, seed)
             for load in cfg.loads for seed in cfg.seeds for p in policies]
    reports = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for key, rep in pool.map(_task, tasks):
                reports[key] = rep
    else:
        for t in tasks:
            key, rep = _task(t)
            reports[key] = rep
    return reports


def sweep_rows(cfg: ExperimentConfig, reports):
    """One CSV row dict per configured (policy, load, seed) triple."""
    rows = []
    for load in cfg.loads:
        for seed in cfg.seeds:
            base = reports[(PolicyKind.SRPT_1, load, seed)]
            for policy in cfg.policies:
                rep = reports[(policy, load, seed)]
                workload = cfg.workload_for(load)
                lam = workload.arrival_rate
                row = {
                    "policy": policy.value,
                    "k": cfg.system.k,
                    "need_mode": cfg.system.need_mode.value,
                    "load": load,
                    "lambda": lam,
                    "seed": seed,
                    "n_arrivals": cfg.n_arrivals,
                    "stable": rep.stable,
                    "mean_T": rep.mean_T if rep.stable else None,
                    "ci95_T": rep.ci95_T if rep.stable else None,
                    "mean_N": rep.mean_N if rep.stable else None,
                    "mean_T_srpt1": base.mean_T if base.stable else None,
                    "ratio_T": None,
                    "gap_T": None,
                    "gap_bound": theorem_gap_bound(cfg.system.k, lam, load),
                    "waste_est": None,
                    "waste_bound": waste_bound(cfg.system.k, load),
                    "recycle_est": None,
                    "recycle_bound": recycle_bound(cfg.system.k, load),
                    "rwe_violations": (rep.rwe_violations
                                       if rep.thresholds is not None else None),
                    "wall_seconds": rep.wall_time,
                }
                if rep.stable and base.stable:
                    row["ratio_T"] = rep.mean_T / base.mean_T
                    row["gap_T"] = rep.mean_T - base.mean_T
                if rep.stable and rep.thresholds is not None:
                    row["waste_est"] = waste_integral_estimate(
                        rep, workload, cfg.system)
                    row["recycle_est"] = recycle_integral_estimate(
                        rep, workload, cfg.system)
                rows.append(row)
    rows.sort(key=lambda r: (r["load"], r["policy"], r["seed"]))
    return rows


def write_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")


def _load_config(path):
    with open(path, encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    seed_base = os.environ.get("MSJ_SEED")
    if seed_base is not None:
        base = int(seed_base)
        cfg = ExperimentConfig(
            system=cfg.system, classes=cfg.classes, loads=cfg.loads,
            policies=cfg.policies, n_arrivals=cfg.n_arrivals,
            warmup_fraction=cfg.warmup_fraction,
            seeds=tuple(base + i for i in range(len(cfg.seeds))),
            r_thresholds=cfg.r_thresholds, output=cfg.output,
        )
    return cfg


def cmd_run(args):
    cfg = _load_config(args.config)
    reports = collect_reports(cfg, jobs=args.jobs)
    rows = sweep_rows(cfg, reports)
    print(f"{'policy':<24} {'load':>6} {'seed':>4} {'stable':>6} "
          f"{'mean_T':>12} {'ci95':>10} {'ratio':>8}")
    for row in rows:
        def cell(key, width, spec):
            v = row[key]
            if v is None or (isinstance(v, float) and not math.isfinite(v)):
                return " " * width
            return f"{v:>{width}{spec}}"
        print(f"{row['policy']:<24} {row['load']:>6.4g} {row['seed']:>4} "
              f"{_fmt(row['stable']):>6} "
              + cell("mean_T", 12, ".5g") + " "
              + cell("ci95_T", 10, ".3g") + " "
              + cell("ratio_T", 8, ".4g"))
    out = args.output or cfg.output
    if out:
        write_csv(rows, out)
        print(f"wrote {out}")
    return 0


def cmd_sweep(args):
    cfg = _load_config(args.config)
    out = args.output or cfg.output
    if not out:
        raise ConfigError(["run.output: sweep needs an output path "
                           "(config run.output or --output)"])
    reports = collect_reports(cfg, jobs=args.jobs)
    rows = sweep_rows(cfg, reports)
    write_csv(rows, out)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def cmd_verify(args):
    names = args.suite or None
    results = run_suites(names=names, cases=args.cases, seed=args.seed)
    width = max(len(r.name) for r in results)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{r.name:<{width}}  {status}  cases={r.cases}"
        if r.detail:
            line += f"  {r.detail}"
        print(line)
        failed = failed or not r.passed
    return 1 if failed else 0


def cmd_rank_dump(args):
    cfg = _load_config(args.config)
    workload = cfg.workload_for(cfg.loads[0])
    curves = need_rank_curves(workload, cfg.system)
    ordered = [curves[need] for need in sorted(curves)]
    out = args.output or cfg.output
    if out:
        dump_rank_curves_csv(ordered, out)
        print(f"wrote {out}")
    else:
        sys.stdout.write("class_id,age,rank\n")
        for curve in ordered:
            for a, r in zip(curve.age_grid, curve.rank_values):
                sys.stdout.write(f"{curve.class_id},{float(a)!r},{float(r)!r}\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="msjsim",
        description="Multiserver-job scheduling simulator and bound checker",
    )
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel worker count for run/sweep")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config, print a summary table")
    p_run.add_argument("config")
    p_run.add_argument("--output", help="also write the CSV here")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="execute a config, write the sweep CSV")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--output", help="CSV path (overrides config)")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the property suites")
    p_verify.add_argument("--suite", action="append", choices=sorted(SUITES),
                          help="restrict to one suite (repeatable)")
    p_verify.add_argument("--cases", type=int, default=None,
                          help="instances per suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(fn=cmd_verify)

    p_rank = sub.add_parser("rank-dump", help="tabulate Gittins rank curves")
    p_rank.add_argument("config")
    p_rank.add_argument("--output", help="CSV path (default stdout)")
    p_rank.set_defaults(fn=cmd_rank_dump)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except (EngineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
