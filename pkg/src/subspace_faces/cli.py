"""``bench`` command line: run one experiment or a suite of them.

    bench run --config exp.json --components 40 --out report.json --trace trace.csv
    bench run --algorithm 2dpca --data ./orl --sweep 2,4,8
    bench suite --config suite.json --out table.csv
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import ALGORITHMS, ConfigError, ExperimentConfig, default_suite, run_experiment, run_suite, write_table

# CLI flag -> config key
OVERRIDES = {
    "algorithm": "algorithm",
    "data": "data",
    "layout": "layout",
    "train_per_subject": "train_per_subject",
    "split": "split_policy",
    "components": "components",
    "sweep": "sweep",
    "seed": "seed",
    "max_iter": "max_iter",
    "tol": "tol",
    "degree": "degree",
    "metric": "metric",
    "weight": "weight",
    "init": "init",
    "center": "center",
    "center_kernel": "center_kernel",
    "trace": "trace",
}


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _read_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Subspace face-recognition benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a single experiment")
    run.add_argument("--config", help="JSON experiment config; flags override its values")
    run.add_argument("--algorithm", choices=ALGORITHMS)
    run.add_argument("--data", help="corpus root laid out as <root>/<subject>/<image>.pgm")
    run.add_argument("--layout", choices=["orl_style"])
    run.add_argument("--train-per-subject", type=int)
    run.add_argument("--split", choices=["first_k", "seeded_random"])
    group = run.add_mutually_exclusive_group()
    group.add_argument("--components", type=int)
    group.add_argument("--sweep", type=_int_list, help="comma-separated component counts")
    run.add_argument("--seed", type=int)
    run.add_argument("--max-iter", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--degree", type=int)
    run.add_argument("--metric", choices=["euclidean", "frobenius", "colsum"])
    run.add_argument("--weight", choices=["cauchy", "l1"])
    run.add_argument("--init", choices=["max_norm_sample", "seeded_random"])
    run.add_argument("--center", action=argparse.BooleanOptionalAction, default=None,
                     help="center samples before robust fits (default on)")
    run.add_argument("--center-kernel", action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--out", help="write the JSON report here instead of stdout")
    run.add_argument("--trace", help="write the convergence trace CSV here")

    suite = sub.add_parser("suite", help="run a list of experiments")
    suite.add_argument("--config", help='JSON: a list of configs or {"defaults": {...}, "experiments": [...]}')
    suite.add_argument("--data", help="without --config: run all ten algorithms on this corpus")
    suite.add_argument("--out", required=True, help="combined table (.csv or .json)")
    suite.add_argument("--reports", help="also write the full per-experiment reports as JSON")
    suite.add_argument("--parallel", action="store_true")
    suite.add_argument("--workers", type=int)
    return parser


def config_from_args(args) -> ExperimentConfig:
    values = {}
    if args.config:
        loaded = _read_json(args.config)
        if not isinstance(loaded, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        values.update(loaded)
    for flag, key in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[key] = value
    if "components" in values and "sweep" in values:
        # a flag for one replaces a file value for the other
        drop = "sweep" if args.components is not None else "components"
        values.pop(drop)
    return ExperimentConfig.from_dict(values)


def suite_from_args(args) -> list[ExperimentConfig]:
    if not args.config:
        if not args.data:
            raise ConfigError("suite needs --config or --data")
        return default_suite(args.data)
    loaded = _read_json(args.config)
    if isinstance(loaded, list):
        defaults, entries = {}, loaded
    elif isinstance(loaded, dict):
        defaults, entries = loaded.get("defaults", {}), loaded.get("experiments", [])
        extra = set(loaded) - {"defaults", "experiments"}
        if extra:
            raise ConfigError(f"unknown suite keys: {', '.join(sorted(extra))}")
    else:
        raise ConfigError(f"{args.config}: expected a JSON list or object")
    if args.data:
        defaults = {**defaults, "data": args.data}
    return [ExperimentConfig.from_dict({**defaults, **entry}) for entry in entries]


def _summary(report) -> str:
    cfg = report.config
    parts = [
        f"{cfg['algorithm']}: accuracy {report.best_accuracy:.4f} at k={report.best_k}",
        f"fit {report.fit_time_s:.3f}s",
        f"eval {report.eval_time_s:.3f}s",
    ]
    if report.eigenproblem_shape:
        parts.append("eigenproblem {}x{}".format(*report.eigenproblem_shape))
    if report.converged_at is not None:
        parts.append(f"converged at {report.converged_at}")
    return ", ".join(parts)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_experiment(config_from_args(args))
            if args.out:
                Path(args.out).write_text(report.to_json(indent=2))
                print(_summary(report))
            else:
                print(report.to_json(indent=2))
        else:
            reports, rows = run_suite(suite_from_args(args), parallel=args.parallel, max_workers=args.workers)
            write_table(rows, args.out)
            if args.reports:
                Path(args.reports).write_text(json.dumps([r.to_dict() for r in reports], indent=2))
            for r in reports:
                print(f"{r.config['algorithm']}: error: {r.error}" if r.error else _summary(r))
    except (ValueError, OSError, TypeError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
