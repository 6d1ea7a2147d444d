"""Command-line interface.

Subcommands
-----------
run           run the (method x imbalance factor x seed) grid of a config file
sweep-lambda  tabulate both cost terms over a lambda grid and recommend a lambda
verify        run the built-in oracle checks
select        one class-balanced selection from a probability CSV

Configs are YAML (JSON works too, so a run manifest can be passed back in to
reproduce that run). Exit codes: 0 success, 1 config error, 2 run failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .balance import omega_from_counts
from .core import BalanceTarget
from .errors import CBALError, ConfigParse, NoPlateau, OutputUnwritable, ValidationError
from .scoring import batch_negative_entropy
from .simulator.data import Dataset, DatasetSpec, make_longtail_dataset
from .simulator.io import (
    ensure_writable_dir,
    read_features_csv,
    read_probability_csv,
    write_manifest,
    write_metrics_csv,
)
from .simulator.learner import LearnerConfig
from .simulator.loop import METHODS, LoopConfig, run_al_loop
from .simulator.sweep import lambda_sweep, select_lambda
from .solvers import SOLVERS, SelectorConfig, solve_cbal
from .verify import CHECKS, format_report, run_checks

EXIT_OK, EXIT_CONFIG, EXIT_RUN, EXIT_VERIFY = 0, 1, 2, 3

DEFAULTS = {
    "dataset": {
        "n_classes": 10,
        "samples_per_class": 500,
        "feature_dim": 16,
        "class_separation": 3.0,
        "imbalanced_fraction": 0.5,
        "test_per_class": 100,
        "init_fraction": 0.1,
        "train_csv": None,
        "test_csv": None,
    },
    "loop": {
        "initial_size": 500,
        "budget_per_cycle": 250,
        "total_budget": 1500,
        "solver": "local_search",
        "time_limit": None,
        "gap_tolerance": None,
        "bald_samples": 10,
        "learner": {"epochs": 200, "learning_rate": 0.5, "l2": 1e-3, "max_halvings": 5},
    },
    "methods": ["entropy"],
    "lambda": 1.0,
    "imbalance_factors": [1.0],
    "seeds": [0],
    "sweep": {"lambdas": [0.0, 0.5, 1.0, 2.0, 3.0], "plateau_tol": 0.02, "solver": "branch_and_bound"},
    "out_dir": "results",
    "record_timing": False,
}


# config ----------------------------------------------------------------------


def _merge(defaults: dict, given: dict, where: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigParse(f"{where or 'config'}: expected a mapping, got {type(given).__name__}")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        path = f"{where}.{key}" if where else str(key)
        if key not in defaults:
            raise ConfigParse(f"{path}: unknown key")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value if value is not None else {}, path)
        else:
            out[key] = value
    return out


def _as_list(value, key):
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigParse(f"{key}: must not be empty")
        return list(value)
    return [value]


def normalize_config(raw: dict) -> dict:
    """Fill defaults and validate every field; errors name the offending key."""
    cfg = _merge(DEFAULTS, raw or {}, "")
    cfg["methods"] = _as_list(cfg["methods"], "methods")
    for i, m in enumerate(cfg["methods"]):
        if m not in METHODS:
            raise ConfigParse(f"methods[{i}]: unknown method {m!r}; choose from {', '.join(METHODS)}")
    cfg["seeds"] = _as_list(cfg["seeds"], "seeds")
    for i, s in enumerate(cfg["seeds"]):
        if isinstance(s, bool) or not isinstance(s, int) or s < 0:
            raise ConfigParse(f"seeds[{i}]: must be a non-negative integer, got {s!r}")
    cfg["imbalance_factors"] = _as_list(cfg["imbalance_factors"], "imbalance_factors")
    for i, v in enumerate(cfg["imbalance_factors"]):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not (0 < v <= 1):
            raise ConfigParse(f"imbalance_factors[{i}]: must be in (0, 1], got {v!r}")
        cfg["imbalance_factors"][i] = float(v)
    lam = cfg["lambda"]
    if isinstance(lam, dict):
        for m, v in lam.items():
            if m not in METHODS:
                raise ConfigParse(f"lambda.{m}: unknown method")
            _check_lambda(v, f"lambda.{m}")
    else:
        _check_lambda(lam, "lambda")
    if cfg["loop"]["solver"] not in SOLVERS:
        raise ConfigParse(f"loop.solver: unknown solver {cfg['loop']['solver']!r}")
    if cfg["sweep"]["solver"] not in SOLVERS:
        raise ConfigParse(f"sweep.solver: unknown solver {cfg['sweep']['solver']!r}")
    ds = cfg["dataset"]
    if (ds["train_csv"] is None) != (ds["test_csv"] is None):
        raise ConfigParse("dataset.test_csv: train_csv and test_csv must be given together")
    # constructing the typed configs surfaces range errors now, not mid-grid
    for section, build in (("loop", lambda: _loop_config(cfg, cfg["methods"][0], 0)),
                           ("dataset", lambda: _dataset_spec(cfg, cfg["imbalance_factors"][0], 0))):
        try:
            build()
        except (ValidationError, TypeError) as exc:
            raise ConfigParse(f"{section}: {exc}") from exc
    return cfg


def _check_lambda(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v >= 0:
        raise ConfigParse(f"{key}: must be a non-negative number, got {v!r}")


def load_config(path) -> dict:
    """Read a YAML config, or the ``config`` block of a run manifest."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigParse(f"{path}: not valid YAML ({exc})") from exc
    if isinstance(raw, dict) and "config" in raw and "versions" in raw:
        raw = raw["config"]
    return normalize_config(raw or {})


def apply_overrides(cfg: dict, args) -> dict:
    cfg = copy.deepcopy(cfg)
    if getattr(args, "seed", None) is not None:
        cfg["seeds"] = [args.seed]
    if getattr(args, "out_dir", None) is not None:
        cfg["out_dir"] = args.out_dir
    if getattr(args, "method", None) is not None:
        cfg["methods"] = [args.method]
    if getattr(args, "lambda_", None) is not None:
        cfg["lambda"] = args.lambda_
    if getattr(args, "imbalance_factor", None) is not None:
        cfg["imbalance_factors"] = [args.imbalance_factor]
    if getattr(args, "budget", None) is not None:
        cfg["loop"]["total_budget"] = args.budget
    if getattr(args, "budget_per_cycle", None) is not None:
        cfg["loop"]["budget_per_cycle"] = args.budget_per_cycle
    if getattr(args, "initial_size", None) is not None:
        cfg["loop"]["initial_size"] = args.initial_size
    return normalize_config(cfg)


def method_lambda(cfg: dict, method: str) -> float:
    lam = cfg["lambda"]
    if isinstance(lam, dict):
        return float(lam.get(method, DEFAULTS["lambda"]))
    return float(lam)


def _loop_config(cfg: dict, method: str, seed: int) -> LoopConfig:
    loop = dict(cfg["loop"])
    learner = LearnerConfig(**loop.pop("learner"))
    return LoopConfig(**loop, lambda_=method_lambda(cfg, method), learner=learner, seed=seed)


def _dataset_spec(cfg: dict, imbalance_factor: float, seed: int) -> DatasetSpec:
    ds = {k: v for k, v in cfg["dataset"].items() if k not in ("train_csv", "test_csv")}
    return DatasetSpec(**ds, imbalance_factor=imbalance_factor, seed=seed)


def build_dataset(cfg: dict, imbalance_factor: float, seed: int) -> Dataset:
    ds = cfg["dataset"]
    if ds["train_csv"] is not None:
        Xtr, ytr = read_features_csv(ds["train_csv"])
        Xte, yte = read_features_csv(ds["test_csv"])
        return Dataset.from_arrays(Xtr, ytr, Xte, yte)
    return make_longtail_dataset(_dataset_spec(cfg, imbalance_factor, seed))


def single_run_config(cfg: dict, method: str, imbalance_factor: float, seed: int) -> dict:
    out = copy.deepcopy(cfg)
    out["methods"] = [method]
    out["imbalance_factors"] = [imbalance_factor]
    out["seeds"] = [seed]
    out["lambda"] = method_lambda(cfg, method)
    return out


def run_name(method: str, imbalance_factor: float, seed: int) -> str:
    return f"{method}_if{imbalance_factor:g}_seed{seed}"


# commands ----------------------------------------------------------------------


def _run_cell(cfg: dict, method: str, imbalance_factor: float, seed: int):
    """Execute one grid cell and write its outputs; returns summary rows."""
    run_cfg = single_run_config(cfg, method, imbalance_factor, seed)
    ds = build_dataset(run_cfg, imbalance_factor, seed)
    record = run_al_loop(ds, method, _loop_config(run_cfg, method, seed))
    out = Path(cfg["out_dir"]) / run_name(method, imbalance_factor, seed)
    write_metrics_csv(out / "metrics.csv", record, record_timing=bool(cfg["record_timing"]))
    write_manifest(out / "manifest.json", run_cfg, record)
    return [
        [method, repr(imbalance_factor), seed, c.cycle, c.labeled_size, repr(c.test_accuracy), repr(c.l1_score)]
        + list(c.histogram)
        for c in record.cycles
    ], record.n_classes


def cmd_run(cfg: dict, jobs: int = 1, stream=None) -> int:
    out_dir = ensure_writable_dir(cfg["out_dir"])
    cells = [(m, f, s) for m in cfg["methods"] for f in cfg["imbalance_factors"] for s in cfg["seeds"]]
    failures = 0
    summary, n_classes = [], None
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, cfg, *cell) for cell in cells]
            outcomes = []
            for cell, fut in zip(cells, futures):
                try:
                    outcomes.append((cell, fut.result(), None))
                except CBALError as exc:
                    outcomes.append((cell, None, exc))
    else:
        outcomes = []
        for cell in cells:
            try:
                outcomes.append((cell, _run_cell(cfg, *cell), None))
            except CBALError as exc:
                outcomes.append((cell, None, exc))
    for (m, f, s), result, exc in outcomes:
        if exc is not None:
            failures += 1
            print(f"FAILED {run_name(m, f, s)}: {type(exc).__name__}: {exc}", file=sys.stderr)
            continue
        rows, n_classes = result
        summary.extend(rows)
        print(f"ok {run_name(m, f, s)}", file=stream)
    if summary:
        with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(
                ["method", "imbalance_factor", "seed", "cycle", "labeled_size", "test_accuracy", "l1_score"]
                + [f"h{k}" for k in range(n_classes)]
            )
            w.writerows(summary)
    return EXIT_RUN if failures else EXIT_OK


def cmd_sweep_lambda(cfg: dict, stream=None) -> int:
    out_dir = ensure_writable_dir(cfg["out_dir"])
    sweep = cfg["sweep"]
    status = EXIT_OK
    for f in cfg["imbalance_factors"]:
        for seed in cfg["seeds"]:
            ds = build_dataset(cfg, f, seed)
            loop = _loop_config(cfg, "entropy_cb", seed)
            rows = lambda_sweep(ds, sweep["lambdas"], loop, solver=sweep["solver"])
            path = out_dir / f"sweep_if{f:g}_seed{seed}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["lambda", "entropy_loss", "l1_loss", "l1_score", "proof"])
                for r in rows:
                    w.writerow([repr(r.lambda_), repr(r.entropy_loss), repr(r.l1_loss), repr(r.l1_score), r.proof])
            try:
                rec = select_lambda(rows, sweep["plateau_tol"])
                note = f"recommended lambda = {rec:g}"
            except NoPlateau as exc:
                rec, note = None, f"no plateau: {exc}"
                status = EXIT_RUN
            with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
                json.dump({"recommended_lambda": rec, "plateau_tol": sweep["plateau_tol"], "note": note}, fh, indent=2)
                fh.write("\n")
            print(f"{path.name}: {note}", file=stream)
    return status


def cmd_verify(seed: int = 0, inject_fault: str | None = None, stream=None) -> int:
    results = run_checks(seed=seed, inject_fault=inject_fault)
    print(format_report(results), file=stream)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_select(args, stream=None) -> int:
    stream = stream if stream is not None else sys.stdout
    p = read_probability_csv(args.probabilities)
    if args.target is not None:
        target = BalanceTarget(np.array([float(v) for v in args.target.split(",")]))
    elif args.class_counts is not None:
        counts = np.array([int(v) for v in args.class_counts.split(",")])
        target = omega_from_counts(counts, args.cycle, args.budget, int(counts.sum()) - (args.cycle - 1) * args.budget)
    else:
        target = BalanceTarget(np.full(p.c_classes, args.budget / p.c_classes))
    costs = batch_negative_entropy(p)
    cfg = SelectorConfig(args.lambda_ if args.lambda_ is not None else 1.0, args.budget, solver=args.solver,
                         time_limit=args.time_limit)
    res = solve_cbal(costs, p, target, cfg)
    json.dump(
        {
            "indices": list(res.selection.indices),
            "objective": res.objective,
            "entropy_term": res.linear_term,
            "balance_term": res.balance_term,
            "proof": res.proof,
            "nodes": res.nodes,
        },
        stream,
    )
    stream.write("\n")
    return EXIT_OK


# argument parsing ----------------------------------------------------------------


def _add_overrides(sp):
    sp.add_argument("config", help="YAML config file or run manifest")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir")
    sp.add_argument("--method")
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--imbalance-factor", type=float)
    sp.add_argument("--budget", type=int, help="total labeling budget")
    sp.add_argument("--budget-per-cycle", type=int)
    sp.add_argument("--initial-size", type=int)


class _Parser(argparse.ArgumentParser):
    """Usage errors are config errors, so they exit with 1 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cbal", description="Class-balanced batch active learning")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="run an experiment grid")
    _add_overrides(sp)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for grid cells")

    sp = sub.add_parser("sweep-lambda", help="tabulate cost terms over a lambda grid")
    _add_overrides(sp)

    sp = sub.add_parser("verify", help="run the built-in oracle checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inject-fault", choices=sorted(CHECKS) + ["all"], help="corrupt one check family")

    sp = sub.add_parser("select", help="select a batch from a probability CSV")
    sp.add_argument("probabilities")
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--target", help="comma-separated balance target, one value per class")
    sp.add_argument("--class-counts", help="comma-separated labeled counts; target follows from the schedule")
    sp.add_argument("--cycle", type=int, default=1)
    sp.add_argument("--solver", choices=SOLVERS, default="branch_and_bound")
    sp.add_argument("--time-limit", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.seed, args.inject_fault)
        cfg = None if args.command == "select" else apply_overrides(load_config(args.config), args)
    except (ConfigParse, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "select":
            return cmd_select(args)
        if args.command == "run":
            return cmd_run(cfg, jobs=max(1, args.jobs))
        return cmd_sweep_lambda(cfg)
    except OutputUnwritable as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_RUN
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CBALError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
