"""Command-line entry point: data generation, single-run estimation, and
the benchmark suites, each a thin wrapper over the library.

Flag values beat config-file values beat built-in defaults. Exit codes:
0 success, 2 usage error, 3 config error, 4 data error, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .bench import (
    ExperimentPlan,
    run_arch_sweep,
    run_diagnostics,
    run_ladder,
    run_sector_split,
    run_tournament,
)
from .config import EmbeddingConfig, StructuralConfig, load_config
from .datagen import Dataset, generate
from .dml import crossfit_nuisance, plr_estimate
from .errors import ConfigError, DataError, NumericalError
from .learners import LearnerSpec

_LEARNERS = ("linear", "tree", "gbm", "rgbm", "mlp")
_SUITES = {
    "ladder": run_ladder,
    "tournament": run_tournament,
    "arch-sweep": run_arch_sweep,
    "sectors": run_sector_split,
    "diagnostics": run_diagnostics,
}


def _parse_seeds(text: str) -> tuple[int, ...]:
    """`A..B` (inclusive), a comma list, or a single integer."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad seed range {text!r}, expected A..B")
        if b < a:
            raise ConfigError(f"empty seed range {text!r}")
        return tuple(range(a, b + 1))
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise ConfigError(f"bad seeds {text!r}, expected A..B or a comma list")


def _parse_arch(text: str) -> tuple[int, ...]:
    try:
        arch = tuple(int(h) for h in text.split(","))
    except ValueError:
        raise ConfigError(f"bad architecture {text!r}, expected a,b,c")
    if not arch:
        raise ConfigError("architecture must name at least one layer")
    return arch


def _structural_from_args(args) -> tuple[StructuralConfig, EmbeddingConfig]:
    """Config file (structural fields + optional embedding) with flag overrides."""
    if args.config:
        cfg, emb = load_config(args.config)
    else:
        cfg, emb = StructuralConfig(), EmbeddingConfig()
    overrides = {}
    if args.rho is not None:
        overrides["rho"] = args.rho
    if args.selection_sign is not None:
        overrides["selection_sign"] = args.selection_sign
    if args.kappa is not None:
        overrides["kappa"] = args.kappa
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg, emb


def _spec_from_args(args) -> LearnerSpec:
    spec = getattr(LearnerSpec, args.learner)()
    if args.arch is not None:
        if args.learner != "mlp":
            raise ConfigError("--arch only applies to --learner mlp")
        spec = dataclasses.replace(spec, hidden_layers=_parse_arch(args.arch))
    return spec


def _cmd_generate(args) -> int:
    cfg, emb = _structural_from_args(args)
    ds = generate(cfg, emb, n=args.n, seed=args.seed)
    out = Path(args.out)
    ds.to_dir(out)
    print(f"wrote {out / 'data.csv'} and {out / 'config.json'} "
          f"(n={ds.n}, seed={ds.seed}, true_ate={ds.true_ate:.4f})")
    return 0


def _cmd_estimate(args) -> int:
    ds = Dataset.from_dir(args.data)
    spec = _spec_from_args(args)
    rng_seed = ds.seed if args.seed is None else args.seed
    pair = crossfit_nuisance(ds, spec, args.features, args.folds, rng_seed)
    est = plr_estimate(ds, pair)
    print(json.dumps(est.to_dict(), indent=2, sort_keys=True))
    return 0


def _plan_from_args(args) -> ExperimentPlan:
    plan = ExperimentPlan.load(args.config) if args.config else ExperimentPlan()
    overrides = {}
    if args.n is not None:
        overrides["n_units"] = args.n
    if args.seeds is not None:
        overrides["seeds"] = _parse_seeds(args.seeds)
    if args.folds is not None:
        overrides["folds"] = args.folds
    cfg_overrides = {}
    if args.rho is not None:
        cfg_overrides["rho"] = args.rho
    if args.selection_sign is not None:
        cfg_overrides["selection_sign"] = args.selection_sign
    if args.kappa is not None:
        cfg_overrides["kappa"] = args.kappa
    if cfg_overrides:
        overrides["config"] = dataclasses.replace(plan.config, **cfg_overrides)
    if overrides:
        plan = dataclasses.replace(plan, **overrides)
    return plan


def _cmd_suite(args) -> int:
    plan = _plan_from_args(args)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    report = _SUITES[args.command](plan, jobs=jobs)
    for agg in report.aggregates:
        if "mean_bias_pct" in agg:
            print(f"{agg['estimator']}: mean_bias_pct={agg['mean_bias_pct']:+.2f} "
                  f"sd={agg['sd_bias_pct']:.2f} runs={agg['n_runs']}")
        else:
            print(f"{agg['estimator']}: all {agg['n_runs']} runs failed")
    if report.diagnostics is not None:
        for key, val in report.diagnostics["means"].items():
            print(f"{key}: {val:.4f}")
    if report.sectors is not None:
        for row in report.sectors:
            status = "skipped" if row["skipped"] else f"n={row['n']}"
            print(f"sector {row['sector']}: {status}")
    for path in report.write(args.out):
        print(f"wrote {path}")
    return 0


def _add_dgp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, default=None,
                   help="ability/motivation correlation (default: config value)")
    p.add_argument("--selection-sign", type=int, choices=(-1, 1), default=None,
                   help="+1 selects high-ability units into treatment, -1 low")
    p.add_argument("--kappa", type=float, default=None,
                   help="treatment effect heterogeneity in ability")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textdml",
        description="Synthetic labor-market benchmark: generation, "
                    "estimation, and benchmark suites.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a dataset and write it to a directory")
    g.add_argument("--n", type=int, default=2000, help="number of units (default 2000)")
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--config", default=None,
                   help="JSON file of structural fields plus an optional "
                        "'embedding' object")
    g.add_argument("--out", required=True, help="output directory")
    _add_dgp_flags(g)
    g.set_defaults(func=_cmd_generate)

    e = sub.add_parser("estimate", help="one DML estimate on a stored dataset")
    e.add_argument("--data", required=True, help="directory written by generate")
    e.add_argument("--learner", choices=_LEARNERS, default="mlp",
                   help="nuisance learner (default mlp)")
    e.add_argument("--arch", default=None,
                   help="hidden layers a,b,c (mlp only; default 100,50,25)")
    e.add_argument("--features", choices=("structured", "text"), default="text",
                   help="conditioning set (default text)")
    e.add_argument("--folds", type=int, default=5, help="cross-fitting folds (default 5)")
    e.add_argument("--seed", type=int, default=None,
                   help="cross-fitting seed (default: the dataset's seed)")
    e.set_defaults(func=_cmd_estimate)

    for name, help_text in (
        ("ladder", "naive / OLS / DML baseline ladder over seeds"),
        ("tournament", "boosting-vs-MLP tournament over seeds"),
        ("arch-sweep", "MLP hidden-layer sweep over seeds"),
        ("sectors", "per-sector estimates on one pooled draw"),
        ("diagnostics", "identification diagnostics per seed"),
    ):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", default=None, help="experiment plan JSON file")
        s.add_argument("--n", type=int, default=None, help="units per seed")
        s.add_argument("--seeds", default=None, help="seed range A..B or comma list")
        s.add_argument("--folds", type=int, default=None, help="cross-fitting folds")
        s.add_argument("--jobs", type=int, default=None,
                       help="parallel seed workers (default: machine parallelism)")
        s.add_argument("--out", default=".", help="report directory (default .)")
        _add_dgp_flags(s)
        s.set_defaults(func=_cmd_suite)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 4
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 5
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
