"""Experiment suites: the baseline ladder, the ten-seed model tournament,
the architecture sweep, sector-stratified estimation, and identification
diagnostics.

Every suite follows the same shape: draw one dataset per seed, run a fixed
list of estimators on it, collect per-run records, and reduce them into
per-estimator aggregates. A failed run is recorded and skipped by the
aggregation; it never aborts the suite. All randomness is keyed off the
dataset seed, so a plan file reproduces every report byte for byte.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .config import SECTORS, EmbeddingConfig, StructuralConfig
from .datagen import Dataset, generate
from .dml import crossfit_nuisance, naive_ate, ols_structured, plr_estimate
from .errors import ConfigError, ParameterError, TextDmlError
from .learners import LearnerSpec
from .textproxy import ability_r2

SELECTION_RULES = ("fixed", "min-mse")

# (kind, feature_set) pairs understood by _one_run.
_ESTIMATOR_KINDS = ("naive", "ols", "dml")


@dataclass
class ExperimentPlan:
    """Everything a suite needs: sample size, seeds, configs, learner specs.

    `ladder` may be given explicitly as (kind, feature_set, spec) rows;
    by default it is built from the three learner specs below.
    """

    n_units: int = 2000
    seeds: tuple[int, ...] = tuple(range(10))
    folds: int = 5
    config: StructuralConfig = field(default_factory=StructuralConfig)
    emb_config: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    gbm_spec: LearnerSpec = field(default_factory=lambda: LearnerSpec.gbm(n_stages=100))
    rgbm_spec: LearnerSpec = field(default_factory=lambda: LearnerSpec.rgbm(n_stages=100))
    # The ladder's neural row runs at the tuning sweep's operating point:
    # ridge strong enough to keep the propensity net off the binary noise
    # floor, trained with restart averaging (see nuisance_restarts).
    mlp_spec: LearnerSpec = field(default_factory=lambda: LearnerSpec.mlp(l2=0.03))
    arch_grid: tuple[tuple[int, ...], ...] = ((50, 25, 12), (100, 50, 25), (120, 60, 30))
    selection_rule: str = "fixed"
    ladder: tuple[tuple[str, str, LearnerSpec | None], ...] | None = None
    # Independent cross-fit replications averaged per ladder estimate; >1
    # cancels fold-partition and net-init noise in the nuisance predictions.
    nuisance_restarts: int = 2
    # The tournament's neural entrant: the architecture the sweep selects,
    # trained with the stock recipe (early stopping on a held-out split),
    # not the ladder row's tuned one.
    tournament_mlp_spec: LearnerSpec | None = None

    def tournament_mlp(self) -> LearnerSpec:
        if self.tournament_mlp_spec is not None:
            return self.tournament_mlp_spec
        return LearnerSpec.mlp(hidden_layers=(50, 25, 12))

    def validate(self) -> None:
        if self.n_units < 20:
            raise ParameterError(f"n_units must be >= 20, got {self.n_units}")
        if not self.seeds:
            raise ParameterError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ParameterError("seeds must be distinct")
        if self.folds < 2:
            raise ParameterError("folds must be >= 2")
        if self.nuisance_restarts < 1:
            raise ParameterError("nuisance_restarts must be >= 1")
        if not self.arch_grid:
            raise ParameterError("arch_grid must be non-empty")
        if self.selection_rule not in SELECTION_RULES:
            raise ConfigError(
                f"selection_rule must be one of {SELECTION_RULES}, "
                f"got {self.selection_rule!r}"
            )
        self.config.validate()
        self.emb_config.validate()
        for spec in (self.gbm_spec, self.rgbm_spec, self.mlp_spec,
                     self.tournament_mlp()):
            spec.validate()
        for kind, feature_set, spec in self.ladder_rows():
            if kind not in _ESTIMATOR_KINDS:
                raise ConfigError(f"unknown estimator kind {kind!r}")
            if feature_set not in ("structured", "text", "none"):
                raise ConfigError(f"unknown feature set {feature_set!r}")
            if spec is not None:
                spec.validate()

    def ladder_rows(self) -> tuple[tuple[str, str, LearnerSpec | None], ...]:
        if self.ladder is not None:
            return self.ladder
        return (
            ("naive", "none", None),
            ("ols", "structured", None),
            ("dml", "structured", self.gbm_spec),
            ("dml", "text", self.gbm_spec),
            ("dml", "text", self.mlp_spec),
        )

    def to_dict(self) -> dict:
        d = {
            "n_units": self.n_units,
            "seeds": list(self.seeds),
            "folds": self.folds,
            "config": self.config.to_dict(),
            "embedding": self.emb_config.to_dict(),
            "gbm_spec": self.gbm_spec.to_dict(),
            "rgbm_spec": self.rgbm_spec.to_dict(),
            "mlp_spec": self.mlp_spec.to_dict(),
            "arch_grid": [list(a) for a in self.arch_grid],
            "selection_rule": self.selection_rule,
            "nuisance_restarts": self.nuisance_restarts,
        }
        if self.tournament_mlp_spec is not None:
            d["tournament_mlp_spec"] = self.tournament_mlp_spec.to_dict()
        if self.ladder is not None:
            d["ladder"] = [
                [kind, fs, None if spec is None else spec.to_dict()]
                for kind, fs, spec in self.ladder
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d)
        known = {
            "n_units", "seeds", "folds", "config", "embedding", "gbm_spec",
            "rgbm_spec", "mlp_spec", "arch_grid", "selection_rule", "ladder",
            "tournament_mlp_spec", "nuisance_restarts",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown plan keys: {sorted(unknown)}")
        plan = cls(
            n_units=int(d.get("n_units", 2000)),
            seeds=tuple(int(s) for s in d.get("seeds", range(10))),
            folds=int(d.get("folds", 5)),
            config=StructuralConfig.from_dict(d["config"]) if "config" in d
            else StructuralConfig(),
            emb_config=EmbeddingConfig.from_dict(d["embedding"]) if "embedding" in d
            else EmbeddingConfig(),
            gbm_spec=LearnerSpec.from_dict(d["gbm_spec"]) if "gbm_spec" in d
            else LearnerSpec.gbm(n_stages=100),
            rgbm_spec=LearnerSpec.from_dict(d["rgbm_spec"]) if "rgbm_spec" in d
            else LearnerSpec.rgbm(n_stages=100),
            mlp_spec=LearnerSpec.from_dict(d["mlp_spec"]) if "mlp_spec" in d
            else LearnerSpec.mlp(l2=0.03),
            arch_grid=tuple(tuple(int(h) for h in a) for a in d.get(
                "arch_grid", ((50, 25, 12), (100, 50, 25), (120, 60, 30)))),
            selection_rule=d.get("selection_rule", "fixed"),
            nuisance_restarts=int(d.get("nuisance_restarts", 2)),
            tournament_mlp_spec=None if "tournament_mlp_spec" not in d
            else LearnerSpec.from_dict(d["tournament_mlp_spec"]),
            ladder=None if "ladder" not in d else tuple(
                (kind, fs, None if spec is None else LearnerSpec.from_dict(spec))
                for kind, fs, spec in d["ladder"]
            ),
        )
        plan.validate()
        return plan

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _estimator_label(kind: str, feature_set: str, spec: LearnerSpec | None) -> str:
    if kind == "naive":
        return "naive"
    if kind == "ols":
        return "ols_structured"
    return f"dml-{feature_set}-{spec.label()}"


def _one_run(
    dataset: Dataset, seed: int, kind: str, feature_set: str,
    spec: LearnerSpec | None, folds: int, restarts: int = 1,
) -> dict:
    """One estimator on one dataset; failures become a flagged record."""
    label = _estimator_label(kind, feature_set, spec)
    try:
        if kind == "naive":
            est = naive_ate(dataset)
        elif kind == "ols":
            est = ols_structured(dataset)
        elif kind == "dml":
            pair = crossfit_nuisance(dataset, spec, feature_set, folds,
                                     rng_seed=seed, restarts=restarts)
            est = plr_estimate(dataset, pair)
        else:
            raise ConfigError(f"unknown estimator kind {kind!r}")
    except TextDmlError as e:
        return {
            "seed": seed, "estimator": label, "feature_set": feature_set,
            "ok": False, "error": f"{type(e).__name__}: {e}",
            "theta_hat": float("nan"), "std_err": float("nan"),
            "true_ate": float("nan"), "bias_abs": float("nan"),
            "bias_pct": float("nan"), "n": dataset.n, "n_folds": 0,
            "learner": None if spec is None else spec.to_dict(),
        }
    rec = est.to_dict()
    rec["seed"] = seed
    rec["ok"] = True
    rec["error"] = ""
    return rec


def _ladder_seed(plan: ExperimentPlan, s: int) -> list[dict]:
    ds = generate(plan.config, plan.emb_config, plan.n_units, s)
    return [
        _one_run(ds, s, kind, fs, spec, plan.folds, plan.nuisance_restarts)
        for kind, fs, spec in plan.ladder_rows()
    ]


def _tournament_seed(plan: ExperimentPlan, s: int) -> list[dict]:
    ds = generate(plan.config, plan.emb_config, plan.n_units, s)
    entrants = [
        ("dml", "text", plan.gbm_spec),
        ("dml", "text", plan.rgbm_spec),
        ("dml", "text", plan.tournament_mlp()),
    ]
    return [
        _one_run(ds, s, kind, fs, spec, plan.folds)
        for kind, fs, spec in entrants
    ]


def _sweep_seed(plan: ExperimentPlan, s: int) -> list[dict]:
    import dataclasses

    ds = generate(plan.config, plan.emb_config, plan.n_units, s)
    # The sweep compares architectures under the tournament's stock training
    # recipe, one single fit each, so spread across seeds stays visible.
    specs = [
        dataclasses.replace(plan.tournament_mlp(), hidden_layers=tuple(arch))
        for arch in plan.arch_grid
    ]
    rows = [_one_run(ds, s, "dml", "text", spec, plan.folds) for spec in specs]
    rows.append(_one_run(ds, s, "dml", "text", plan.gbm_spec, plan.folds))
    return rows


def _map_seeds(seed_fn, plan: ExperimentPlan, jobs: int) -> list:
    """Run seed_fn(plan, s) for every seed, flattened in seed order.

    With jobs > 1 the seeds run in separate processes; each seed carries its
    own RNG streams and the reduction preserves seed order, so the result is
    identical to the sequential one.
    """
    jobs = max(1, min(int(jobs), len(plan.seeds)))
    if jobs == 1:
        blocks = [seed_fn(plan, s) for s in plan.seeds]
    else:
        from concurrent.futures import ProcessPoolExecutor
        from itertools import repeat

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(seed_fn, repeat(plan), plan.seeds))
    out = []
    for block in blocks:
        out.extend(block if isinstance(block, list) else [block])
    return out


def aggregate_runs(runs: list[dict]) -> list[dict]:
    """Per-estimator summary rows, in first-appearance order.

    Only successful runs enter the statistics; failures are counted.
    Quantiles are over theta_hat (the tournament's boxplot statistics).
    """
    order: list[str] = []
    by_est: dict[str, list[dict]] = {}
    for r in runs:
        if r["estimator"] not in by_est:
            order.append(r["estimator"])
            by_est[r["estimator"]] = []
        by_est[r["estimator"]].append(r)

    out = []
    for label in order:
        rows = by_est[label]
        ok = [r for r in rows if r["ok"]]
        agg: dict = {
            "estimator": label,
            "n_runs": len(rows),
            "n_failed": len(rows) - len(ok),
        }
        if ok:
            th = np.array([r["theta_hat"] for r in ok])
            bias = np.array([r["bias_pct"] for r in ok])
            q = np.percentile(th, [0, 25, 50, 75, 100])
            agg.update(
                mean_theta=float(th.mean()),
                mean_bias_pct=float(bias.mean()),
                sd_bias_pct=float(bias.std(ddof=1)) if len(ok) > 1 else 0.0,
                mean_abs_bias_pct=float(np.abs(bias).mean()),
                theta_min=float(q[0]), theta_q1=float(q[1]),
                theta_median=float(q[2]), theta_q3=float(q[3]),
                theta_max=float(q[4]),
            )
        out.append(agg)
    return out


_CSV_COLUMNS = [
    "seed", "estimator", "feature_set", "n", "n_folds",
    "theta_hat", "std_err", "true_ate", "bias_abs", "bias_pct", "ok", "error",
]


@dataclass
class BenchmarkReport:
    """Per-run records plus the aggregates reduced from them."""

    kind: str
    plan: dict
    runs: list[dict]
    aggregates: list[dict]
    sectors: list[dict] | None = None
    diagnostics: dict | None = None
    extras: dict = field(default_factory=dict)

    def aggregate(self, estimator: str) -> dict:
        for agg in self.aggregates:
            if agg["estimator"] == estimator:
                return agg
        raise KeyError(f"no aggregate for estimator {estimator!r}")

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "plan": self.plan,
            "runs": self.runs,
            "aggregates": self.aggregates,
        }
        if self.sectors is not None:
            d["sectors"] = self.sectors
        if self.diagnostics is not None:
            d["diagnostics"] = self.diagnostics
        if self.extras:
            d["extras"] = self.extras
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str | Path) -> list[Path]:
        """Emit report.json plus this suite's CSV; returns written paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "report.json"]
        paths[0].write_text(self.to_json())

        csv_name = {
            "ladder": "ladder.csv",
            "tournament": "tournament.csv",
            "arch_sweep": "arch_sweep.csv",
            "sectors": "sectors.csv",
            "diagnostics": "diagnostics.csv",
        }.get(self.kind)
        if csv_name is None:
            return paths

        if self.kind == "diagnostics":
            df = pd.DataFrame(self.diagnostics["per_seed"])
        elif self.kind == "sectors":
            df = pd.DataFrame(self.sectors)
        else:
            df = pd.DataFrame(self.runs)
            cols = [c for c in _CSV_COLUMNS if c in df.columns]
            df = df[cols]
        path = out / csv_name
        df.to_csv(path, index=False, float_format="%.10g")
        paths.append(path)
        return paths


def run_ladder(plan: ExperimentPlan, jobs: int = 1) -> BenchmarkReport:
    """Baseline ladder: naive difference, OLS on structured covariates,
    then DML with tree and neural nuisances, one pass per seed."""
    plan.validate()
    runs = _map_seeds(_ladder_seed, plan, jobs)
    return BenchmarkReport(
        kind="ladder", plan=plan.to_dict(), runs=runs,
        aggregates=aggregate_runs(runs),
    )


def run_tournament(plan: ExperimentPlan, jobs: int = 1) -> BenchmarkReport:
    """GradientBoosting vs regularized boosting vs the MLP, text features,
    one estimate per learner per seed."""
    plan.validate()
    if len(plan.seeds) < 10:
        raise ParameterError(
            f"the tournament needs >= 10 seeds, got {len(plan.seeds)}"
        )
    runs = _map_seeds(_tournament_seed, plan, jobs)
    return BenchmarkReport(
        kind="tournament", plan=plan.to_dict(), runs=runs,
        aggregates=aggregate_runs(runs),
    )


def run_arch_sweep(plan: ExperimentPlan, jobs: int = 1) -> BenchmarkReport:
    """Bias sensitivity to the MLP's hidden-layer sizes, with the boosting
    default as the comparison row; flags the minimum-|bias| architecture."""
    plan.validate()
    runs = _map_seeds(_sweep_seed, plan, jobs)
    aggs = aggregate_runs(runs)

    mlp_aggs = [a for a in aggs if a["estimator"].startswith("dml-text-mlp")]
    scored = [a for a in mlp_aggs if "mean_bias_pct" in a]
    extras = {}
    if scored:
        best = min(scored, key=lambda a: abs(a["mean_bias_pct"]))
        extras = {
            "best_architecture": best["estimator"],
            "best_abs_bias_pct": abs(best["mean_bias_pct"]),
        }
    return BenchmarkReport(
        kind="arch_sweep", plan=plan.to_dict(), runs=runs,
        aggregates=aggs, extras=extras,
    )


def run_sector_split(plan: ExperimentPlan, jobs: int = 1) -> BenchmarkReport:
    """Per-sector estimates against the stored sector effects.

    Sectors are small, so instead of one dataset per seed this pools a
    single large draw (n_units x min(#seeds, 5) rows at the first seed) and
    stratifies it; a sector below 200 rows is skipped with a flag. The pool
    is one estimation job, so `jobs` has no effect here.
    """
    plan.validate()
    n_pool = plan.n_units * min(len(plan.seeds), 5)
    seed = plan.seeds[0]
    ds = generate(plan.config, plan.emb_config, n_pool, seed)

    estimators = [
        ("dml", "structured", plan.gbm_spec),
        ("dml", "text", plan.gbm_spec),
        ("dml", "text", plan.mlp_spec),
    ]
    runs: list[dict] = []
    sectors: list[dict] = []
    for i, name in enumerate(SECTORS):
        mask = ds.sector_idx == i
        n_sector = int(mask.sum())
        row = {
            "sector": name,
            "n": n_sector,
            "tau_stored": float(plan.config.tau_by_sector[name]),
            "skipped": n_sector < 200,
        }
        if row["skipped"]:
            sectors.append(row)
            continue
        sub = ds.subset(mask)
        row["tau_empirical"] = sub.true_ate
        for kind, fs, spec in estimators:
            rec = _one_run(sub, seed, kind, fs, spec, plan.folds)
            rec["sector"] = name
            runs.append(rec)
            key = f"theta_{fs}_{spec.kind}"
            row[key] = rec["theta_hat"]
            row[f"bias_pct_{fs}_{spec.kind}"] = rec["bias_pct"]
        sectors.append(row)
    return BenchmarkReport(
        kind="sectors", plan=plan.to_dict(), runs=runs,
        aggregates=aggregate_runs(runs), sectors=sectors,
    )


def _diag_seed(plan: ExperimentPlan, s: int) -> dict:
    ds = generate(plan.config, plan.emb_config, plan.n_units, s)
    ability, _ = ds.oracle_latents()
    p = ds.oracle_propensity()
    t = ds.treatment.astype(bool)

    # Arm-wise confounding gap and overlap by true-propensity quartile.
    gap = float(ability[t].mean() - ability[~t].mean())
    edges = np.percentile(p, [25, 50, 75])
    quartile = np.searchsorted(edges, p)
    share_treated = [
        float(t[quartile == q].mean()) for q in range(4)
    ]

    feats = ds.text_features
    r2_struct = ability_r2(ds.structured, ability)
    r2_text = ability_r2(feats, ability)
    r2_combined = ability_r2(np.hstack([ds.structured, feats]), ability)
    return {
        "seed": s,
        "oracle": True,
        "ability_gap": gap,
        "share_treated_q1": share_treated[0],
        "share_treated_q2": share_treated[1],
        "share_treated_q3": share_treated[2],
        "share_treated_q4": share_treated[3],
        "pc1_ability_corr_abs": float(abs(
            np.corrcoef(feats[:, 0], ability)[0, 1]
        )),
        "r2_structured": r2_struct,
        "r2_text": r2_text,
        "r2_combined": r2_combined,
    }


def run_diagnostics(plan: ExperimentPlan, jobs: int = 1) -> BenchmarkReport:
    """Identification diagnostics, per seed and averaged.

    These read the oracle columns on purpose (they answer "was the DGP
    confounded and is the proxy informative", not "what is the effect"),
    so each row is labeled oracle=True.
    """
    plan.validate()
    per_seed = _map_seeds(_diag_seed, plan, jobs)

    keys = [
        "ability_gap", "pc1_ability_corr_abs",
        "r2_structured", "r2_text", "r2_combined",
    ]
    means = {k: float(np.mean([row[k] for row in per_seed])) for k in keys}
    diagnostics = {
        "per_seed": per_seed,
        "means": means,
        "proxy_collapsed": means["r2_text"] < 0.1,
    }
    return BenchmarkReport(
        kind="diagnostics", plan=plan.to_dict(), runs=[],
        aggregates=[], diagnostics=diagnostics,
    )


def select_nuisance_spec(
    candidates: list[LearnerSpec],
    dataset: Dataset,
    folds: int = 5,
    rng_seed: int = 0,
) -> LearnerSpec:
    """Pick the candidate with the lowest cross-validated MSE for the
    outcome nuisance E[Y|W]; exact ties go to the smaller model. Runs
    under the truth lock, so selection can never peek at oracle fields.
    """
    if not candidates:
        raise ParameterError("need at least one candidate spec")
    for spec in candidates:
        spec.validate()
    if len(candidates) == 1:
        return candidates[0]

    with dataset.truth_lock():
        W = dataset.features("text" if dataset.text_features is not None
                             else "structured")
        y = dataset.outcome
        n = dataset.n
        seeds = np.random.SeedSequence([int(rng_seed), 90017]).spawn(
            folds * len(candidates) + 1
        )
        perm = np.random.default_rng(seeds[-1]).permutation(n)
        fold_of = np.empty(n, dtype=np.int64)
        fold_of[perm] = np.arange(n) % folds

        from .learners import fit

        best, best_mse = None, np.inf
        for j, spec in enumerate(candidates):
            pred = np.empty(n)
            for f in range(folds):
                tr, te = fold_of != f, fold_of == f
                model = fit(spec, W[tr], y[tr], seeds[j * folds + f])
                pred[te] = model.predict(W[te])
            mse = float(np.mean((y - pred) ** 2))
            better = mse < best_mse or (
                mse == best_mse
                and spec.param_count(W.shape[1]) < best.param_count(W.shape[1])
            )
            if better:
                best, best_mse = spec, mse
    return best
