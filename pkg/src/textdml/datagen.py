"""Synthetic freelancer marketplace with latent confounding.

The structural model, in generation order:

  (ability, motivation)  ~ standard bivariate normal, correlation rho
  X                      = 12 structured covariates loaded on the latents
  P(T=1)                 = sigmoid(b0 + s*(1.2*ability + 0.8*motivation)
                                   + 0.15*urban + sel_noise)
  tau_i                  = tau_sector * (1 - kappa*(sigmoid(ability) - 0.5))
  Y                      = intercept + X @ beta + g_a*ability + g_m*motivation
                           + tau_i*T + outcome_noise

Every stochastic stage draws from its own child of the master seed, so e.g.
skipping embeddings never changes the outcome draws.

The latents and per-unit effects are oracle fields: estimator code must not
read them. `Dataset.truth_lock()` enforces that during benchmark runs.
"""
from __future__ import annotations

import contextlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
import pandas as pd

from .config import (
    SECTORS,
    STRUCTURED_COLUMNS,
    EmbeddingConfig,
    StructuralConfig,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    InsufficientDataError,
    ParameterError,
    TruthAccessError,
)

# Column indices into the structured matrix, in STRUCTURED_COLUMNS order.
COL_EXPERIENCE = 0
COL_EDUCATION = 1
COL_PLATFORM = 2
COL_JOB_SUCCESS = 3
COL_TOTAL_JOBS = 4
COL_AGE = 5
COL_GENDER = 6
COL_URBAN = 7
COL_COUNTRY = 8
COL_SECTOR = 9
COL_RESPONSE = 10
COL_REPEAT = 11

_INT_COLUMNS = (
    COL_EDUCATION,
    COL_TOTAL_JOBS,
    COL_AGE,
    COL_GENDER,
    COL_URBAN,
    COL_COUNTRY,
    COL_SECTOR,
)

# Latent loadings of the proxy covariates. Calibrated so that a ridge fit on
# all 12 columns recovers ability with R^2 near 0.4 and
# corr(experience, ability) lands near 0.35.
_EXPERIENCE_LOAD = 0.36
_EDU_LOAD_A, _EDU_LOAD_M = 0.34, 0.12
_EDU_CUTS = (-1.03, -0.26, 0.84, 1.55)
_PLATFORM_LOAD_A, _PLATFORM_LOAD_M = 0.30, 0.16
_SUCCESS_LOAD_A, _SUCCESS_LOAD_M = 0.26, 0.20
_JOBS_LOAD_A, _JOBS_LOAD_M = 0.22, 0.14


def sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LatentProfile:
    """Unobserved skill and drive of one freelancer."""

    ability: float
    motivation: float


@dataclass(frozen=True)
class UnitRecord:
    """One simulated freelancer as seen in the export.

    ``latent`` and ``true_effect`` are populated only while the parent
    dataset's truth guard is open; otherwise they are None.
    """

    index: int
    structured: dict[str, float]
    embedding: np.ndarray | None
    treatment: int
    outcome: float
    sector: str
    latent: LatentProfile | None = None
    true_effect: float | None = None


def draw_latents(n: int, rho: float, rng_seed) -> tuple[np.ndarray, np.ndarray]:
    """Sample n correlated (ability, motivation) pairs.

    Uses the Cholesky-style construction: motivation = rho*ability +
    sqrt(1-rho^2)*z, so rho=1 gives exact equality of the two draws.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not (-1.0 <= rho <= 1.0):
        raise ParameterError(f"rho must lie in [-1, 1], got {rho}")
    rng = np.random.default_rng(rng_seed)
    z = rng.standard_normal((2, n))
    ability = z[0]
    motivation = rho * z[0] + np.sqrt(1.0 - rho * rho) * z[1]
    return ability, motivation


def gen_structured(
    ability: np.ndarray,
    motivation: np.ndarray,
    rng_seed,
    noise_scale: float = 1.0,
) -> np.ndarray:
    """Resume-style covariates: noisy monotone transforms of the latents.

    noise_scale multiplies every idiosyncratic Gaussian disturbance; 0 turns
    the continuous noise off (categorical draws are unaffected).
    """
    ability = np.asarray(ability, dtype=np.float64)
    motivation = np.asarray(motivation, dtype=np.float64)
    if ability.shape != motivation.shape or ability.ndim != 1:
        raise DataError("ability and motivation must be 1-d arrays of equal length")
    if noise_scale < 0:
        raise ParameterError(f"noise_scale must be >= 0, got {noise_scale}")
    n = ability.size
    rng = np.random.default_rng(rng_seed)

    # One named disturbance per column keeps the draw order fixed.
    e_exp = noise_scale * rng.standard_normal(n)
    e_edu = noise_scale * rng.standard_normal(n)
    e_plat = noise_scale * rng.standard_normal(n)
    e_succ = noise_scale * rng.standard_normal(n)
    e_jobs = noise_scale * rng.standard_normal(n)
    e_age = noise_scale * rng.standard_normal(n)
    e_resp = noise_scale * rng.standard_normal(n)
    e_rept = noise_scale * rng.standard_normal(n)

    experience = np.maximum(6.0 + 3.2 * (_EXPERIENCE_LOAD * ability + 0.933 * e_exp), 0.0)
    edu_lat = (_EDU_LOAD_A * ability + _EDU_LOAD_M * motivation + 0.91 * e_edu) / 1.016
    education = np.searchsorted(np.asarray(_EDU_CUTS), edu_lat).astype(np.float64)
    platform = np.clip(
        70.0 + 12.0 * (_PLATFORM_LOAD_A * ability + _PLATFORM_LOAD_M * motivation + 0.88 * e_plat),
        0.0, 100.0,
    )
    job_success = np.clip(
        88.0 + 8.0 * (_SUCCESS_LOAD_A * ability + _SUCCESS_LOAD_M * motivation + 0.89 * e_succ),
        0.0, 100.0,
    )
    total_jobs = np.round(
        np.maximum(28.0 + 20.0 * (_JOBS_LOAD_A * ability + _JOBS_LOAD_M * motivation + 0.94 * e_jobs), 0.0)
    )
    age = np.clip(np.round(23.0 + 2.0 * experience + 5.5 * e_age), 18.0, 80.0)
    gender = (rng.random(n) < 0.45).astype(np.float64)
    urban = (rng.random(n) < 0.60).astype(np.float64)
    country = rng.integers(0, 8, size=n).astype(np.float64)
    sector = rng.integers(0, len(SECTORS), size=n).astype(np.float64)
    response = np.clip(78.0 + 0.55 * (platform - 70.0) + 9.0 * e_resp, 0.0, 100.0)
    repeat_share = np.clip(32.0 + 0.50 * (platform - 70.0) + 11.0 * e_rept, 0.0, 100.0)

    return np.column_stack([
        experience, education, platform, job_success, total_jobs, age,
        gender, urban, country, sector, response, repeat_share,
    ])


def propensity(
    ability: np.ndarray,
    motivation: np.ndarray,
    urban: np.ndarray,
    cfg: StructuralConfig,
    noise: np.ndarray | float = 0.0,
) -> np.ndarray:
    """Probability of completing the certification, strictly inside (0, 1)."""
    index = (
        cfg.sel_intercept
        + cfg.selection_sign * (cfg.sel_ability * np.asarray(ability)
                                + cfg.sel_motivation * np.asarray(motivation))
        + cfg.sel_urban * np.asarray(urban)
        + noise
    )
    return np.clip(sigmoid(index), 1e-12, 1.0 - 1e-12)


def assign_treatment(p: np.ndarray, rng_seed) -> np.ndarray:
    """Bernoulli draw per unit from its propensity."""
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0 or np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p >= 1):
        raise DataError("propensities must be finite and strictly inside (0, 1)")
    rng = np.random.default_rng(rng_seed)
    return (rng.random(p.shape) < p).astype(np.int8)


def unit_effects(ability: np.ndarray, sector_idx: np.ndarray, cfg: StructuralConfig) -> np.ndarray:
    """Per-unit treatment effect: sector base scaled by diminishing returns.

    sigmoid(ability)-0.5 is odd in ability, so with standard-normal ability
    the scaling is mean-neutral and the population ATE stays at the sector
    average.
    """
    tau_base = np.array([cfg.tau_by_sector[s] for s in SECTORS])[sector_idx]
    return tau_base * (1.0 - cfg.kappa * (sigmoid(ability) - 0.5))


def gen_outcome(
    structured: np.ndarray,
    ability: np.ndarray,
    motivation: np.ndarray,
    treatment: np.ndarray,
    cfg: StructuralConfig,
    rng_seed,
) -> tuple[np.ndarray, np.ndarray]:
    """Monthly earnings and the per-unit true effect used to build them."""
    structured = np.asarray(structured, dtype=np.float64)
    if structured.ndim != 2 or structured.shape[1] != len(STRUCTURED_COLUMNS):
        raise DataError(
            f"structured matrix must have {len(STRUCTURED_COLUMNS)} columns"
        )
    sector_idx = structured[:, COL_SECTOR].astype(np.int64)
    if sector_idx.min(initial=0) < 0 or sector_idx.max(initial=0) >= len(SECTORS):
        raise ConfigError("sector codes must lie in [0, %d]" % (len(SECTORS) - 1))
    tau_i = unit_effects(ability, sector_idx, cfg)
    rng = np.random.default_rng(rng_seed)
    noise = cfg.outcome_noise_sd * rng.standard_normal(ability.size)
    y = (
        cfg.outcome_intercept
        + structured @ np.asarray(cfg.beta)
        + cfg.gamma_ability * ability
        + cfg.gamma_motivation * motivation
        + tau_i * np.asarray(treatment)
        + noise
    )
    return y, tau_i


@dataclass
class Dataset:
    """One simulated marketplace draw plus its generation record.

    Arrays are stored read-only; accessors hand out copies. Oracle fields
    (latents, per-unit effects, propensities) raise TruthAccessError while
    a `truth_lock()` scope is active.
    """

    structured: np.ndarray
    text_features: np.ndarray | None
    treatment: np.ndarray
    outcome: np.ndarray
    seed: int
    config: StructuralConfig
    emb_config: EmbeddingConfig
    true_ate: float
    true_ate_by_sector: dict[str, float]
    _propensity: np.ndarray = field(repr=False)
    _ability: np.ndarray = field(repr=False)
    _motivation: np.ndarray = field(repr=False)
    _true_effect: np.ndarray = field(repr=False)
    pca_explained: np.ndarray | None = field(default=None, repr=False)
    _lock_depth: int = field(default=0, repr=False)

    def __post_init__(self):
        for arr in (self.structured, self.text_features, self.treatment,
                    self.outcome, self._propensity, self._ability,
                    self._motivation, self._true_effect):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.outcome.size

    @property
    def sector_idx(self) -> np.ndarray:
        return self.structured[:, COL_SECTOR].astype(np.int64)

    def features(self, feature_set: str) -> np.ndarray:
        """Observable design matrix: 'structured' (12 cols) or 'text'
        (structured + 65 embedding-derived cols)."""
        if feature_set == "structured":
            return self.structured.copy()
        if feature_set == "text":
            if self.text_features is None:
                raise DataError("dataset was generated without embeddings")
            return np.hstack([self.structured, self.text_features])
        raise ParameterError(f"unknown feature set {feature_set!r}")

    # -- oracle accessors ------------------------------------------------
    def _check_unlocked(self):
        if self._lock_depth > 0:
            raise TruthAccessError(
                "oracle fields are unavailable inside a truth_lock() scope"
            )

    def oracle_latents(self) -> tuple[np.ndarray, np.ndarray]:
        self._check_unlocked()
        return self._ability.copy(), self._motivation.copy()

    def oracle_true_effect(self) -> np.ndarray:
        self._check_unlocked()
        return self._true_effect.copy()

    def oracle_propensity(self) -> np.ndarray:
        self._check_unlocked()
        return self._propensity.copy()

    @contextlib.contextmanager
    def truth_lock(self) -> Iterator["Dataset"]:
        """Scope in which any oracle read raises. Estimators run inside."""
        self._lock_depth += 1
        try:
            yield self
        finally:
            self._lock_depth -= 1

    def unit(self, i: int) -> UnitRecord:
        if not (0 <= i < self.n):
            raise ParameterError(f"unit index {i} out of range [0, {self.n})")
        locked = self._lock_depth > 0
        return UnitRecord(
            index=i,
            structured=dict(zip(STRUCTURED_COLUMNS, self.structured[i].tolist())),
            embedding=None if self.text_features is None else self.text_features[i].copy(),
            treatment=int(self.treatment[i]),
            outcome=float(self.outcome[i]),
            sector=SECTORS[int(self.structured[i, COL_SECTOR])],
            latent=None if locked else LatentProfile(
                float(self._ability[i]), float(self._motivation[i])
            ),
            true_effect=None if locked else float(self._true_effect[i]),
        )

    def subset(self, idx: np.ndarray) -> "Dataset":
        """Row-sliced copy (boolean mask or integer index array). Truth
        fields are re-derived for the kept rows."""
        idx = np.asarray(idx)
        if idx.dtype == bool:
            if idx.size != self.n:
                raise ParameterError("boolean mask length must equal n")
            idx = np.flatnonzero(idx)
        if idx.size == 0:
            raise InsufficientDataError("subset selects no rows")
        eff = self._true_effect[idx]
        sec = self.structured[idx, COL_SECTOR].astype(np.int64)
        by_sector = {
            s: float(eff[sec == i].mean()) if np.any(sec == i) else float("nan")
            for i, s in enumerate(SECTORS)
        }
        return Dataset(
            structured=self.structured[idx].copy(),
            text_features=None if self.text_features is None
            else self.text_features[idx].copy(),
            treatment=self.treatment[idx].copy(),
            outcome=self.outcome[idx].copy(),
            seed=self.seed,
            config=self.config,
            emb_config=self.emb_config,
            true_ate=float(eff.mean()),
            true_ate_by_sector=by_sector,
            _propensity=self._propensity[idx].copy(),
            _ability=self._ability[idx].copy(),
            _motivation=self._motivation[idx].copy(),
            _true_effect=eff.copy(),
            pca_explained=self.pca_explained,
        )

    # -- persistence -----------------------------------------------------
    def to_frame(self) -> pd.DataFrame:
        cols: dict[str, np.ndarray] = {}
        for j, name in enumerate(STRUCTURED_COLUMNS):
            col = self.structured[:, j]
            cols[name] = col.astype(np.int64) if j in _INT_COLUMNS else col
        cols["sector"] = np.asarray(SECTORS)[self.sector_idx]
        cols["treatment"] = self.treatment.astype(np.int64)
        cols["outcome"] = self.outcome
        if self.text_features is not None:
            for j in range(self.text_features.shape[1]):
                cols[f"emb_{j:02d}"] = self.text_features[:, j]
        cols["oracle_ability"] = self._ability
        cols["oracle_motivation"] = self._motivation
        cols["oracle_propensity"] = self._propensity
        cols["oracle_true_effect"] = self._true_effect
        return pd.DataFrame(cols)

    def to_dir(self, path: str | Path) -> None:
        """Write data.csv plus a config.json sidecar into a directory."""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path / "data.csv", index=False)
        sidecar = {
            "format": "textdml-dataset-v1",
            "n": int(self.n),
            "seed": int(self.seed),
            "with_embeddings": self.text_features is not None,
            "true_ate": self.true_ate,
            "true_ate_by_sector": self.true_ate_by_sector,
            "structural": self.config.to_dict(),
            "embedding": self.emb_config.to_dict(),
        }
        (path / "config.json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
        )

    @classmethod
    def from_dir(cls, path: str | Path) -> "Dataset":
        path = Path(path)
        csv_path, json_path = path / "data.csv", path / "config.json"
        if not csv_path.exists() or not json_path.exists():
            raise DataError(f"{path} does not hold data.csv + config.json")
        try:
            sidecar = json.loads(json_path.read_text())
        except json.JSONDecodeError as e:
            raise DataError(f"{json_path} is not valid JSON: {e}")
        if sidecar.get("format") != "textdml-dataset-v1":
            raise DataError(f"unrecognized dataset format in {json_path}")
        cfg = StructuralConfig.from_dict(sidecar["structural"])
        emb_cfg = EmbeddingConfig.from_dict(sidecar["embedding"])
        df = pd.read_csv(csv_path)
        required = set(STRUCTURED_COLUMNS) | {
            "treatment", "outcome", "oracle_ability", "oracle_motivation",
            "oracle_propensity", "oracle_true_effect",
        }
        missing = required - set(df.columns)
        if missing:
            raise DataError(f"data.csv is missing columns: {sorted(missing)}")
        structured = df[list(STRUCTURED_COLUMNS)].to_numpy(dtype=np.float64)
        emb_cols = [c for c in df.columns if c.startswith("emb_")]
        text = (
            df[sorted(emb_cols)].to_numpy(dtype=np.float64) if emb_cols else None
        )
        true_effect = df["oracle_true_effect"].to_numpy(dtype=np.float64)
        ds = cls(
            structured=structured,
            text_features=text,
            treatment=df["treatment"].to_numpy(dtype=np.int8),
            outcome=df["outcome"].to_numpy(dtype=np.float64),
            seed=int(sidecar["seed"]),
            config=cfg,
            emb_config=emb_cfg,
            true_ate=float(sidecar["true_ate"]),
            true_ate_by_sector={k: float(v) for k, v in sidecar["true_ate_by_sector"].items()},
            _propensity=df["oracle_propensity"].to_numpy(dtype=np.float64),
            _ability=df["oracle_ability"].to_numpy(dtype=np.float64),
            _motivation=df["oracle_motivation"].to_numpy(dtype=np.float64),
            _true_effect=true_effect,
        )
        if abs(float(true_effect.mean()) - ds.true_ate) > 1e-6:
            raise DataError("sidecar true_ate disagrees with oracle_true_effect column")
        return ds


def generate(
    cfg: StructuralConfig | None = None,
    emb_cfg: EmbeddingConfig | None = None,
    n: int = 2000,
    seed: int = 0,
    with_embeddings: bool = True,
) -> Dataset:
    """Draw one full marketplace.

    Each stage consumes its own child stream of the master seed, so the same
    (cfg, n, seed) always yields byte-identical arrays, and turning off
    embeddings leaves everything else unchanged.
    """
    cfg = cfg or StructuralConfig()
    emb_cfg = emb_cfg or EmbeddingConfig()
    cfg.validate()
    emb_cfg.validate()
    if n < 20:
        raise ParameterError(f"n must be >= 20, got {n}")

    children = np.random.SeedSequence(seed).spawn(6)
    ability, motivation = draw_latents(n, cfg.rho, children[0])
    structured = gen_structured(ability, motivation, children[1])
    sel_noise = np.random.default_rng(children[2]).normal(0.0, cfg.sel_noise_sd, n)
    p = propensity(ability, motivation, structured[:, COL_URBAN], cfg, sel_noise)
    treatment = assign_treatment(p, children[3])
    outcome, true_effect = gen_outcome(
        structured, ability, motivation, treatment, cfg, children[4]
    )

    text_features = None
    pca_explained = None
    if with_embeddings:
        from .textproxy import build_text_features

        text_features, pca_explained = build_text_features(
            ability, motivation, emb_cfg, children[5]
        )

    sector_idx = structured[:, COL_SECTOR].astype(np.int64)
    by_sector = {
        s: float(true_effect[sector_idx == i].mean()) if np.any(sector_idx == i) else float("nan")
        for i, s in enumerate(SECTORS)
    }
    return Dataset(
        structured=structured,
        text_features=text_features,
        treatment=treatment,
        outcome=outcome,
        seed=seed,
        config=cfg,
        emb_config=emb_cfg,
        true_ate=float(true_effect.mean()),
        true_ate_by_sector=by_sector,
        _propensity=p,
        _ability=ability,
        _motivation=motivation,
        _true_effect=true_effect,
        pca_explained=pca_explained,
    )


def ovb_bias(dataset: Dataset) -> float:
    """Textbook omitted-variable-bias prediction for the short OLS of Y on
    [1, T, X]: sum over latents U of gamma_U * Cov(T~, U) / Var(T~), where
    T~ is the treatment residualized on [1, X].

    Matches the gap between the X-only OLS coefficient and the OLS that
    additionally controls for the true latents.
    """
    X = np.column_stack([np.ones(dataset.n), dataset.structured])
    t = dataset.treatment.astype(np.float64)
    coef, *_ = np.linalg.lstsq(X, t, rcond=None)
    t_res = t - X @ coef
    denom = float(t_res @ t_res)
    if denom <= 1e-12 * dataset.n:
        raise DegenerateDataError(
            "treatment is collinear with the structured covariates"
        )
    ability, motivation = dataset.oracle_latents()
    num = (
        dataset.config.gamma_ability * float(t_res @ ability)
        + dataset.config.gamma_motivation * float(t_res @ motivation)
    )
    return num / denom
