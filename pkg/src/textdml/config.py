"""Configuration objects for the synthetic marketplace and its embeddings.

All default numbers here are calibrated together: the selection strength,
confounder payoffs, and covariate loadings jointly pin down the bias ladder
that the benchmark suites measure. Change one and the others move.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigError

SECTORS = (
    "DataScience",
    "WebDevelopment",
    "ContentWriting",
    "GraphicDesign",
    "Marketing",
)

# Per-sector treatment effects (USD per month). Mean is exactly 557.
DEFAULT_TAU_BY_SECTOR = {
    "DataScience": 746.0,
    "WebDevelopment": 649.0,
    "ContentWriting": 395.0,
    "GraphicDesign": 436.0,
    "Marketing": 559.0,
}

STRUCTURED_COLUMNS = (
    "experience_years",
    "education_level",
    "platform_score",
    "job_success",
    "total_jobs",
    "age",
    "gender",
    "urban",
    "country_code",
    "sector_code",
    "response_rate",
    "repeat_client_share",
)

# Earnings loadings for the structured columns, in STRUCTURED_COLUMNS order.
DEFAULT_BETA = (
    35.0,   # experience_years
    120.0,  # education_level
    6.0,    # platform_score
    4.0,    # job_success
    1.5,    # total_jobs
    2.0,    # age
    -40.0,  # gender
    90.0,   # urban
    10.0,   # country_code
    45.0,   # sector_code
    1.5,    # response_rate
    1.5,    # repeat_client_share
)


@dataclass
class StructuralConfig:
    """Parameters of the structural model that generates the marketplace.

    ``selection_sign`` flips the direction of confounded selection:
    +1 gives positively selected uptake (naive estimate biased up),
    -1 gives adversely selected uptake (biased down).
    """

    tau_by_sector: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_TAU_BY_SECTOR)
    )
    beta: tuple[float, ...] = DEFAULT_BETA
    gamma_ability: float = 420.0
    gamma_motivation: float = 170.0
    rho: float = 0.3
    kappa: float = 0.4
    selection_sign: int = 1
    sel_intercept: float = -0.4
    sel_ability: float = 1.2
    sel_motivation: float = 0.8
    sel_urban: float = 0.15
    sel_noise_sd: float = 0.5
    outcome_intercept: float = 1800.0
    outcome_noise_sd: float = 550.0

    def validate(self) -> None:
        if set(self.tau_by_sector) != set(SECTORS):
            raise ConfigError(
                f"tau_by_sector must have exactly the sectors {sorted(SECTORS)}, "
                f"got {sorted(self.tau_by_sector)}"
            )
        for name, tau in self.tau_by_sector.items():
            if not (tau > 0):
                raise ConfigError(f"tau for sector {name!r} must be positive, got {tau}")
        if len(self.beta) != len(STRUCTURED_COLUMNS):
            raise ConfigError(
                f"beta must have {len(STRUCTURED_COLUMNS)} entries, got {len(self.beta)}"
            )
        if not (-1.0 <= self.rho <= 1.0):
            raise ConfigError(f"rho must lie in [-1, 1], got {self.rho}")
        if not (0.0 <= self.kappa <= 1.0):
            raise ConfigError(f"kappa must lie in [0, 1], got {self.kappa}")
        if self.selection_sign not in (-1, 1):
            raise ConfigError(f"selection_sign must be -1 or +1, got {self.selection_sign}")
        if self.sel_noise_sd < 0 or self.outcome_noise_sd < 0:
            raise ConfigError("noise standard deviations must be nonnegative")

    @property
    def tau_mean(self) -> float:
        return sum(self.tau_by_sector.values()) / len(self.tau_by_sector)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta"] = list(self.beta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StructuralConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown structural config fields: {sorted(unknown)}")
        if "beta" in d:
            d["beta"] = tuple(float(b) for b in d["beta"])
        if "selection_sign" in d:
            d["selection_sign"] = int(d["selection_sign"])
        cfg = cls(**d)
        cfg.validate()
        return cfg


@dataclass
class EmbeddingConfig:
    """Shape and noise of the simulated profile-text embeddings."""

    raw_dim: int = 768
    pca_dim: int = 30
    out_dim: int = 65
    signal_noise_sd: float = 6.5
    basis_seed: int = 97

    def validate(self) -> None:
        if self.pca_dim < 4:
            raise ConfigError(f"pca_dim must be >= 4, got {self.pca_dim}")
        if self.raw_dim < self.pca_dim:
            raise ConfigError(
                f"raw_dim ({self.raw_dim}) must be >= pca_dim ({self.pca_dim})"
            )
        if self.out_dim != 2 * self.pca_dim + 5:
            raise ConfigError(
                f"out_dim must equal 2*pca_dim + 5 = {2 * self.pca_dim + 5}, "
                f"got {self.out_dim}"
            )
        if self.signal_noise_sd < 0:
            raise ConfigError("signal_noise_sd must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EmbeddingConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown embedding config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg


def load_config(path: str | Path) -> tuple[StructuralConfig, EmbeddingConfig]:
    """Read a JSON config file.

    The file holds StructuralConfig fields at top level, plus an optional
    "embedding" object. Absent fields keep their calibrated defaults.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file must hold a JSON object: {path}")
    emb = EmbeddingConfig.from_dict(raw.pop("embedding", {}))
    cfg = StructuralConfig.from_dict(raw)
    return cfg, emb


def dump_config(
    cfg: StructuralConfig, emb: EmbeddingConfig, path: str | Path
) -> None:
    d = cfg.to_dict()
    d["embedding"] = emb.to_dict()
    Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
