"""Benchmark engine: treatment-effect estimation under latent confounding
with text-embedding proxies.

The package simulates a freelancer marketplace where unobserved ability and
motivation drive both certification uptake and earnings, exposes noisy
high-dimensional embedding proxies of those latents, and measures how much
of the confounding bias different nuisance learners remove inside a
cross-fitted partially-linear DML estimator.
"""

from .config import (
    SECTORS,
    STRUCTURED_COLUMNS,
    EmbeddingConfig,
    StructuralConfig,
    dump_config,
    load_config,
)
from .datagen import Dataset, LatentProfile, UnitRecord, generate, ovb_bias
from .dml import (
    DmlEstimate,
    NuisancePair,
    crossfit_nuisance,
    naive_ate,
    ols_structured,
    oracle_nuisances,
    orthogonality_probe,
    plr_estimate,
)
from .learners import FittedModel, LearnerSpec, fit, grad_check, smoothness_gap
from .textproxy import (
    PcaModel,
    ability_r2,
    build_text_features,
    embed,
    embed_lipschitz,
    pca_fit,
    pca_transform,
    poly_expand,
)

__version__ = "0.1.0"

__all__ = [
    "SECTORS",
    "STRUCTURED_COLUMNS",
    "EmbeddingConfig",
    "StructuralConfig",
    "load_config",
    "dump_config",
    "Dataset",
    "LatentProfile",
    "UnitRecord",
    "generate",
    "ovb_bias",
    "DmlEstimate",
    "NuisancePair",
    "crossfit_nuisance",
    "naive_ate",
    "ols_structured",
    "oracle_nuisances",
    "orthogonality_probe",
    "plr_estimate",
    "FittedModel",
    "LearnerSpec",
    "fit",
    "grad_check",
    "smoothness_gap",
    "PcaModel",
    "ability_r2",
    "build_text_features",
    "embed",
    "embed_lipschitz",
    "pca_fit",
    "pca_transform",
    "poly_expand",
    "__version__",
]
