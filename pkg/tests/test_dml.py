import dataclasses
import warnings

import numpy as np
import pytest

import textdml as td
from textdml.dml import (
    PROPENSITY_CLIP,
    crossfit_nuisance,
    naive_ate,
    ols_structured,
    oracle_nuisances,
    orthogonality_probe,
    plr_estimate,
)
from textdml.learners import LearnerSpec
from textdml.errors import DataError, ParameterError


def test_naive_is_mean_difference(ds_small):
    est = naive_ate(ds_small)
    t, y = ds_small.treatment, ds_small.outcome
    assert est.theta_hat == pytest.approx(y[t == 1].mean() - y[t == 0].mean())
    assert est.estimator == "naive"
    assert est.bias_abs == pytest.approx(est.theta_hat - ds_small.true_ate)


def test_ols_matches_lstsq(ds_small):
    est = ols_structured(ds_small)
    X = np.column_stack(
        [
            np.ones(ds_small.n),
            ds_small.treatment.astype(float),
            ds_small.structured,
        ]
    )
    beta = np.linalg.lstsq(X, ds_small.outcome, rcond=None)[0]
    assert est.theta_hat == pytest.approx(beta[1], rel=1e-10)


def test_crossfit_partition_and_ranges(ds_small):
    pair = crossfit_nuisance(ds_small, LearnerSpec.linear(), "structured", k=5, rng_seed=0)
    assert pair.n_folds == 5
    counts = np.bincount(pair.fold_of, minlength=5)
    assert counts.min() >= ds_small.n // 5 - 1 and counts.max() <= ds_small.n // 5 + 1
    lo, hi = PROPENSITY_CLIP
    assert np.all((pair.m_hat >= lo) & (pair.m_hat <= hi))
    assert np.isfinite(pair.g_hat).all()
    assert pair.mse_g > 0 and 0 < pair.mse_m < 0.26


def test_crossfit_deterministic(ds_small):
    a = crossfit_nuisance(ds_small, LearnerSpec.tree(max_depth=3), "text", 5, rng_seed=3)
    b = crossfit_nuisance(ds_small, LearnerSpec.tree(max_depth=3), "text", 5, rng_seed=3)
    assert np.array_equal(a.g_hat, b.g_hat)
    assert np.array_equal(a.m_hat, b.m_hat)
    assert np.array_equal(a.fold_of, b.fold_of)
    c = crossfit_nuisance(ds_small, LearnerSpec.tree(max_depth=3), "text", 5, rng_seed=4)
    assert not np.array_equal(a.fold_of, c.fold_of)


def test_crossfit_custom_features_match_builtin(ds_small):
    spec = LearnerSpec.linear()
    built = crossfit_nuisance(ds_small, spec, "structured", 5, rng_seed=0)
    custom = crossfit_nuisance(
        ds_small, spec, k=5, rng_seed=0, features=ds_small.features("structured")
    )
    assert custom.feature_set == "custom"
    assert np.array_equal(built.g_hat, custom.g_hat)
    assert np.array_equal(built.m_hat, custom.m_hat)


def test_crossfit_clip_warns(cfg):
    # a linear propensity fit at small n runs outside [0.01, 0.99] and is clipped
    ds = td.generate(cfg, n=200, seed=0, with_embeddings=False)
    with pytest.warns(UserWarning, match="clipped"):
        pair = crossfit_nuisance(ds, LearnerSpec.linear(), "structured", 5, rng_seed=0)
    assert pair.n_clipped > 0


def test_plr_estimate_fields(ds_small):
    pair = crossfit_nuisance(ds_small, LearnerSpec.linear(), "structured", 5, rng_seed=0)
    est = plr_estimate(ds_small, pair)
    assert est.estimator == "dml-structured-linear"
    assert est.n == ds_small.n and est.n_folds == 5
    assert est.std_err > 0
    assert np.isfinite(est.theta_hat)
    assert est.bias_pct == pytest.approx(est.bias_abs / ds_small.true_ate * 100)
    d = est.to_dict()
    assert d["theta_hat"] == est.theta_hat and d["learner"] == "linear"


def test_plr_rejects_out_of_range_propensity(ds_small):
    pair = crossfit_nuisance(ds_small, LearnerSpec.linear(), "structured", 5, rng_seed=0)
    bad = dataclasses.replace(pair, m_hat=np.full(ds_small.n, 1.2))
    with pytest.raises(DataError):
        plr_estimate(ds_small, bad)


def test_oracle_nuisances_close_to_truth(ds_small):
    """Oracle nuisances give a near-unbiased estimate: the identification
    benchmark every learner is judged against."""
    pair = oracle_nuisances(ds_small)
    assert pair.feature_set == "oracle"
    lo, hi = PROPENSITY_CLIP
    assert np.all((pair.m_hat >= lo) & (pair.m_hat <= hi))
    est = plr_estimate(ds_small, pair)
    assert abs(est.theta_hat - ds_small.true_ate) < 4 * est.std_err


def test_oracle_nuisances_deterministic(ds_small):
    a = oracle_nuisances(ds_small)
    b = oracle_nuisances(ds_small)
    assert np.array_equal(a.m_hat, b.m_hat) and np.array_equal(a.g_hat, b.g_hat)


def test_probe_plugin_ratio_is_two(ds_small):
    """The plug-in score drifts linearly in the perturbation, so halving eps
    halves the drift."""
    pair = crossfit_nuisance(ds_small, LearnerSpec.linear(), "structured", 5, rng_seed=0)
    d_full, d_half = orthogonality_probe(ds_small, pair, eps=0.05, score="plugin")
    assert d_full / d_half == pytest.approx(2.0, abs=0.05)


def test_probe_orthogonal_ratio_near_four(ds_small):
    pair = crossfit_nuisance(ds_small, LearnerSpec.linear(), "structured", 5, rng_seed=0)
    d_full, d_half = orthogonality_probe(ds_small, pair, eps=0.05, score="orthogonal")
    assert 3.0 <= d_full / d_half <= 5.0


def test_probe_rejects_unknown_score(ds_small):
    pair = crossfit_nuisance(ds_small, LearnerSpec.linear(), "structured", 5, rng_seed=0)
    with pytest.raises(ParameterError):
        orthogonality_probe(ds_small, pair, eps=0.05, score="bogus")


def test_crossfit_respects_truth_lock(ds_small):
    """Nuisance fitting must never touch oracle columns; it runs fine under an
    explicit lock."""
    with ds_small.truth_lock():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pair = crossfit_nuisance(ds_small, LearnerSpec.linear(), "structured", 5, 0)
    assert np.isfinite(pair.g_hat).all()


def test_structured_vs_text_features_differ(ds_small):
    spec = LearnerSpec.tree(max_depth=3)
    a = crossfit_nuisance(ds_small, spec, "structured", 5, rng_seed=0)
    b = crossfit_nuisance(ds_small, spec, "text", 5, rng_seed=0)
    assert not np.array_equal(a.g_hat, b.g_hat)
    assert a.feature_set == "structured" and b.feature_set == "text"
