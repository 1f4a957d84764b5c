import dataclasses

import numpy as np
import pytest

from textdml.learners import FittedModel, LearnerSpec, fit, grad_check, smoothness_gap
from textdml.errors import (
    ConfigError,
    DataError,
    InsufficientDataError,
    ParameterError,
)

ALL_SPECS = [
    LearnerSpec.linear(),
    LearnerSpec.tree(max_depth=4, min_leaf=5),
    LearnerSpec.gbm(n_stages=25),
    LearnerSpec.rgbm(n_stages=25),
    LearnerSpec.mlp(hidden_layers=(16, 8), epochs=30),
]


def _toy(rng, n=200, d=5):
    X = rng.standard_normal((n, d))
    y = X[:, 0] * 2.0 - X[:, 1] + 0.1 * rng.standard_normal(n)
    return X, y


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
def test_fit_contract(spec, rng):
    X, y = _toy(rng)
    model = fit(spec, X, y, rng_seed=0)
    assert isinstance(model, FittedModel)
    pred = model.predict(X)
    assert pred.shape == (200,)
    assert np.isfinite(pred).all()
    # better than the constant predictor on train data
    assert np.mean((pred - y) ** 2) < np.var(y)
    # same seed, same fit
    pred2 = fit(spec, X, y, rng_seed=0).predict(X)
    assert np.array_equal(pred, pred2)
    with pytest.raises(DataError):
        model.predict(X[:, :4])


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
def test_fit_input_checks(spec, rng):
    X, y = _toy(rng, n=30)
    with pytest.raises(InsufficientDataError):
        fit(spec, X[:5], y[:5], rng_seed=0)
    Xbad = X.copy()
    Xbad[0, 0] = np.inf
    with pytest.raises(DataError):
        fit(spec, Xbad, y, rng_seed=0)


def test_spec_validation():
    with pytest.raises(ConfigError):
        LearnerSpec(kind="forest").validate()
    with pytest.raises(ConfigError):
        LearnerSpec.tree(max_depth=0).validate()
    with pytest.raises(ConfigError):
        dataclasses.replace(LearnerSpec.gbm(), learning_rate=0.0).validate()
    with pytest.raises(ConfigError):
        dataclasses.replace(LearnerSpec.mlp(), hidden_layers=(8, 0)).validate()
    with pytest.raises(ConfigError):
        dataclasses.replace(LearnerSpec.mlp(), val_fraction=0.9).validate()
    with pytest.raises(ConfigError):
        dataclasses.replace(LearnerSpec.mlp(), patience=-1).validate()


def test_spec_labels_and_round_trip():
    assert LearnerSpec.linear().label() == "linear"
    assert LearnerSpec.tree(max_depth=6).label() == "tree(d6)"
    assert LearnerSpec.gbm().label() == "gbm(d2,m120)"
    assert "rgbm" in LearnerSpec.rgbm().label()
    assert LearnerSpec.mlp(hidden_layers=(50, 25, 12)).label() == "mlp(50-25-12)"
    for spec in ALL_SPECS:
        assert LearnerSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ConfigError):
        LearnerSpec.from_dict({"kind": "mlp", "bogus": 3})


def test_linear_recovers_exact_coefficients(rng):
    X = rng.standard_normal((100, 4))
    beta = np.array([1.5, -2.0, 0.0, 3.0])
    y = X @ beta + 0.5
    model = fit(LearnerSpec.linear(), X, y, rng_seed=0)
    assert np.allclose(model.predict(X), y, atol=1e-8)


def test_tree_nails_single_split(rng):
    X = rng.standard_normal((300, 3))
    y = np.where(X[:, 1] > 0.0, 2.0, -1.0)
    model = fit(LearnerSpec.tree(max_depth=1, min_leaf=10), X, y, rng_seed=0)
    assert np.allclose(model.predict(X), y, atol=1e-12)
    assert model.diagnostics["n_leaves"] == 2


def test_tree_leaf_budget(rng):
    X, y = _toy(rng, n=500)
    for depth in (2, 3, 5):
        model = fit(LearnerSpec.tree(max_depth=depth, min_leaf=5), X, y, rng_seed=0)
        assert model.diagnostics["n_leaves"] <= 2**depth


def test_boosting_zero_rate_limit_predicts_mean(rng):
    X, y = _toy(rng)
    spec = LearnerSpec.gbm(n_stages=40, learning_rate=1e-9)
    model = fit(spec, X, y, rng_seed=0)
    assert np.allclose(model.predict(X), y.mean(), atol=1e-6)


def test_boosting_train_loss_monotone(rng):
    X, y = _toy(rng, n=400)
    for factory in (LearnerSpec.gbm, LearnerSpec.rgbm):
        model = fit(factory(n_stages=60), X, y, rng_seed=0)
        losses = model.diagnostics["train_loss"]
        assert len(losses) == 60
        assert np.all(np.diff(losses) <= 1e-9)


def test_boosting_leaf_penalty_shrinks_fit(rng):
    X, y = _toy(rng, n=300)
    loose = fit(LearnerSpec.gbm(n_stages=30), X, y, rng_seed=0)
    tight = fit(
        dataclasses.replace(LearnerSpec.gbm(n_stages=30), l2_leaf=500.0), X, y, rng_seed=0
    )
    assert tight.diagnostics["train_mse"] > loose.diagnostics["train_mse"]


def test_boosting_subsample_path(rng):
    X, y = _toy(rng, n=400)
    spec = dataclasses.replace(LearnerSpec.gbm(n_stages=30), subsample=0.6)
    model = fit(spec, X, y, rng_seed=0)
    assert np.isfinite(model.predict(X)).all()
    assert np.array_equal(model.predict(X), fit(spec, X, y, rng_seed=0).predict(X))


def test_mlp_fits_linear_map(rng):
    X = rng.standard_normal((600, 3))
    y = X @ np.array([1.0, -0.5, 2.0])
    spec = LearnerSpec.mlp(hidden_layers=(32, 16), epochs=150)
    model = fit(spec, X, y, rng_seed=0)
    assert np.mean((model.predict(X) - y) ** 2) < 1e-2 * y.var()


def test_mlp_patience_zero_runs_full_budget(rng):
    X, y = _toy(rng, n=200)
    spec = LearnerSpec.mlp(hidden_layers=(8,), epochs=25, patience=0)
    model = fit(spec, X, y, rng_seed=0)
    assert model.diagnostics["epochs_run"] == 25
    assert len(model.diagnostics["train_curve"]) == 25


def test_mlp_early_stopping_stops(rng):
    X = rng.standard_normal((300, 4))
    y = rng.standard_normal(300)  # pure noise: val loss cannot keep improving
    spec = LearnerSpec.mlp(hidden_layers=(16,), epochs=400, patience=5)
    model = fit(spec, X, y, rng_seed=0)
    d = model.diagnostics
    assert d["epochs_run"] < 400
    assert d["best_epoch"] <= d["epochs_run"]


def test_grad_check_small_nets(rng):
    X = rng.standard_normal((40, 3))
    y = rng.standard_normal(40)
    for hidden in ((), (7,), (8, 5)):
        spec = LearnerSpec.mlp(hidden_layers=hidden, epochs=5)
        assert grad_check(spec, X, y) < 1e-4


def test_smoothness_gap_directions():
    mse_gbm_step, mse_mlp_step = smoothness_gap(rng_seed=0, target="step")
    assert mse_gbm_step < mse_mlp_step  # axis-aligned steps favor trees
    mse_gbm_sm, mse_mlp_sm = smoothness_gap(rng_seed=0, target="smooth")
    assert mse_mlp_sm < mse_gbm_sm  # rotated smooth surface favors the net
    again = smoothness_gap(rng_seed=0, target="smooth")
    assert (mse_gbm_sm, mse_mlp_sm) == again
