import dataclasses

import numpy as np
import pytest

import textdml as td
from textdml.textproxy import (
    ability_r2,
    build_text_features,
    embed,
    embed_lipschitz,
    pca_fit,
    pca_transform,
    poly_expand,
)
from textdml.errors import (
    DegenerateDataError,
    InsufficientDataError,
    ParameterError,
)


def test_embed_shape_and_determinism(emb_cfg, rng):
    a = rng.standard_normal(80)
    m = rng.standard_normal(80)
    E1 = embed(a, m, emb_cfg, rng_seed=5)
    E2 = embed(a, m, emb_cfg, rng_seed=5)
    assert E1.shape == (80, emb_cfg.raw_dim)
    assert E1.tobytes() == E2.tobytes()
    assert not np.array_equal(E1, embed(a, m, emb_cfg, rng_seed=6))


def test_embed_is_smooth_in_latents(emb_cfg, rng):
    """Perturbing one unit's latent moves its embedding by at most L * delta.

    Same rng_seed means identical additive noise, so the difference isolates
    the deterministic map.
    """
    a = rng.standard_normal(50)
    m = rng.standard_normal(50)
    L = embed_lipschitz(emb_cfg)
    for delta in (1e-3, 0.1, 1.0):
        a2 = a.copy()
        a2[7] += delta
        D = embed(a2, m, emb_cfg, rng_seed=3) - embed(a, m, emb_cfg, rng_seed=3)
        assert np.all(D[np.arange(50) != 7] == 0.0)
        assert np.linalg.norm(D[7]) <= L * delta * (1 + 1e-9)


def test_pca_orthonormal_and_ordered(rng):
    X = rng.standard_normal((300, 40)) @ rng.standard_normal((40, 40))
    model = pca_fit(X, n_components=10)
    C = model.components
    assert np.allclose(C @ C.T, np.eye(10), atol=1e-10)
    ev = model.explained_variance
    assert np.all(np.diff(ev) <= 1e-9) and np.all(ev >= 0)
    assert ev.sum() <= X.var(axis=0, ddof=1).sum() + 1e-9
    assert not model.rank_deficient
    Z = pca_transform(model, X)
    assert Z.shape == (300, 10)
    assert np.allclose(Z, (X - model.mean) @ C.T)


def test_pca_recovers_planted_direction(rng):
    w = rng.standard_normal(30)
    w /= np.linalg.norm(w)
    s = rng.standard_normal(500)
    X = np.outer(s, w) * 10 + rng.standard_normal((500, 30)) * 0.1
    model = pca_fit(X, n_components=3)
    assert abs(model.components[0] @ w) > 0.999
    assert model.explained_variance[0] / model.explained_variance.sum() > 0.95


def test_poly_expand_layout(rng):
    Z = rng.standard_normal((20, 30))
    P = poly_expand(Z)
    assert P.shape == (20, 65)
    assert np.array_equal(P[:, :30], Z)
    assert np.array_equal(P[:, 30:60], Z * Z)
    for j, (a, b) in enumerate(((0, 1), (0, 2), (1, 2), (0, 3), (1, 3))):
        assert np.array_equal(P[:, 60 + j], Z[:, a] * Z[:, b])
    assert np.array_equal(poly_expand(Z[4]), P[4])
    with pytest.raises(ParameterError):
        poly_expand(Z[:, :3])


def test_build_text_features_pipeline(emb_cfg, rng):
    a = rng.standard_normal(400)
    m = rng.standard_normal(400)
    F, explained = build_text_features(a, m, emb_cfg, rng_seed=9)
    assert F.shape == (400, emb_cfg.out_dim)
    assert explained.shape == (emb_cfg.pca_dim,)
    F2, _ = build_text_features(a, m, emb_cfg, rng_seed=9)
    assert F.tobytes() == F2.tobytes()


def test_ability_r2_detects_signal(rng):
    n = 600
    a = rng.standard_normal(n)
    X = np.column_stack([a + rng.standard_normal(n) * 0.05, rng.standard_normal(n)])
    assert ability_r2(X, a) > 0.9
    noise = rng.standard_normal((n, 5))
    assert ability_r2(noise, a) < 0.1


def test_ability_r2_is_out_of_sample(rng):
    # pure noise with d close to the n/5 cap must not score positively
    n, d = 600, 100
    X = rng.standard_normal((n, d))
    y = rng.standard_normal(n)
    assert ability_r2(X, y) <= 0.05


def test_ability_r2_input_checks(rng):
    with pytest.raises(InsufficientDataError):
        ability_r2(rng.standard_normal((30, 3)), rng.standard_normal(30))
    with pytest.raises(ParameterError):
        ability_r2(rng.standard_normal((60, 30)), rng.standard_normal(60))
    with pytest.raises(DegenerateDataError):
        ability_r2(rng.standard_normal((100, 4)), np.ones(100))


def test_dataset_text_features_carry_ability_signal(ds_small):
    """The whole point of the proxy channel: text recovers ability far better
    than the structured covariates do."""
    a, _ = ds_small.oracle_latents()
    r2_text = ability_r2(ds_small.features("text"), a)
    r2_struct = ability_r2(ds_small.features("structured"), a)
    assert r2_text > r2_struct + 0.2
    assert r2_text > 0.6


def test_noise_scale_degrades_recovery(cfg, emb_cfg):
    noisy = dataclasses.replace(emb_cfg, signal_noise_sd=emb_cfg.signal_noise_sd * 4)
    ds_clean = td.generate(cfg, emb_cfg, n=400, seed=3)
    ds_noisy = td.generate(cfg, noisy, n=400, seed=3)
    a_c, _ = ds_clean.oracle_latents()
    a_n, _ = ds_noisy.oracle_latents()
    assert ability_r2(ds_clean.features("text"), a_c) > ability_r2(
        ds_noisy.features("text"), a_n
    )
