import dataclasses
import json

import numpy as np
import pytest

import textdml as td
from textdml.datagen import ovb_bias
from textdml.errors import (
    DataError,
    InsufficientDataError,
    ParameterError,
    TruthAccessError,
)


def test_shapes_and_dtypes(ds_small):
    n = ds_small.n
    assert ds_small.structured.shape == (n, 12)
    assert ds_small.text_features.shape == (n, 65)
    assert ds_small.treatment.shape == (n,)
    assert set(np.unique(ds_small.treatment)) <= {0, 1}
    assert np.isfinite(ds_small.outcome).all()
    assert 0 < ds_small.treatment.mean() < 1


def test_determinism_bit_identical(cfg, emb_cfg):
    a = td.generate(cfg, emb_cfg, n=200, seed=7)
    b = td.generate(cfg, emb_cfg, n=200, seed=7)
    assert a.structured.tobytes() == b.structured.tobytes()
    assert a.text_features.tobytes() == b.text_features.tobytes()
    assert a.treatment.tobytes() == b.treatment.tobytes()
    assert a.outcome.tobytes() == b.outcome.tobytes()
    assert a.true_ate == b.true_ate


def test_seeds_differ(cfg):
    a = td.generate(cfg, n=200, seed=0, with_embeddings=False)
    b = td.generate(cfg, n=200, seed=1, with_embeddings=False)
    assert not np.array_equal(a.outcome, b.outcome)


def test_true_ate_is_mean_of_unit_effects(ds_small):
    assert ds_small.true_ate == ds_small.oracle_true_effect().mean()


def test_sector_ates_aggregate(ds_small):
    idx = ds_small.sector_idx
    eff = ds_small.oracle_true_effect()
    for k, sector in enumerate(td.SECTORS):
        sub = eff[idx == k]
        assert ds_small.true_ate_by_sector[sector] == pytest.approx(sub.mean())


def test_arrays_read_only(ds_small):
    with pytest.raises(ValueError):
        ds_small.outcome[0] = 0.0
    with pytest.raises(ValueError):
        ds_small.structured[0, 0] = 0.0


def test_propensity_in_unit_interval_and_confounded(ds_small):
    p = ds_small.oracle_propensity()
    a, _ = ds_small.oracle_latents()
    assert np.all((p > 0) & (p < 1))
    assert np.corrcoef(a, p)[0, 1] > 0.3  # selection on ability


def test_truth_lock_blocks_oracles(ds_small):
    with ds_small.truth_lock():
        with pytest.raises(TruthAccessError):
            ds_small.oracle_latents()
        with pytest.raises(TruthAccessError):
            ds_small.oracle_propensity()
        with pytest.raises(TruthAccessError):
            ds_small.oracle_true_effect()
        # nested locks unwind correctly
        with ds_small.truth_lock():
            pass
        with pytest.raises(TruthAccessError):
            ds_small.oracle_latents()
    ds_small.oracle_latents()


def test_features_selector(ds_small, ds_tiny):
    assert ds_small.features("structured").shape[1] == 12
    assert ds_small.features("text").shape[1] == 77
    with pytest.raises(ParameterError):
        ds_small.features("bogus")
    with pytest.raises(DataError):
        ds_tiny.features("text")


def test_unit_record(ds_small):
    u = ds_small.unit(3)
    assert u.index == 3
    assert u.structured.shape == (12,)
    assert u.embedding.shape == (65,)
    assert u.sector in td.SECTORS
    assert u.treatment in (0, 1)
    with ds_small.truth_lock():
        assert ds_small.unit(3).latent is None
        assert ds_small.unit(3).true_effect is None


def test_subset_rederives_truth(ds_small):
    mask = ds_small.treatment == 1
    sub = ds_small.subset(mask)
    assert sub.n == int(mask.sum())
    assert sub.true_ate == sub.oracle_true_effect().mean()
    sub2 = ds_small.subset(np.arange(50))
    assert sub2.n == 50
    assert np.array_equal(sub2.outcome, ds_small.outcome[:50])
    with pytest.raises(InsufficientDataError):
        ds_small.subset(np.zeros(ds_small.n, dtype=bool))


def test_to_frame_columns(ds_small):
    df = ds_small.to_frame()
    assert len(df) == ds_small.n
    for col in td.STRUCTURED_COLUMNS + ["sector", "treatment", "outcome"]:
        assert col in df.columns
    assert "emb_00" in df.columns and "emb_64" in df.columns
    assert "oracle_ability" in df.columns


def test_dir_round_trip(tmp_path, ds_small):
    out = tmp_path / "ds"
    ds_small.to_dir(out)
    back = td.Dataset.from_dir(out)
    assert back.n == ds_small.n
    assert np.array_equal(back.treatment, ds_small.treatment)
    assert np.allclose(back.outcome, ds_small.outcome)
    assert np.allclose(back.text_features, ds_small.text_features)
    assert back.true_ate == pytest.approx(ds_small.true_ate)
    assert back.config == ds_small.config


def test_from_dir_rejects_tampering(tmp_path, ds_tiny):
    out = tmp_path / "ds"
    ds_tiny.to_dir(out)
    sidecar = out / "config.json"
    raw = json.loads(sidecar.read_text())
    raw["true_ate"] += 25.0
    sidecar.write_text(json.dumps(raw))
    with pytest.raises(DataError):
        td.Dataset.from_dir(out)
    sidecar.write_text("{broken")
    with pytest.raises(DataError):
        td.Dataset.from_dir(out)


def test_from_dir_missing(tmp_path):
    with pytest.raises(DataError):
        td.Dataset.from_dir(tmp_path / "nope")


def test_ovb_bias_zero_without_confounding(cfg):
    clean = dataclasses.replace(cfg, gamma_ability=0.0, gamma_motivation=0.0)
    ds = td.generate(clean, n=2000, seed=0, with_embeddings=False)
    assert ovb_bias(ds) == 0.0


def test_ovb_bias_positive_under_selection(cfg):
    ds = td.generate(cfg, n=2000, seed=0, with_embeddings=False)
    assert ovb_bias(ds) > 0.0


def test_ovb_bias_sign_flips(cfg):
    flipped = dataclasses.replace(cfg, selection_sign=-1)
    ds = td.generate(flipped, n=2000, seed=0, with_embeddings=False)
    assert ovb_bias(ds) < 0.0
