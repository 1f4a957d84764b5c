import dataclasses
import json

import pytest

import textdml as td
from textdml.config import DEFAULT_TAU_BY_SECTOR, SECTORS, STRUCTURED_COLUMNS
from textdml.errors import ConfigError


def test_defaults_validate(cfg, emb_cfg):
    cfg.validate()
    emb_cfg.validate()


def test_sector_constants():
    assert len(SECTORS) == 5
    assert set(DEFAULT_TAU_BY_SECTOR) == set(SECTORS)
    assert len(STRUCTURED_COLUMNS) == 12


def test_tau_mean_exact(cfg):
    assert cfg.tau_mean == sum(cfg.tau_by_sector.values()) / len(cfg.tau_by_sector)
    assert cfg.tau_mean == 557.0


@pytest.mark.parametrize(
    "field,value",
    [
        ("rho", 1.5),
        ("rho", -1.01),
        ("kappa", -0.1),
        ("kappa", 1.2),
        ("selection_sign", 0),
        ("sel_noise_sd", -1.0),
        ("outcome_noise_sd", -0.5),
        ("beta", (1.0, 2.0)),
        ("tau_by_sector", {"tech": 100.0}),
    ],
)
def test_structural_rejects_bad_values(cfg, field, value):
    bad = dataclasses.replace(cfg, **{field: value})
    with pytest.raises(ConfigError):
        bad.validate()


def test_tau_must_be_positive(cfg):
    taus = dict(cfg.tau_by_sector)
    taus[SECTORS[0]] = -5.0
    with pytest.raises(ConfigError):
        dataclasses.replace(cfg, tau_by_sector=taus).validate()


@pytest.mark.parametrize(
    "field,value",
    [("out_dim", 64), ("pca_dim", 2), ("raw_dim", 10), ("signal_noise_sd", -1.0)],
)
def test_embedding_rejects_bad_values(emb_cfg, field, value):
    bad = dataclasses.replace(emb_cfg, **{field: value})
    with pytest.raises(ConfigError):
        bad.validate()


def test_dict_round_trip(cfg, emb_cfg):
    assert td.StructuralConfig.from_dict(cfg.to_dict()) == cfg
    assert td.EmbeddingConfig.from_dict(emb_cfg.to_dict()) == emb_cfg


def test_from_dict_rejects_unknown_keys(cfg):
    d = cfg.to_dict()
    d["bogus"] = 1
    with pytest.raises(ConfigError):
        td.StructuralConfig.from_dict(d)


def test_load_dump_round_trip(tmp_path, cfg, emb_cfg):
    path = tmp_path / "cfg.json"
    td.dump_config(cfg, emb_cfg, path)
    c2, e2 = td.load_config(path)
    assert c2 == cfg and e2 == emb_cfg


def test_load_config_partial_overrides(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"rho": 0.1, "kappa": 0.0}))
    c2, e2 = td.load_config(path)
    assert c2.rho == 0.1 and c2.kappa == 0.0
    assert c2.tau_by_sector == cfg.tau_by_sector
    assert e2 == td.EmbeddingConfig()


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        td.load_config(bad)
    bad.write_text(json.dumps({"rho": 3.0}))
    with pytest.raises(ConfigError):
        td.load_config(bad)
    bad.write_text(json.dumps({"no_such_field": 1}))
    with pytest.raises(ConfigError):
        td.load_config(bad)
