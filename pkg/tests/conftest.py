"""Shared fixtures: a few small generated datasets reused across modules."""
import numpy as np
import pytest

import textdml as td


@pytest.fixture(scope="session")
def cfg():
    return td.StructuralConfig()


@pytest.fixture(scope="session")
def emb_cfg():
    return td.EmbeddingConfig()


@pytest.fixture(scope="session")
def ds_small():
    """n=400 with embeddings; big enough for cross-fitting, cheap to build."""
    return td.generate(n=400, seed=0)


@pytest.fixture(scope="session")
def ds_tiny():
    """n=150, structured only; for shape/contract checks."""
    return td.generate(n=150, seed=1, with_embeddings=False)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
