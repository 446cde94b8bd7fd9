import numpy as np
import pandas as pd
import pytest

from src.model import ModelConfig, init_params
from src.synthdata import DatasetManifest, generate
from src.tensor import GaussianSampler
from src.training import StageConfig, TrainingData


@pytest.fixture
def tiny_config():
    """Four tokens of width 4: small enough for finite-difference checks."""
    return ModelConfig(
        dim=4, patch=2, enc_depth=1, dec_depth=1, heads=2, mlp_ratio=1, lead_hidden=3,
        n_vars=2, height=3, width=4,
    )


@pytest.fixture
def tiny_params(tiny_config):
    return init_params(tiny_config, seed=3, adaln_zero=False)


@pytest.fixture
def manifest():
    return DatasetManifest.build(h=8, w=16, n_vars=2, count=40, seed=0, noise_std=0.02, diffusion=0.05)


@pytest.fixture
def dataset(manifest):
    return generate(manifest)


@pytest.fixture
def training_data(manifest, dataset):
    return TrainingData.from_dataset(manifest, dataset, 0.7, 0.15)


@pytest.fixture
def desk_config(training_data):
    """8 x 16 grid, patch 4: eight tokens of width 8."""
    return training_data.model_config(
        ModelConfig(dim=8, patch=4, enc_depth=1, dec_depth=1, heads=2, mlp_ratio=2, lead_hidden=4)
    )


@pytest.fixture
def stage1_config():
    return StageConfig(
        stage=1, steps=6, warmup_steps=2, peak_lr=1e-2, batch_size=2, eval_every=3, val_batches=1,
        mask_ratio=0.75, seed=0,
    )


@pytest.fixture
def stage2_config():
    return StageConfig(
        stage=2, steps=6, warmup_steps=1, peak_lr=1e-2, beta2=0.99, weight_decay=1e-5, batch_size=2,
        loss="mae", eval_every=3, val_batches=1, seed=0,
    )


@pytest.fixture
def stage3_config():
    return StageConfig(
        stage=3, steps=3, warmup_steps=0, peak_lr=1e-3, beta2=0.99, weight_decay=1e-5, batch_size=2,
        loss="mae", n_max=3, cadence=2, eval_every=3, val_batches=1, seed=0,
    )


@pytest.fixture
def standardized_field():
    def make(cfg, seed):
        return GaussianSampler(seed, 42).normal((cfg.n_vars, cfg.height, cfg.width))

    return make


@pytest.fixture
def assert_same_params():
    def check(a, b):
        assert list(a) == list(b)
        for name in a:
            np.testing.assert_array_equal(a[name], b[name], err_msg=name)

    return check


@pytest.fixture
def read_report():
    """(provenance header, rows) of a CSV report written by FileHandler.save_csv."""
    def read(path):
        header = {}
        with open(path, "r", encoding="utf-8") as file:
            for line in file:
                if not line.startswith("# "):
                    break
                key, _, value = line[2:].rstrip("\n").partition("=")
                header[key] = value
        return header, pd.read_csv(path, comment="#")

    return read
