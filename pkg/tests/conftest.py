"""Shared fixtures: the toy backend family and session-scoped trained
checkpoints reused across editor/service/acceptance tests."""

from __future__ import annotations

from pathlib import Path

import pytest
import torch

import stylemask as sm
from stylemask.backends import Backends, ToyGenerator, ToyScorer, ToySegmenter, ToyWorld
from stylemask.preselect import init_mask_matrix, preselect_channels
from stylemask.trainer import Checkpoint, TrainConfig, train

torch.set_num_threads(1)

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "stylemask" / "data"
ATTRIBUTES_PATH = DATA_DIR / "toy_attributes.yaml"
MANIFEST_PATH = DATA_DIR / "toy_manifest.yaml"
TRAIN_CONFIG_PATH = DATA_DIR / "toy_train.yaml"


@pytest.fixture(scope="session")
def world() -> ToyWorld:
    return ToyWorld()


@pytest.fixture(scope="session")
def catalog():
    return sm.load_attribute_catalog(ATTRIBUTES_PATH)


@pytest.fixture(scope="session")
def backends(world, catalog) -> Backends:
    return Backends(
        generator=ToyGenerator(world),
        segmenter=ToySegmenter(world),
        scorer=ToyScorer(world, catalog),
        catalog=catalog,
    )


@pytest.fixture(scope="session")
def train_config() -> TrainConfig:
    """The standard toy recipe (matches data/toy_train.yaml)."""
    return TrainConfig(
        steps=2500,
        learning_rate=0.05,
        optimizer="adam",
        omega_policy="singleton",
        delta_train=1.0,
        weights=sm.LossWeights(attr=1.0, bg=1.0, prob=0.1),
        seed=0,
    )


@pytest.fixture(scope="session")
def preselect_result(backends):
    return preselect_channels(
        backends.generator, backends.segmenter, backends.catalog.attributes, iters=64, seed=123
    )


@pytest.fixture(scope="session")
def init_matrix_plain(backends):
    gen = backends.generator
    return init_mask_matrix(gen.n_channels, backends.catalog.attributes, {}, gen.editable)


@pytest.fixture(scope="session")
def init_matrix_preselected(backends, preselect_result):
    gen = backends.generator
    return init_mask_matrix(
        gen.n_channels, backends.catalog.attributes, preselect_result.channels, gen.editable
    )


@pytest.fixture(scope="session")
def trained_checkpoint(backends, train_config, init_matrix_preselected) -> Checkpoint:
    """The standard toy checkpoint: pre-selection init, default weights."""
    return train(init_matrix_preselected, train_config, backends)


class _LogTap:
    """Collects line-delimited loss records emitted during training."""

    def __init__(self):
        self.records = []

    def write(self, line: str):
        import json

        self.records.append(json.loads(line))


@pytest.fixture(scope="session")
def plain_training(backends, init_matrix_plain):
    """500-step no-preselection run plus its step-by-step loss log."""
    cfg = TrainConfig(steps=500, learning_rate=0.05, optimizer="adam", seed=0)
    tap = _LogTap()
    ckpt = train(init_matrix_plain, cfg, backends, log_stream=tap)
    return ckpt, tap.records


@pytest.fixture(scope="session")
def trained_checkpoint_plain(plain_training) -> Checkpoint:
    """Trained without pre-selection (catch-all-only initialization),
    within the 500-step discovery budget."""
    return plain_training[0]


@pytest.fixture(scope="session")
def discovery_checkpoint_pre(backends, init_matrix_preselected) -> Checkpoint:
    """Pre-selection init trained within the 500-step discovery budget."""
    cfg = TrainConfig(steps=500, learning_rate=0.05, optimizer="adam", seed=0)
    return train(init_matrix_preselected, cfg, backends)


@pytest.fixture(scope="session")
def trained_checkpoint_nobg(backends, init_matrix_plain) -> Checkpoint:
    """Ablation: background weight zeroed, trained to full leak capture."""
    cfg = TrainConfig(
        steps=4000,
        learning_rate=0.05,
        optimizer="adam",
        weights=sm.LossWeights(attr=1.0, bg=0.0, prob=0.1),
        seed=0,
    )
    return train(init_matrix_plain, cfg, backends)


def sample_pair(backends, tag: int, attribute_index: int | None = None):
    """Deterministic (source, reference) style codes for test pair ``tag``."""
    gen = backends.generator
    z_s, p_s = gen.sample_latent((4242, tag, 0))
    z_r, p_r = gen.sample_latent((4242, tag, 1))
    return gen.to_style(z_s, p_s), gen.to_style(z_r, p_r)
