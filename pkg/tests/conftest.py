"""Pytest configuration file for setting up shared fixtures."""

import numpy as np
import pytest
from numpy.random import Generator as NpGenerator
from numpy.random import default_rng

from cgenlab.nn.architectures import build_classifier, build_generator, build_predictor
from cgenlab.nn.models import ClassifierModel, GeneratorModel, PredictorModel
from cgenlab.schemas.payload import ModelSection
from cgenlab.schemas.robustness.probe import NoiseProbeConfig
from cgenlab.schemas.training.cgen import (
    LatentSearchConfig,
    PretrainConfig,
    TrainConfig,
)

# Smallest image size the default architectures accept (one stride-2 stage).
TINY = 16

# ============================================================================
# STANDARD CONFIGURATION FOR INPUT VARIABLES
# ============================================================================


@pytest.fixture(scope="session")
def rng() -> NpGenerator:
    """Deterministic NumPy RNG shared across tests (seed=0)."""
    return default_rng(0)


@pytest.fixture
def tiny_images() -> np.ndarray:
    """Eight random ``1×16×16`` images in [0, 1]."""
    return default_rng(1).uniform(0.0, 1.0, size=(8, 1, TINY, TINY)).astype(
        np.float32,
    )


# --------------------------------------------------------------------------- #
# Budgets                                                                     #
# --------------------------------------------------------------------------- #


@pytest.fixture
def tiny_model() -> ModelSection:
    """Architecture sizes small enough for unit tests."""
    return ModelSection(latent_dim=3, code_dim=4, base_channels=2, hidden_units=4)


@pytest.fixture
def pretrain_config() -> PretrainConfig:
    """One short epoch of pre-training."""
    return PretrainConfig(epochs=1, batch_size=4, seed=0)


@pytest.fixture
def train_config() -> TrainConfig:
    """Two cGen epochs: one generator epoch, one classifier epoch."""
    return TrainConfig(epochs=2, batch_size=4, seed=0)


@pytest.fixture
def search_config() -> LatentSearchConfig:
    """A handful of latent-search steps."""
    return LatentSearchConfig(steps=4, learning_rate=0.05, patience=2)


@pytest.fixture
def probe_config() -> NoiseProbeConfig:
    """Coarse gain schedule with few trials."""
    return NoiseProbeConfig(epsilon=0.1, eta_step=0.25, eta_max=1.0, trials=2)


# --------------------------------------------------------------------------- #
# Networks                                                                    #
# --------------------------------------------------------------------------- #


@pytest.fixture
def autoencoder(tiny_model: ModelSection) -> GeneratorModel:
    """Trainable deterministic generator."""
    return build_generator(
        TINY,
        code_dim=tiny_model.code_dim,
        base_channels=tiny_model.base_channels,
        seed=1,
    )


@pytest.fixture
def vae(tiny_model: ModelSection) -> GeneratorModel:
    """Frozen variational generator."""
    model = build_generator(
        TINY,
        variational=True,
        latent_dim=tiny_model.latent_dim,
        base_channels=tiny_model.base_channels,
        seed=2,
    )
    model.freeze()
    return model


@pytest.fixture
def classifier(tiny_model: ModelSection) -> ClassifierModel:
    """Trainable membership classifier."""
    return build_classifier(
        TINY,
        base_channels=tiny_model.base_channels,
        hidden_units=tiny_model.hidden_units,
        seed=3,
    )


@pytest.fixture
def frozen_classifier(classifier: ClassifierModel) -> ClassifierModel:
    """The ``classifier`` fixture, frozen."""
    classifier.freeze()
    return classifier


@pytest.fixture
def controller(tiny_model: ModelSection) -> PredictorModel:
    """Frozen 10-output predictor shaped like a navigation controller."""
    model = build_predictor(
        TINY,
        10,
        base_channels=tiny_model.base_channels,
        hidden_units=tiny_model.hidden_units,
        seed=4,
    )
    model.freeze()
    return model


@pytest.fixture
def scalar_predictor(tiny_model: ModelSection) -> PredictorModel:
    """Frozen one-output predictor (stepping-stones residual)."""
    model = build_predictor(
        TINY,
        1,
        base_channels=tiny_model.base_channels,
        hidden_units=tiny_model.hidden_units,
        seed=5,
    )
    model.freeze()
    return model
