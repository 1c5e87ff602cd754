"""Unit tests for the network roles and the default architectures.

Covers:
- stage arithmetic of the default stacks and their output shapes
- build-time validation of layer stacks (shape composition, heads)
- freezing, weight hashing and state round-trips
- variational helpers: posterior mean, latent decoding, KL term
"""

from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from cgenlab.autodiff import ops
from cgenlab.autodiff.tensor import Tensor, backward
from cgenlab.errors import (
    ConfigurationError,
    DimensionError,
    ModelBuildError,
    TensorLengthMismatchError,
    UnsupportedOperationError,
)
from cgenlab.nn.architectures import (
    build_classifier,
    build_generator,
    build_predictor,
    stage_count,
)
from cgenlab.nn.models import (
    ClassifierModel,
    GeneratorModel,
    PredictorModel,
    SequentialModel,
    kl_to_standard_normal,
)
from cgenlab.schemas.models.layers import LayerSpec

TINY = 16


# --------------------------------------------------------------------------- #
# Default architectures                                                       #
# --------------------------------------------------------------------------- #


@pytest.mark.parametrize(("size", "stages"), [(16, 1), (32, 2), (64, 3)])
def test_stage_count(size: int, stages: int) -> None:
    assert stage_count(size) == stages


@pytest.mark.parametrize("size", [8, 12, 24, 100])
def test_stage_count_rejects_other_sizes(size: int) -> None:
    with pytest.raises(ConfigurationError):
        stage_count(size)


def test_classifier_emits_probabilities(
    classifier: ClassifierModel,
    tiny_images: np.ndarray,
) -> None:
    probs = classifier(Tensor(tiny_images)).data
    assert probs.shape == (8, 1)
    assert np.all((probs > 0.0) & (probs < 1.0))


def test_predictor_output_width(
    controller: PredictorModel,
    tiny_images: np.ndarray,
) -> None:
    assert controller.output_dim == 10
    assert controller.predict(tiny_images).shape == (8, 10)


def test_generators_preserve_shape(
    autoencoder: GeneratorModel,
    vae: GeneratorModel,
    tiny_images: np.ndarray,
) -> None:
    x = Tensor(tiny_images)
    plain = autoencoder.forward(x)
    assert plain.x_prime.shape == x.shape
    assert plain.mu is None
    sampled = vae.forward(x, rng=np.random.default_rng(0))
    assert sampled.x_prime.shape == x.shape
    assert sampled.mu is not None
    assert sampled.mu.shape == (8, vae.latent_dim)
    assert sampled.log_var is not None
    assert sampled.log_var.shape == (8, vae.latent_dim)
    out = vae.reconstruct(tiny_images)
    assert np.all((out > 0.0) & (out < 1.0))


def test_variational_pass_without_rng_uses_the_mean(
    vae: GeneratorModel,
    tiny_images: np.ndarray,
) -> None:
    x = Tensor(tiny_images)
    mean_pass = vae(x).data
    decoded = vae.decode_latent(vae.encode_mu(x)).data
    np.testing.assert_allclose(mean_pass, decoded)


def test_same_seed_same_weights() -> None:
    a = build_classifier(TINY, base_channels=2, hidden_units=4, seed=9)
    b = build_classifier(TINY, base_channels=2, hidden_units=4, seed=9)
    c = build_classifier(TINY, base_channels=2, hidden_units=4, seed=10)
    assert a.weights_hash() == b.weights_hash()
    assert a.weights_hash() != c.weights_hash()


# --------------------------------------------------------------------------- #
# Stack validation                                                            #
# --------------------------------------------------------------------------- #


def test_non_integral_convolution_is_rejected() -> None:
    specs = [LayerSpec(kind="conv", out_channels=2, kernel=3, stride=2)]
    with pytest.raises(ModelBuildError, match="layer 0"):
        SequentialModel(specs, (1, 6, 6), seed=0)


def test_declared_input_channels_must_match() -> None:
    specs = [
        LayerSpec(kind="conv", out_channels=2, kernel=3, padding=1),
        LayerSpec(kind="conv", in_channels=3, out_channels=2, kernel=3, padding=1),
    ]
    with pytest.raises(ModelBuildError, match="layer 1"):
        SequentialModel(specs, (1, 4, 4), seed=0)


def test_dense_needs_flat_input_and_empty_stack_fails() -> None:
    with pytest.raises(ModelBuildError):
        SequentialModel([LayerSpec(kind="dense", units=2)], (1, 4, 4), seed=0)
    with pytest.raises(ModelBuildError):
        SequentialModel([], (1, 4, 4), seed=0)


def test_layer_spec_rejects_foreign_fields() -> None:
    with pytest.raises(ValidationError):
        LayerSpec(kind="dense", units=4, kernel=3)
    with pytest.raises(ValidationError):
        LayerSpec(kind="conv", out_channels=2)


def test_classifier_head_must_be_one_sigmoid() -> None:
    specs = [LayerSpec(kind="flatten"), LayerSpec(kind="dense", units=2)]
    with pytest.raises(ModelBuildError):
        ClassifierModel(specs, (1, 4, 4), seed=0)


def test_generator_must_end_in_sigmoid() -> None:
    encoder = [LayerSpec(kind="flatten"), LayerSpec(kind="dense", units=2)]
    decoder = [
        LayerSpec(kind="dense", units=16),
        LayerSpec(kind="reshape", shape=(1, 4, 4)),
    ]
    with pytest.raises(ModelBuildError, match="sigmoid"):
        GeneratorModel(
            encoder,
            decoder,
            (1, 4, 4),
            variational=False,
            latent_dim=2,
            seed=0,
        )


def test_forward_checks_sample_shape(classifier: ClassifierModel) -> None:
    with pytest.raises(DimensionError):
        classifier(Tensor(np.zeros((2, 1, 8, 8), dtype=np.float32)))


# --------------------------------------------------------------------------- #
# Parameters                                                                  #
# --------------------------------------------------------------------------- #


def test_freeze_blocks_gradients(
    classifier: ClassifierModel,
    tiny_images: np.ndarray,
) -> None:
    assert not classifier.frozen
    classifier.freeze()
    assert classifier.frozen
    out = classifier(Tensor(tiny_images))
    assert out.entry is None
    classifier.unfreeze()
    backward(ops.mean_all(classifier(Tensor(tiny_images))))
    assert all(p.grad is not None for p in classifier.parameters())


def test_state_round_trip_and_mismatch(classifier: ClassifierModel) -> None:
    other = build_classifier(TINY, base_channels=2, hidden_units=4, seed=42)
    other.load_state_dict(classifier.state_dict())
    assert other.weights_hash() == classifier.weights_hash()

    state = classifier.state_dict()
    name = next(iter(state))
    with pytest.raises(TensorLengthMismatchError):
        other.load_state_dict({**state, name: np.zeros(3)})
    state.pop(name)
    with pytest.raises(TensorLengthMismatchError, match="missing"):
        other.load_state_dict(state)


def test_weights_hash_tracks_values(classifier: ClassifierModel) -> None:
    before = classifier.weights_hash()
    classifier.parameters()[0].data += 1.0
    assert classifier.weights_hash() != before


def test_astype_converts_every_parameter(controller: PredictorModel) -> None:
    controller.astype(np.float64)
    assert controller.dtype == np.float64
    assert all(p.dtype == np.float64 for p in controller.parameters())


# --------------------------------------------------------------------------- #
# Variational helpers                                                         #
# --------------------------------------------------------------------------- #


def test_latent_helpers_need_a_variational_generator(
    autoencoder: GeneratorModel,
    tiny_images: np.ndarray,
) -> None:
    with pytest.raises(UnsupportedOperationError):
        autoencoder.encode_mu(Tensor(tiny_images))
    with pytest.raises(UnsupportedOperationError):
        autoencoder.decode_latent(Tensor(np.zeros(4, dtype=np.float32)))


def test_decode_latent_accepts_a_single_code(vae: GeneratorModel) -> None:
    z = Tensor(np.zeros(vae.latent_dim, dtype=np.float32))
    assert vae.decode_latent(z).shape == (1, 1, TINY, TINY)
    with pytest.raises(DimensionError):
        vae.decode_latent(Tensor(np.zeros((1, vae.latent_dim + 1), dtype=np.float32)))


def test_kl_vanishes_at_the_prior() -> None:
    zeros = Tensor(np.zeros((2, 3)))
    assert kl_to_standard_normal(zeros, zeros).item() == pytest.approx(0.0)


def test_kl_value() -> None:
    mu = Tensor(np.array([[1.0, 0.0]]))
    log_var = Tensor(np.zeros((1, 2)))
    assert kl_to_standard_normal(mu, log_var).item() == pytest.approx(0.5)
    wide = Tensor(np.array([[0.0, np.log(2.0)]]))
    expected = 0.5 * (2.0 - 1.0 - np.log(2.0))
    assert kl_to_standard_normal(Tensor(np.zeros((1, 2))), wide).item() == (
        pytest.approx(expected)
    )


def test_predictor_rejects_image_output() -> None:
    specs = [LayerSpec(kind="conv", out_channels=1, kernel=1)]
    with pytest.raises(ModelBuildError):
        PredictorModel(specs, (1, 4, 4), seed=0)


def test_default_generator_and_predictor_builders() -> None:
    gen = build_generator(32, code_dim=5, base_channels=2, seed=0)
    assert gen.latent_dim == 5
    assert not gen.variational
    pred = build_predictor(32, 1, base_channels=2, hidden_units=4, seed=0)
    assert pred.output_shape == (1,)
