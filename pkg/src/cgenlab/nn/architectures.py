"""
Default layer stacks for the three network roles.

Every stride-2 stage (kernel 4, padding 1) halves the image until an 8×8
bottleneck, so 32 px images get two stages and 64 px images three. The
decoder mirrors the encoder with transposed convolutions and ends in a
sigmoid so generated pixels stay in (0, 1).
"""

from __future__ import annotations

from cgenlab.config.constants import Activation, LayerKind, ModelDefaults
from cgenlab.errors import ConfigurationError
from cgenlab.nn.models import ClassifierModel, GeneratorModel, PredictorModel
from cgenlab.schemas.models.layers import LayerSpec

_KERNEL = 4
_STRIDE = 2
_PADDING = 1


def stage_count(image_size: int) -> int:
    """Number of stride-2 stages between ``image_size`` and the bottleneck."""
    stages = 0
    size = image_size
    while size > ModelDefaults.BOTTLENECK_EXTENT and size % 2 == 0:
        size //= 2
        stages += 1
    if size != ModelDefaults.BOTTLENECK_EXTENT or stages == 0:
        msg = (
            f"image size {image_size} must be {ModelDefaults.BOTTLENECK_EXTENT} "
            "times a positive power of two"
        )
        raise ConfigurationError(msg)
    return stages


def _channels(image_size: int, base_channels: int) -> list[int]:
    n = stage_count(image_size)
    return [base_channels * min(2**i, 2) for i in range(n)]


def _act(name: Activation) -> LayerSpec:
    return LayerSpec(kind=LayerKind.ACTIVATION, activation=name)


def conv_trunk(image_size: int, base_channels: int) -> list[LayerSpec]:
    """Stride-2 conv + relu stages followed by a flatten."""
    specs: list[LayerSpec] = []
    for out_channels in _channels(image_size, base_channels):
        specs += [
            LayerSpec(
                kind=LayerKind.CONV,
                out_channels=out_channels,
                kernel=_KERNEL,
                stride=_STRIDE,
                padding=_PADDING,
            ),
            _act(Activation.RELU),
        ]
    specs.append(LayerSpec(kind=LayerKind.FLATTEN))
    return specs


def decoder_stack(image_size: int, base_channels: int) -> list[LayerSpec]:
    """Dense projection to the bottleneck, then mirrored transposed stages."""
    channels = _channels(image_size, base_channels)
    extent = ModelDefaults.BOTTLENECK_EXTENT
    top = channels[-1]
    specs = [
        LayerSpec(kind=LayerKind.DENSE, units=top * extent * extent),
        _act(Activation.RELU),
        LayerSpec(kind=LayerKind.RESHAPE, shape=(top, extent, extent)),
    ]
    targets = [*reversed(channels[:-1]), 1]
    for index, out_channels in enumerate(targets):
        last = index == len(targets) - 1
        specs += [
            LayerSpec(
                kind=LayerKind.CONV_TRANSPOSE,
                out_channels=out_channels,
                kernel=_KERNEL,
                stride=_STRIDE,
                padding=_PADDING,
            ),
            _act(Activation.SIGMOID if last else Activation.RELU),
        ]
    return specs


def build_generator(
    image_size: int,
    *,
    variational: bool = False,
    latent_dim: int = ModelDefaults.LATENT_DIM,
    code_dim: int = ModelDefaults.CODE_DIM,
    base_channels: int = ModelDefaults.BASE_CHANNELS,
    seed: int = 0,
) -> GeneratorModel:
    """Autoencoder (code ``code_dim``) or VAE (latent ``latent_dim``)."""
    width = latent_dim if variational else code_dim
    encoder = [
        *conv_trunk(image_size, base_channels),
        LayerSpec(kind=LayerKind.DENSE, units=2 * width if variational else width),
    ]
    return GeneratorModel(
        encoder,
        decoder_stack(image_size, base_channels),
        (1, image_size, image_size),
        variational=variational,
        latent_dim=width,
        seed=seed,
    )


def build_classifier(
    image_size: int,
    *,
    base_channels: int = ModelDefaults.BASE_CHANNELS,
    hidden_units: int = ModelDefaults.HIDDEN_UNITS,
    seed: int = 0,
) -> ClassifierModel:
    """Conv trunk, hidden dense layer and a single sigmoid output."""
    specs = [
        *conv_trunk(image_size, base_channels),
        LayerSpec(kind=LayerKind.DENSE, units=hidden_units),
        _act(Activation.RELU),
        LayerSpec(kind=LayerKind.DENSE, units=1),
        _act(Activation.SIGMOID),
    ]
    return ClassifierModel(specs, (1, image_size, image_size), seed=seed)


def build_predictor(
    image_size: int,
    output_dim: int,
    *,
    base_channels: int = ModelDefaults.BASE_CHANNELS,
    hidden_units: int = ModelDefaults.HIDDEN_UNITS,
    seed: int = 0,
) -> PredictorModel:
    """Conv trunk, hidden dense layer and a linear ``output_dim`` head."""
    specs = [
        *conv_trunk(image_size, base_channels),
        LayerSpec(kind=LayerKind.DENSE, units=hidden_units),
        _act(Activation.RELU),
        LayerSpec(kind=LayerKind.DENSE, units=output_dim),
    ]
    return PredictorModel(specs, (1, image_size, image_size), seed=seed)
