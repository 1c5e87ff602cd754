"""Executable layers built from ``LayerSpec`` records."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from cgenlab.autodiff import ops
from cgenlab.autodiff.tensor import Tensor, parameter
from cgenlab.config.constants import Activation, LayerKind
from cgenlab.errors import ModelBuildError

if TYPE_CHECKING:
    from cgenlab.schemas.models.layers import LayerSpec

Shape = tuple[int, ...]


def describe(spec: LayerSpec, index: int) -> str:
    """Human-readable label used in build errors."""
    return f"layer {index} ({spec.kind})"


def infer_output_shape(spec: LayerSpec, in_shape: Shape, where: str) -> Shape:
    """
    Per-sample output shape of ``spec`` applied to ``in_shape``.

    ``where`` names the (previous, current) layer pair for error messages.
    """
    match spec.kind:
        case LayerKind.CONV | LayerKind.CONV_TRANSPOSE:
            if len(in_shape) != 3:
                msg = f"{where}: expects C×H×W input, got {in_shape}"
                raise ModelBuildError(msg)
            channels, height, width = in_shape
            if spec.in_channels is not None and spec.in_channels != channels:
                msg = (
                    f"{where}: declares {spec.in_channels} input channels, "
                    f"gets {channels}"
                )
                raise ModelBuildError(msg)
            k = spec.kernel or 0
            s, p = spec.stride, spec.padding
            if spec.kind == LayerKind.CONV:
                spans = (height + 2 * p - k, width + 2 * p - k)
                if any(v < 0 or v % s for v in spans):
                    msg = (
                        f"{where}: {height}×{width} input with kernel {k}, "
                        f"stride {s}, padding {p} does not give an integral output size"
                    )
                    raise ModelBuildError(msg)
                out_hw = (spans[0] // s + 1, spans[1] // s + 1)
            else:
                out_hw = ((height - 1) * s - 2 * p + k, (width - 1) * s - 2 * p + k)
                if min(out_hw) <= 0:
                    msg = f"{where}: transposed output size {out_hw} is not positive"
                    raise ModelBuildError(msg)
            return (spec.out_channels or 0, *out_hw)
        case LayerKind.DENSE:
            if len(in_shape) != 1:
                msg = f"{where}: dense layer needs flat features, got {in_shape}"
                raise ModelBuildError(msg)
            if spec.in_features is not None and spec.in_features != in_shape[0]:
                msg = (
                    f"{where}: declares {spec.in_features} input features, "
                    f"gets {in_shape[0]}"
                )
                raise ModelBuildError(msg)
            return (spec.units or 0,)
        case LayerKind.ACTIVATION:
            return in_shape
        case LayerKind.FLATTEN:
            return (math.prod(in_shape),)
        case LayerKind.RESHAPE:
            target = tuple(spec.shape or ())
            if math.prod(target) != math.prod(in_shape):
                msg = f"{where}: cannot reshape {in_shape} into {target}"
                raise ModelBuildError(msg)
            return target


class Layer:
    """A layer with its (possibly empty) parameter list."""

    def __init__(self, spec: LayerSpec, in_shape: Shape, out_shape: Shape) -> None:
        """Remember the layer spec and the per-sample shapes."""
        self.spec = spec
        self.in_shape = in_shape
        self.out_shape = out_shape
        self.params: list[Tensor] = []

    def forward(self, x: Tensor) -> Tensor:
        """Apply the layer to a batch."""
        raise NotImplementedError


def _init_std(fan_in: int, fan_out: int, next_activation: Activation | None) -> float:
    if next_activation == Activation.RELU:
        return math.sqrt(2.0 / fan_in)
    return math.sqrt(2.0 / (fan_in + fan_out))


class ConvLayer(Layer):
    """Cross-correlation with a learned kernel and per-channel bias."""

    def __init__(
        self,
        spec: LayerSpec,
        in_shape: Shape,
        out_shape: Shape,
        *,
        name: str,
        rng: np.random.Generator,
        next_activation: Activation | None,
    ) -> None:
        """He or Glorot normal kernel, zero bias."""
        super().__init__(spec, in_shape, out_shape)
        k = spec.kernel or 0
        c_in, c_out = in_shape[0], out_shape[0]
        if spec.kind == LayerKind.CONV:
            kernel_shape = (c_out, c_in, k, k)
        else:
            kernel_shape = (c_in, c_out, k, k)
        std = _init_std(c_in * k * k, c_out * k * k, next_activation)
        draws = rng.normal(0.0, std, size=kernel_shape)
        self.kernel = parameter(draws, f"{name}.weight")
        self.bias = parameter(np.zeros(c_out), f"{name}.bias")
        self.params = [self.kernel, self.bias]

    def forward(self, x: Tensor) -> Tensor:
        """Convolve then add the bias."""
        s, p = self.spec.stride, self.spec.padding
        if self.spec.kind == LayerKind.CONV:
            out = ops.conv2d(x, self.kernel, s, p)
        else:
            out = ops.conv_transpose2d(x, self.kernel, s, p)
        return ops.add_bias(out, self.bias)


class DenseLayer(Layer):
    """Affine map ``x·W + b``."""

    def __init__(
        self,
        spec: LayerSpec,
        in_shape: Shape,
        out_shape: Shape,
        *,
        name: str,
        rng: np.random.Generator,
        next_activation: Activation | None,
    ) -> None:
        """He or Glorot normal weight, zero bias."""
        super().__init__(spec, in_shape, out_shape)
        fan_in, fan_out = in_shape[0], out_shape[0]
        std = _init_std(fan_in, fan_out, next_activation)
        draws = rng.normal(0.0, std, size=(fan_in, fan_out))
        self.weight = parameter(draws, f"{name}.weight")
        self.bias = parameter(np.zeros(fan_out), f"{name}.bias")
        self.params = [self.weight, self.bias]

    def forward(self, x: Tensor) -> Tensor:
        """Matrix product then bias."""
        return ops.add_bias(ops.matmul(x, self.weight), self.bias)


class ActivationLayer(Layer):
    """Elementwise non-linearity."""

    def forward(self, x: Tensor) -> Tensor:
        """Dispatch on the activation name."""
        return ops.elementwise(str(self.spec.activation), x)


class FlattenLayer(Layer):
    """Collapse everything after the batch axis."""

    def forward(self, x: Tensor) -> Tensor:
        """Row-major flatten."""
        return ops.flatten(x)


class ReshapeLayer(Layer):
    """Reinterpret per-sample features with a new shape."""

    def forward(self, x: Tensor) -> Tensor:
        """Keep the batch axis, reshape the rest."""
        return ops.reshape(x, (x.shape[0], *self.out_shape))


def make_layer(
    spec: LayerSpec,
    in_shape: Shape,
    out_shape: Shape,
    *,
    name: str,
    rng: np.random.Generator,
    next_activation: Activation | None,
) -> Layer:
    """Instantiate the executable layer of ``spec``."""
    match spec.kind:
        case LayerKind.CONV | LayerKind.CONV_TRANSPOSE:
            return ConvLayer(
                spec,
                in_shape,
                out_shape,
                name=name,
                rng=rng,
                next_activation=next_activation,
            )
        case LayerKind.DENSE:
            return DenseLayer(
                spec,
                in_shape,
                out_shape,
                name=name,
                rng=rng,
                next_activation=next_activation,
            )
        case LayerKind.ACTIVATION:
            return ActivationLayer(spec, in_shape, out_shape)
        case LayerKind.FLATTEN:
            return FlattenLayer(spec, in_shape, out_shape)
        case LayerKind.RESHAPE:
            return ReshapeLayer(spec, in_shape, out_shape)
