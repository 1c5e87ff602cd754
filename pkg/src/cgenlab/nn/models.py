"""
Network roles of the counterfactual architectures.

``SequentialModel`` runs a validated layer stack. ``ClassifierModel`` and
``PredictorModel`` are sequential stacks with a fixed head; ``GeneratorModel``
pairs an encoder and a decoder stack, optionally variational.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np

from cgenlab.autodiff import ops
from cgenlab.autodiff.rng import make_rng
from cgenlab.autodiff.tensor import Tensor, no_grad
from cgenlab.config.constants import Activation, LayerKind, ModelKind
from cgenlab.errors import (
    DimensionError,
    ModelBuildError,
    TensorLengthMismatchError,
    UnsupportedOperationError,
)
from cgenlab.nn.layers import Layer, describe, infer_output_shape, make_layer

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy.typing as npt

    from cgenlab.autodiff.tensor import Array
    from cgenlab.schemas.models.layers import LayerSpec

logger = logging.getLogger(__name__)

Shape = tuple[int, ...]


# ----------------------------------------------------------------------------
# Shared parameter bookkeeping
# ----------------------------------------------------------------------------


class Model:
    """Parameter bookkeeping shared by every network role."""

    kind: ClassVar[ModelKind]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        """Parameters in a stable order with their names."""
        raise NotImplementedError

    def parameters(self) -> list[Tensor]:
        """Parameters in a stable order."""
        return [p for _, p in self.named_parameters()]

    def freeze(self) -> None:
        """Stop every parameter from receiving gradients."""
        for p in self.parameters():
            p.requires_grad = False
            p.zero_grad()

    def unfreeze(self) -> None:
        """Let every parameter receive gradients again."""
        for p in self.parameters():
            p.requires_grad = True

    @property
    def frozen(self) -> bool:
        """True when no parameter is trainable."""
        return not any(p.requires_grad for p in self.parameters())

    @property
    def dtype(self) -> np.dtype[Any]:
        """Element type of the parameters."""
        params = self.parameters()
        return params[0].dtype if params else np.dtype(np.float32)

    def astype(self, dtype: npt.DTypeLike) -> None:
        """Convert every parameter in place (float64 for gradient checks)."""
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.zero_grad()

    def state_dict(self) -> dict[str, Array]:
        """Copies of every parameter array keyed by name."""
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, Array]) -> None:
        """Overwrite parameters from ``state``; names and shapes must match."""
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing = sorted(set(own) - set(state))
            extra = sorted(set(state) - set(own))
            msg = f"state mismatch: missing {missing}, unexpected {extra}"
            raise TensorLengthMismatchError(msg)
        for name, p in own.items():
            values = np.asarray(state[name])
            if values.shape != p.shape:
                msg = f"tensor '{name}' has shape {values.shape}, expected {p.shape}"
                raise TensorLengthMismatchError(msg)
            p.data = values.astype(p.dtype, copy=True)
            p.zero_grad()

    def weights_hash(self) -> str:
        """sha256 over names, shapes and raw bytes of every parameter."""
        h = hashlib.sha256()
        for name, p in self.named_parameters():
            h.update(name.encode("utf-8"))
            h.update(str(p.shape).encode("utf-8"))
            h.update(np.ascontiguousarray(p.data).tobytes())
        return h.hexdigest()


# ----------------------------------------------------------------------------
# Sequential stacks
# ----------------------------------------------------------------------------


def _next_activation(specs: Sequence[LayerSpec], index: int) -> Activation | None:
    if index + 1 < len(specs) and specs[index + 1].kind == LayerKind.ACTIVATION:
        return specs[index + 1].activation
    return None


class SequentialModel(Model):
    """A validated stack of layers applied in order."""

    kind: ClassVar[ModelKind] = ModelKind.PREDICTOR

    def __init__(
        self,
        specs: Sequence[LayerSpec],
        input_shape: Shape,
        *,
        seed: int,
        prefix: str = "layers",
    ) -> None:
        """Validate shape composition and initialize weights from ``seed``."""
        if not specs:
            msg = "a model needs at least one layer"
            raise ModelBuildError(msg)
        self.specs = list(specs)
        self.input_shape = tuple(input_shape)
        self.prefix = prefix
        self.layers: list[Layer] = []

        shape = self.input_shape
        for index, spec in enumerate(self.specs):
            previous = (
                "input" if index == 0 else describe(self.specs[index - 1], index - 1)
            )
            where = f"{previous} -> {describe(spec, index)}"
            out_shape = infer_output_shape(spec, shape, where)
            self.layers.append(
                make_layer(
                    spec,
                    shape,
                    out_shape,
                    name=f"{prefix}.{index}",
                    rng=make_rng(seed, prefix, index),
                    next_activation=_next_activation(self.specs, index),
                ),
            )
            shape = out_shape
        self.output_shape: Shape = shape

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        """Weights then biases, layer by layer."""
        return [(p.name or "", p) for layer in self.layers for p in layer.params]

    def _coerce_input(self, x: Tensor) -> Tensor:
        if x.shape[1:] != self.input_shape:
            msg = (
                f"model expects per-sample shape {self.input_shape}, "
                f"got {x.shape[1:]}"
            )
            raise DimensionError(msg)
        if x.dtype != self.dtype and x.entry is None and not x.requires_grad:
            return x.astype(self.dtype)
        return x

    def forward(self, x: Tensor) -> Tensor:
        """Run the batch ``x`` (shape ``B × input_shape``) through every layer."""
        out = self._coerce_input(x)
        for layer in self.layers:
            out = layer.forward(out)
        return out

    def __call__(self, x: Tensor) -> Tensor:
        """Alias of ``forward``."""
        return self.forward(x)

    def predict(self, images: npt.ArrayLike) -> Array:
        """Inference on raw arrays without recording a tape."""
        with no_grad():
            return self.forward(Tensor(images, dtype=self.dtype)).numpy()


def build_model(
    specs: Sequence[LayerSpec],
    input_shape: Shape,
    seed: int,
    *,
    prefix: str = "layers",
) -> SequentialModel:
    """Validate ``specs`` against ``input_shape`` and initialize deterministically."""
    return SequentialModel(specs, input_shape, seed=seed, prefix=prefix)


class ClassifierModel(SequentialModel):
    """Conv stack with a dense + sigmoid head emitting one probability."""

    kind: ClassVar[ModelKind] = ModelKind.CLASSIFIER

    def __init__(
        self,
        specs: Sequence[LayerSpec],
        input_shape: Shape,
        *,
        seed: int,
        prefix: str = "classifier",
    ) -> None:
        """Build and check the probability head."""
        super().__init__(specs, input_shape, seed=seed, prefix=prefix)
        last = self.specs[-1]
        if self.output_shape != (1,) or last.activation != Activation.SIGMOID:
            msg = "a classifier must end in a single sigmoid output"
            raise ModelBuildError(msg)


class PredictorModel(SequentialModel):
    """Conv stack with a dense head emitting ``m`` real values."""

    kind: ClassVar[ModelKind] = ModelKind.PREDICTOR

    def __init__(
        self,
        specs: Sequence[LayerSpec],
        input_shape: Shape,
        *,
        seed: int,
        prefix: str = "predictor",
    ) -> None:
        """Build and check the flat output."""
        super().__init__(specs, input_shape, seed=seed, prefix=prefix)
        if len(self.output_shape) != 1:
            msg = f"a predictor must emit a flat vector, got {self.output_shape}"
            raise ModelBuildError(msg)

    @property
    def output_dim(self) -> int:
        """Prediction dimension ``m``."""
        return self.output_shape[0]


# ----------------------------------------------------------------------------
# Generator
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorOutput:
    """Generated image plus the posterior statistics of a variational pass."""

    x_prime: Tensor
    mu: Tensor | None = None
    log_var: Tensor | None = None


class GeneratorModel(Model):
    """
    Shape-preserving encoder/decoder pair.

    In variational mode the encoder emits ``2·latent_dim`` values per sample,
    split into ``mu`` and ``log_var``; the decoder consumes ``latent_dim``.
    """

    kind: ClassVar[ModelKind] = ModelKind.GENERATOR

    def __init__(
        self,
        encoder_specs: Sequence[LayerSpec],
        decoder_specs: Sequence[LayerSpec],
        input_shape: Shape,
        *,
        variational: bool,
        latent_dim: int,
        seed: int,
    ) -> None:
        """Build both stacks and check that they compose to the identity shape."""
        self.variational = variational
        self.latent_dim = latent_dim
        self.input_shape = tuple(input_shape)
        self.encoder = SequentialModel(
            encoder_specs,
            self.input_shape,
            seed=seed,
            prefix="encoder",
        )
        code = self.encoder.output_shape
        expected = (2 * latent_dim,) if variational else (latent_dim,)
        if code != expected:
            msg = f"encoder emits {code}, the generator expects {expected}"
            raise ModelBuildError(msg)
        self.decoder = SequentialModel(
            decoder_specs,
            (latent_dim,),
            seed=seed,
            prefix="decoder",
        )
        if self.decoder.output_shape != self.input_shape:
            msg = (
                f"decoder emits {self.decoder.output_shape}, the generator must "
                f"preserve the input shape {self.input_shape}"
            )
            raise ModelBuildError(msg)
        if self.decoder.specs[-1].activation != Activation.SIGMOID:
            msg = "the decoder must end in a sigmoid activation"
            raise ModelBuildError(msg)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        """Encoder parameters then decoder parameters."""
        return self.encoder.named_parameters() + self.decoder.named_parameters()

    def forward(
        self,
        x: Tensor,
        *,
        rng: np.random.Generator | None = None,
    ) -> GeneratorOutput:
        """
        Map ``x`` to ``x′`` of the same shape.

        A variational pass samples ``z = mu + exp(log_var/2)·ε`` when ``rng`` is
        given and uses ``z = mu`` otherwise.
        """
        code = self.encoder.forward(x)
        if not self.variational:
            return GeneratorOutput(x_prime=self.decoder.forward(code))
        mu, log_var = self._split(code)
        z = mu
        if rng is not None:
            eps = Tensor(rng.standard_normal(mu.shape), dtype=mu.dtype)
            z = ops.add(mu, ops.mul(ops.exp(ops.scale(log_var, 0.5)), eps))
        return GeneratorOutput(x_prime=self.decoder.forward(z), mu=mu, log_var=log_var)

    def __call__(self, x: Tensor) -> Tensor:
        """Deterministic ``x′``."""
        return self.forward(x).x_prime

    def _split(self, code: Tensor) -> tuple[Tensor, Tensor]:
        l = self.latent_dim  # noqa: E741
        return ops.slice_columns(code, 0, l), ops.slice_columns(code, l, 2 * l)

    def _require_variational(self, op: str) -> None:
        if not self.variational:
            msg = f"{op} needs a variational generator"
            raise UnsupportedOperationError(msg)

    def encode_mu(self, x: Tensor) -> Tensor:
        """Posterior mean ``B × latent_dim``."""
        self._require_variational("encode_mu")
        mu, _ = self._split(self.encoder.forward(x))
        return mu

    def decode_latent(self, z: Tensor) -> Tensor:
        """Decoder-only pass; ``z`` is ``(l,)`` or ``B × l``."""
        self._require_variational("decode_latent")
        if z.ndim == 1:
            z = ops.reshape(z, (1, z.shape[0]))
        if z.shape[1] != self.latent_dim:
            msg = f"latent code has {z.shape[1]} components, expected {self.latent_dim}"
            raise DimensionError(msg)
        return self.decoder.forward(z)

    def reconstruct(self, images: npt.ArrayLike) -> Array:
        """Deterministic reconstructions of raw arrays, no tape."""
        with no_grad():
            return self.forward(Tensor(images, dtype=self.dtype)).x_prime.numpy()


def kl_to_standard_normal(mu: Tensor, log_var: Tensor) -> Tensor:
    """
    KL divergence of ``N(mu, exp(log_var))`` from ``N(0, I)``.

    ``½ Σ (mu² + exp(log_var) − 1 − log_var)``, averaged over the batch when
    the inputs are ``B × l``.
    """
    terms = ops.sub(ops.add(ops.mul(mu, mu), ops.exp(log_var)), log_var)
    total = ops.shift(ops.sum_all(terms), -float(mu.size))
    batch = mu.shape[0] if mu.ndim == 2 else 1
    return ops.scale(total, 0.5 / batch)
