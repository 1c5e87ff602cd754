"""Unit tests for the finite-difference oracle itself and for whole stacks."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from cgenlab.autodiff import ops
from cgenlab.autodiff.gradcheck import grad_check, grad_check_parameters
from cgenlab.autodiff.tensor import (
    Array,
    Tensor,
    backward,
    parameter,
    precision,
    record,
)
from cgenlab.cgen.losses import cgen_loss_classification
from cgenlab.errors import DimensionError
from cgenlab.nn.models import SequentialModel
from cgenlab.schemas.models.layers import LayerSpec

if TYPE_CHECKING:
    from cgenlab.nn.models import ClassifierModel, GeneratorModel


def _wrong_double(x: Tensor) -> Tensor:
    """Doubles its input but reports a unit derivative."""

    def rule(g: Array) -> tuple[Array]:
        return (g,)

    return record("wrong_double", (x,), x.data * 2.0, rule)


def test_oracle_flags_a_wrong_backward_rule() -> None:
    point = Tensor(np.array([0.3, -0.7]))
    assert grad_check(lambda t: ops.sum_all(_wrong_double(t)), point) > 0.4


def test_oracle_needs_scalar_output() -> None:
    with pytest.raises(DimensionError):
        grad_check(ops.tanh, Tensor(np.ones(3)))


def test_smooth_stack_parameters_match_finite_differences() -> None:
    specs = [
        LayerSpec(kind="conv", out_channels=2, kernel=4, stride=2, padding=1),
        LayerSpec(kind="activation", activation="tanh"),
        LayerSpec(kind="conv_transpose", out_channels=1, kernel=4, stride=2, padding=1),
        LayerSpec(kind="activation", activation="tanh"),
        LayerSpec(kind="flatten"),
        LayerSpec(kind="dense", units=3),
        LayerSpec(kind="activation", activation="sigmoid"),
    ]
    model = SequentialModel(specs, (1, 4, 4), seed=7)
    model.astype(np.float64)
    gen = np.random.default_rng(8)
    x = Tensor(gen.uniform(0.0, 1.0, (2, 1, 4, 4)))
    target = Tensor(gen.uniform(0.0, 1.0, (2, 3)))

    def loss_fn() -> Tensor:
        return ops.mse(model(x), target)

    err = grad_check_parameters(loss_fn, model.parameters(), 40, gen)
    assert err < 1e-5
    assert all(p.grad is None for p in model.parameters())


def test_sum_of_squares_matches_its_hand_derivative() -> None:
    point = Tensor(np.array([1.0, 2.0, 3.0]))
    assert grad_check(lambda t: ops.sum_all(ops.mul(t, t)), point) < 1e-9

    with precision("float64"):
        x = parameter([1.0, 2.0, 3.0], "x")
        backward(ops.sum_all(ops.mul(x, x)))
    assert x.grad is not None
    np.testing.assert_allclose(x.grad, [2.0, 4.0, 6.0])


def test_constant_function_has_zero_error() -> None:
    point = Tensor(np.array([0.5, -1.5, 2.0]))
    assert grad_check(lambda _: ops.sum_all(Tensor(np.ones(3))), point) == 0.0
    assert grad_check(lambda t: ops.scale(ops.sum_all(t), 0.0), point) == 0.0


def test_generator_classifier_loss_matches_finite_differences(
    autoencoder: GeneratorModel,
    classifier: ClassifierModel,
    tiny_images: np.ndarray,
) -> None:
    autoencoder.astype(np.float64)
    classifier.astype(np.float64)
    x = Tensor(tiny_images[:2].astype(np.float64))

    def loss_fn() -> Tensor:
        terms = cgen_loss_classification(x, autoencoder(x), classifier, 1, 0.5)
        return terms.total

    params = autoencoder.parameters() + classifier.parameters()
    gen = np.random.default_rng(20)
    # a small step keeps the relu kinks out of the central differences
    err = grad_check_parameters(loss_fn, params, 20, gen, h=1e-6)
    assert err < 1e-4
