"""Unit tests for the cGen objectives and their weights.

Covers:
- classification algebra at alpha 0, 1 and in between
- zero-weight terms stay out of the graph
- regression: frozen predictor, goal width, broadcast goals
- weight validation per mode
"""

from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from cgenlab.autodiff import ops
from cgenlab.autodiff.tensor import Tensor, backward, parameter
from cgenlab.cgen.losses import (
    TensorMap,
    cgen_loss,
    cgen_loss_classification,
    cgen_loss_regression,
    goal_batch,
    weighted_sum,
)
from cgenlab.config.constants import CGenMode
from cgenlab.errors import ConfigurationError, DimensionError, ModelNotFrozenError
from cgenlab.nn.models import SequentialModel
from cgenlab.schemas.models.layers import LayerSpec
from cgenlab.schemas.training.cgen import CGenWeights


@pytest.fixture
def images() -> tuple[Tensor, Tensor]:
    gen = np.random.default_rng(21)
    x = gen.uniform(0.0, 1.0, (2, 1, 2, 2))
    return Tensor(x), Tensor(np.clip(x + 0.1, 0.0, 1.0))


@pytest.fixture
def head() -> Tensor:
    return parameter(np.full((4, 1), 0.5), "head", dtype=np.float64)


def _classifier(head: Tensor) -> TensorMap:
    def classify(t: Tensor) -> Tensor:
        return ops.sigmoid(ops.matmul(ops.flatten(t), head))

    return classify


def _frozen_predictor(outputs: int) -> SequentialModel:
    model = SequentialModel(
        [LayerSpec(kind="flatten"), LayerSpec(kind="dense", units=outputs)],
        (1, 2, 2),
        seed=3,
    )
    model.astype(np.float64)
    model.freeze()
    return model


# --------------------------------------------------------------------------- #
# Classification                                                              #
# --------------------------------------------------------------------------- #


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
def test_classification_weighting(
    images: tuple[Tensor, Tensor],
    head: Tensor,
    alpha: float,
) -> None:
    x, x_prime = images
    terms = cgen_loss_classification(x, x_prime, _classifier(head), 1, alpha)
    values = terms.values()
    expected = (1.0 - alpha) * values["l_g"] + alpha * values["l_c"]
    assert values["l_total"] == pytest.approx(expected)
    assert values["l_g"] == pytest.approx(np.mean((x.data - x_prime.data) ** 2))
    assert "l_p" not in values


def test_identical_images_have_zero_distance(
    images: tuple[Tensor, Tensor],
    head: Tensor,
) -> None:
    x, _ = images
    terms = cgen_loss_classification(x, x, _classifier(head), 1, 0.5)
    assert terms.l_g.item() == 0.0


def test_zero_weight_term_carries_no_gradient(
    images: tuple[Tensor, Tensor],
    head: Tensor,
) -> None:
    x, x_prime = images
    image = parameter(x_prime.data, "x_prime", dtype=np.float64)
    backward(cgen_loss_classification(x, image, _classifier(head), 1, 0.0).total)
    assert head.grad is None
    assert image.grad is not None

    image.zero_grad()
    backward(cgen_loss_classification(x, image, _classifier(head), 1, 1.0).total)
    assert head.grad is not None


def test_classification_input_checks(
    images: tuple[Tensor, Tensor],
    head: Tensor,
) -> None:
    x, x_prime = images
    classify = _classifier(head)
    with pytest.raises(ConfigurationError):
        cgen_loss_classification(x, x_prime, classify, 1, 1.5)
    with pytest.raises(DimensionError):
        cgen_loss_classification(x, Tensor(np.zeros((1, 1, 2, 2))), classify, 1, 0.5)


def test_weighted_sum_with_every_weight_zero(head: Tensor) -> None:
    total = weighted_sum([(0.0, ops.sum_all(head))])
    assert total.item() == 0.0
    assert total.entry is None


# --------------------------------------------------------------------------- #
# Regression                                                                  #
# --------------------------------------------------------------------------- #


def test_regression_total_matches_combine(
    images: tuple[Tensor, Tensor],
    head: Tensor,
) -> None:
    x, x_prime = images
    weights = CGenWeights.regression(alpha=0.2, beta=0.3, gamma=0.5)
    predictor = _frozen_predictor(2)
    terms = cgen_loss_regression(
        x,
        x_prime,
        _classifier(head),
        predictor,
        [0.5, -0.5],
        weights,
    )
    values = terms.values()
    assert set(values) == {"l_g", "l_c", "l_p", "l_total"}
    expected = weights.combine(values["l_g"], values["l_c"], values["l_p"])
    assert values["l_total"] == pytest.approx(expected)

    prediction = predictor(x_prime).data
    goal = np.array([[0.5, -0.5], [0.5, -0.5]])
    assert values["l_p"] == pytest.approx(np.mean((prediction - goal) ** 2))


def test_regression_needs_a_frozen_predictor(
    images: tuple[Tensor, Tensor],
    head: Tensor,
) -> None:
    x, x_prime = images
    predictor = _frozen_predictor(1)
    predictor.unfreeze()
    with pytest.raises(ModelNotFrozenError):
        cgen_loss_regression(
            x,
            x_prime,
            _classifier(head),
            predictor,
            [0.0],
            CGenWeights.regression(),
        )


def test_regression_goal_width(images: tuple[Tensor, Tensor], head: Tensor) -> None:
    x, x_prime = images
    with pytest.raises(DimensionError, match="components"):
        cgen_loss_regression(
            x,
            x_prime,
            _classifier(head),
            _frozen_predictor(2),
            [0.0, 0.0, 0.0],
            CGenWeights.regression(),
        )


def test_regression_rejects_classification_weights(
    images: tuple[Tensor, Tensor],
    head: Tensor,
) -> None:
    x, x_prime = images
    with pytest.raises(ConfigurationError):
        cgen_loss_regression(
            x,
            x_prime,
            _classifier(head),
            _frozen_predictor(1),
            [0.0],
            CGenWeights.classification(),
        )


def test_dispatcher(images: tuple[Tensor, Tensor], head: Tensor) -> None:
    x, x_prime = images
    plain = cgen_loss(x, x_prime, _classifier(head), CGenWeights.classification(0.4))
    assert plain.l_p is None
    with pytest.raises(ConfigurationError):
        cgen_loss(x, x_prime, _classifier(head), CGenWeights.regression())
    full = cgen_loss(
        x,
        x_prime,
        _classifier(head),
        CGenWeights.regression(),
        predictor=_frozen_predictor(1),
        t_r=[0.0],
    )
    assert full.l_p is not None


def test_goal_batch_shapes() -> None:
    assert goal_batch([1.0, 2.0], 3, np.float32).shape == (3, 2)
    assert goal_batch(np.zeros((3, 2)), 3, np.float32).shape == (3, 2)
    with pytest.raises(DimensionError):
        goal_batch(np.zeros((2, 2)), 3, np.float32)


# --------------------------------------------------------------------------- #
# Weights                                                                     #
# --------------------------------------------------------------------------- #


def test_weight_validation() -> None:
    assert CGenWeights().mode == CGenMode.CLASSIFICATION
    with pytest.raises(ValidationError):
        CGenWeights(alpha=0.5, beta=0.2)
    with pytest.raises(ValidationError):
        CGenWeights(mode="regression", alpha=0.5, beta=0.2)
    with pytest.raises(ValidationError):
        CGenWeights(alpha=-0.1)
    with pytest.raises(ValidationError):
        CGenWeights.regression(gamma=1.5)


def test_combine() -> None:
    assert CGenWeights.classification(0.25).combine(4.0, 8.0) == pytest.approx(5.0)
    weights = CGenWeights.regression(alpha=0.5, beta=0.25, gamma=1.0)
    assert weights.combine(2.0, 4.0, 3.0) == pytest.approx(5.0)
