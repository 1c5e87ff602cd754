"""
Assembly of the cGen objectives.

Classification: ``(1 − α)·l_g + α·l_c``. Regression:
``α·l_g + β·l_c + γ·l_p``. ``l_g`` is the image distance between the input
and its counterfactual, ``l_c`` the squared distance of the classifier
probability from 1, and ``l_p`` the squared distance of the frozen
predictor's output from the goal. Terms with a zero weight are left out of
the graph, so they contribute no gradient at all.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from cgenlab.autodiff import ops
from cgenlab.autodiff.tensor import Tensor
from cgenlab.config.constants import CGenMode
from cgenlab.errors import ConfigurationError, DimensionError, ModelNotFrozenError
from cgenlab.nn.models import Model
from cgenlab.schemas.training.cgen import CGenWeights

if TYPE_CHECKING:
    import numpy.typing as npt

TensorMap = Callable[[Tensor], Tensor]


@dataclass(frozen=True)
class LossTerms:
    """Differentiable total plus its components."""

    total: Tensor
    l_g: Tensor
    l_c: Tensor
    l_p: Tensor | None = None

    def values(self) -> dict[str, float]:
        """Component values as floats; ``l_p`` only in regression mode."""
        out = {"l_g": self.l_g.item(), "l_c": self.l_c.item()}
        if self.l_p is not None:
            out["l_p"] = self.l_p.item()
        out["l_total"] = self.total.item()
        return out


def weighted_sum(terms: Sequence[tuple[float, Tensor]]) -> Tensor:
    """``Σ wᵢ·tᵢ`` over the terms whose weight is non-zero."""
    kept = [ops.scale(t, w) for w, t in terms if w != 0.0]
    if not kept:
        return ops.scale(terms[0][1].detach(), 0.0)
    total = kept[0]
    for term in kept[1:]:
        total = ops.add(total, term)
    return total


def constant_like(t: Tensor, value: float) -> Tensor:
    """Untracked tensor of ``t``'s shape and dtype filled with ``value``."""
    return Tensor(np.full(t.shape, value, dtype=t.dtype))


def require_frozen(model: object, role: str) -> None:
    """Raise when ``model`` is a network that still has trainable weights."""
    if isinstance(model, Model) and not model.frozen:
        msg = f"the {role} must be frozen before it is used inside the cGen loss"
        raise ModelNotFrozenError(msg)


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        msg = f"alpha must lie in [0, 1], got {alpha}"
        raise ConfigurationError(msg)


def membership_loss(classifier: TensorMap, x_prime: Tensor) -> Tensor:
    """``mse(classifier(x′), 1)``."""
    prob = classifier(x_prime)
    return ops.mse(prob, constant_like(prob, 1.0))


def cgen_loss_classification(
    x: Tensor,
    x_prime: Tensor,
    classifier: TensorMap,
    t_c: int,
    alpha: float,
) -> LossTerms:
    """
    Classification objective for a ``t_c``-vs-rest classifier.

    The classifier's probability refers to membership in ``t_c``, so the
    target class is encoded as the scalar 1.0 whatever its index.
    """
    del t_c
    _check_alpha(alpha)
    if x.shape != x_prime.shape:
        msg = f"input {x.shape} and counterfactual {x_prime.shape} differ in shape"
        raise DimensionError(msg)
    l_g = ops.mse(x, x_prime)
    l_c = membership_loss(classifier, x_prime)
    total = weighted_sum([(1.0 - alpha, l_g), (alpha, l_c)])
    return LossTerms(total=total, l_g=l_g, l_c=l_c)


def goal_batch(
    t_r: np.ndarray | Sequence[float],
    batch: int,
    dtype: npt.DTypeLike,
) -> Tensor:
    """Broadcast an ``m``-vector goal (or a ``B×m`` block) to ``B×m``."""
    goal = np.asarray(t_r, dtype=np.float64)
    if goal.ndim == 1:
        goal = np.broadcast_to(goal, (batch, goal.shape[0]))
    if goal.ndim != 2 or goal.shape[0] != batch:
        msg = f"goal of shape {goal.shape} does not fit a batch of {batch}"
        raise DimensionError(msg)
    return Tensor(np.ascontiguousarray(goal), dtype=dtype)


def cgen_loss_regression(  # noqa: PLR0913
    x: Tensor,
    x_prime: Tensor,
    classifier: TensorMap,
    predictor: TensorMap,
    t_r: np.ndarray | Sequence[float],
    weights: CGenWeights,
) -> LossTerms:
    """Regression objective; the predictor must be frozen."""
    if weights.mode != CGenMode.REGRESSION:
        msg = "cgen_loss_regression needs regression weights"
        raise ConfigurationError(msg)
    require_frozen(predictor, "predictor")
    if x.shape != x_prime.shape:
        msg = f"input {x.shape} and counterfactual {x_prime.shape} differ in shape"
        raise DimensionError(msg)
    prediction = predictor(x_prime)
    goal = goal_batch(t_r, prediction.shape[0], prediction.dtype)
    if goal.shape != prediction.shape:
        msg = (
            f"goal has {goal.shape[1]} components, "
            f"the predictor emits {prediction.shape[1]}"
        )
        raise DimensionError(msg)
    l_g = ops.mse(x, x_prime)
    l_c = membership_loss(classifier, x_prime)
    l_p = ops.mse(prediction, goal)
    total = weighted_sum(
        [
            (weights.alpha, l_g),
            (weights.beta or 0.0, l_c),
            (weights.gamma or 0.0, l_p),
        ],
    )
    return LossTerms(total=total, l_g=l_g, l_c=l_c, l_p=l_p)


def cgen_loss(  # noqa: PLR0913
    x: Tensor,
    x_prime: Tensor,
    classifier: TensorMap,
    weights: CGenWeights,
    *,
    predictor: TensorMap | None = None,
    t_r: np.ndarray | Sequence[float] | None = None,
    t_c: int = 1,
) -> LossTerms:
    """Dispatch on ``weights.mode``."""
    if weights.mode == CGenMode.CLASSIFICATION:
        return cgen_loss_classification(x, x_prime, classifier, t_c, weights.alpha)
    if predictor is None or t_r is None:
        msg = "regression mode needs a predictor and a goal"
        raise ConfigurationError(msg)
    return cgen_loss_regression(x, x_prime, classifier, predictor, t_r, weights)
