"""SGD and Adam update rules over a fixed parameter set."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from cgenlab.config.constants import AutodiffDefaults, OptimizerKind
from cgenlab.errors import ConfigurationError, OptimizerStateError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from cgenlab.autodiff.tensor import Array, Tensor


class Optimizer:
    """Shared bookkeeping: parameter set, step counter, gradient checks."""

    kind: OptimizerKind

    def __init__(self, params: Sequence[Tensor], *, learning_rate: float) -> None:
        """Register ``params``; frozen ones are kept but never touched."""
        if learning_rate <= 0:
            msg = f"learning rate must be positive, got {learning_rate}"
            raise ConfigurationError(msg)
        self.params: list[Tensor] = list(params)
        self.learning_rate = float(learning_rate)
        self.step_count = 0

    def trainable(self) -> list[Tensor]:
        """Parameters that currently require gradients."""
        return [p for p in self.params if p.requires_grad]

    def zero_grad(self) -> None:
        """Forget accumulated gradients of every registered parameter."""
        for p in self.params:
            p.zero_grad()

    def _check_gradients(self) -> list[Tensor]:
        active = self.trainable()
        missing = [
            p.name or f"param[{i}]" for i, p in enumerate(active) if p.grad is None
        ]
        if missing:
            msg = f"no gradient for trainable parameters: {', '.join(missing)}"
            raise OptimizerStateError(msg)
        return active

    def _update(self, index: int, param: Tensor, grad: Array) -> None:
        raise NotImplementedError

    def step(self) -> None:
        """Apply one update to every trainable parameter, then zero gradients."""
        active = self._check_gradients()
        self.step_count += 1
        active_ids = {id(p) for p in active}
        for index, param in enumerate(self.params):
            if id(param) in active_ids and param.grad is not None:
                self._update(index, param, param.grad)
        self.zero_grad()


class SGD(Optimizer):
    """``p ← p − lr·grad``."""

    kind = OptimizerKind.SGD

    def _update(self, index: int, param: Tensor, grad: Array) -> None:
        del index
        param.data -= param.dtype.type(self.learning_rate) * grad


class Adam(Optimizer):
    """Adam with bias-corrected first and second moments."""

    kind = OptimizerKind.ADAM

    def __init__(
        self,
        params: Sequence[Tensor],
        *,
        learning_rate: float,
        beta1: float = AutodiffDefaults.ADAM_BETA1,
        beta2: float = AutodiffDefaults.ADAM_BETA2,
        eps: float = AutodiffDefaults.ADAM_EPS,
    ) -> None:
        """Allocate zero moments for every registered parameter."""
        super().__init__(params, learning_rate=learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.first_moment: list[Array] = [np.zeros_like(p.data) for p in self.params]
        self.second_moment: list[Array] = [np.zeros_like(p.data) for p in self.params]

    def _update(self, index: int, param: Tensor, grad: Array) -> None:
        m = self.first_moment[index]
        v = self.second_moment[index]
        m *= self.beta1
        m += (1.0 - self.beta1) * grad
        v *= self.beta2
        v += (1.0 - self.beta2) * grad * grad
        m_hat = m / (1.0 - self.beta1**self.step_count)
        v_hat = v / (1.0 - self.beta2**self.step_count)
        update = self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        param.data -= update.astype(param.dtype)


def make_optimizer(
    kind: OptimizerKind | str,
    params: Sequence[Tensor],
    learning_rate: float,
) -> Optimizer:
    """Build an optimizer by name."""
    match OptimizerKind(kind):
        case OptimizerKind.SGD:
            return SGD(params, learning_rate=learning_rate)
        case OptimizerKind.ADAM:
            return Adam(params, learning_rate=learning_rate)


def optimizer_step(state: Optimizer) -> None:
    """Apply one update of ``state`` and zero the gradients."""
    state.step()
