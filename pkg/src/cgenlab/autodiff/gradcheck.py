"""Finite-difference oracle for the backward pass."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from cgenlab.autodiff.tensor import Tensor, backward, precision
from cgenlab.config.constants import AutodiffDefaults, Precision
from cgenlab.errors import DimensionError

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from cgenlab.autodiff.tensor import Array


def _scalar(value: Tensor, where: str) -> float:
    if value.size != 1:
        msg = f"{where} must be scalar-valued, got shape {value.shape}"
        raise DimensionError(msg)
    return value.item()


def _relative_error(analytic: Array, numeric: Array) -> float:
    denom = np.maximum(
        np.maximum(np.abs(analytic), np.abs(numeric)),
        AutodiffDefaults.GRAD_CHECK_FLOOR,
    )
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(
    f: Callable[[Tensor], Tensor],
    point: Tensor,
    h: float = AutodiffDefaults.GRAD_CHECK_STEP,
) -> float:
    """
    Compare the backward gradient of ``f`` at ``point`` with central differences.

    Everything runs in 64-bit mode. The return value is the maximum over
    coordinates of ``|a − n| / max(|a|, |n|, 1e-8)``.
    """
    with precision(Precision.FLOAT64):
        base = point.data.astype(np.float64)
        x = Tensor(base.copy(), requires_grad=True)
        out = f(x)
        _scalar(out, "grad_check function")
        backward(out)
        analytic = x.grad if x.grad is not None else np.zeros_like(base)

        numeric = np.zeros_like(base)
        flat = numeric.reshape(-1)
        for i in range(base.size):
            probe = base.copy().reshape(-1)
            probe[i] += h
            plus = _scalar(f(Tensor(probe.reshape(base.shape))), "f")
            probe[i] -= 2 * h
            minus = _scalar(f(Tensor(probe.reshape(base.shape))), "f")
            flat[i] = (plus - minus) / (2 * h)
    return _relative_error(analytic, numeric)


def grad_check_parameters(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    n_samples: int,
    rng: np.random.Generator,
    h: float = AutodiffDefaults.GRAD_CHECK_STEP,
) -> float:
    """
    Check ``n_samples`` randomly chosen scalar coordinates across ``params``.

    ``loss_fn`` rebuilds the loss from the current parameter data; the
    parameters must already be float64 (see ``SequentialModel.astype``).
    """
    for p in params:
        p.zero_grad()
    with precision(Precision.FLOAT64):
        loss = loss_fn()
        _scalar(loss, "loss_fn")
        backward(loss)

    sizes = np.array([p.size for p in params])
    total = int(sizes.sum())
    picks = rng.choice(total, size=min(n_samples, total), replace=False)
    offsets = np.cumsum(sizes) - sizes

    analytic = np.zeros(len(picks))
    numeric = np.zeros(len(picks))
    with precision(Precision.FLOAT64):
        for k, flat_index in enumerate(picks):
            which = int(np.searchsorted(offsets, flat_index, side="right") - 1)
            param = params[which]
            local = int(flat_index - offsets[which])
            view = param.data.reshape(-1)
            grad = param.grad.reshape(-1) if param.grad is not None else None
            analytic[k] = 0.0 if grad is None else grad[local]
            original = view[local]
            view[local] = original + h
            plus = _scalar(loss_fn(), "loss_fn")
            view[local] = original - h
            minus = _scalar(loss_fn(), "loss_fn")
            view[local] = original
            numeric[k] = (plus - minus) / (2 * h)
    for p in params:
        p.zero_grad()
    return _relative_error(analytic, numeric)
