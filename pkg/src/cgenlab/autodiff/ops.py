"""
Primitive differentiable operations.

Binary ops never broadcast: operands must have identical shapes, and the only
cross-shape op is ``add_bias`` which states its alignment explicitly.
Convolutions use the cross-correlation convention (no kernel flip);
``conv_transpose2d`` is the exact adjoint of ``conv2d`` for the same stride
and padding because both are built from the same two numpy kernels below.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from cgenlab.autodiff.tensor import Array, Tensor, record
from cgenlab.config.constants import AutodiffDefaults, Elementwise
from cgenlab.errors import ConfigurationError, DimensionError, InvalidLabelError

if TYPE_CHECKING:
    from collections.abc import Sequence


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        msg = f"'{op}' needs equal shapes, got {a.shape} and {b.shape}"
        raise DimensionError(msg)


def _require_ndim(op: str, t: Tensor, ndim: int, role: str) -> None:
    if t.ndim != ndim:
        msg = f"'{op}' expects a {ndim}-D {role}, got shape {t.shape}"
        raise DimensionError(msg)


# --------------------------------------------------------------------------- #
# Linear algebra                                                              #
# --------------------------------------------------------------------------- #


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of ``r×k`` and ``k×c`` tensors."""
    _require_ndim("matmul", a, 2, "left operand")
    _require_ndim("matmul", b, 2, "right operand")
    if a.shape[1] != b.shape[0]:
        msg = f"matmul inner dimensions differ: {a.shape} @ {b.shape}"
        raise DimensionError(msg)
    a_data, b_data = a.data, b.data

    def rule(g: Array) -> tuple[Array | None, Array | None]:
        grad_a = g @ b_data.T if a.requires_grad else None
        grad_b = a_data.T @ g if b.requires_grad else None
        return grad_a, grad_b

    return record("matmul", (a, b), a_data @ b_data, rule)


# --------------------------------------------------------------------------- #
# Convolution kernels (numpy level)                                           #
# --------------------------------------------------------------------------- #


def _pad(x: Array, padding: int) -> Array:
    if padding == 0:
        return x
    width = ((0, 0), (0, 0), (padding, padding), (padding, padding))
    return np.pad(x, width)


def _windows(xp: Array, kh: int, kw: int, stride: int) -> Array:
    """Strided patch view ``B×C×H'×W'×kh×kw`` of an already padded input."""
    view = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


def _correlate(x: Array, kernel: Array, stride: int, padding: int) -> Array:
    """``B×C×H×W`` ⋆ ``F×C×kh×kw`` → ``B×F×H'×W'``."""
    _, _, kh, kw = kernel.shape
    patches = _windows(_pad(x, padding), kh, kw, stride)
    out = np.tensordot(patches, kernel, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def _scatter(
    y: Array,
    kernel: Array,
    stride: int,
    padding: int,
    out_hw: tuple[int, int],
) -> Array:
    """Adjoint of ``_correlate``: ``B×F×h×w`` → ``B×C×H×W``."""
    batch = y.shape[0]
    _, channels, kh, kw = kernel.shape
    height, width = out_hw
    h, w = y.shape[2], y.shape[3]
    out = np.zeros(
        (batch, channels, height + 2 * padding, width + 2 * padding),
        dtype=y.dtype,
    )
    for i in range(kh):
        for j in range(kw):
            contrib = np.tensordot(y, kernel[:, :, i, j], axes=([1], [0]))
            out[
                :,
                :,
                i : i + stride * (h - 1) + 1 : stride,
                j : j + stride * (w - 1) + 1 : stride,
            ] += contrib.transpose(0, 3, 1, 2)
    if padding:
        out = out[:, :, padding:-padding, padding:-padding]
    return np.ascontiguousarray(out)


def _kernel_grad(
    y: Array,
    x: Array,
    kernel_hw: tuple[int, int],
    stride: int,
    padding: int,
) -> Array:
    """Kernel adjoint: ``Σ y[b,f,h,w]·xpad[b,c,sh+i,sw+j]`` as ``F×C×kh×kw``."""
    kh, kw = kernel_hw
    patches = _windows(_pad(x, padding), kh, kw, stride)
    patches = patches[:, :, : y.shape[2], : y.shape[3]]
    return np.tensordot(y, patches, axes=([0, 2, 3], [0, 2, 3]))


def conv_output_extent(extent: int, kernel: int, stride: int, padding: int) -> int:
    """``(extent + 2·padding − kernel)/stride + 1``; raises unless integral."""
    span = extent + 2 * padding - kernel
    if span < 0 or span % stride != 0:
        msg = (
            f"conv extent {extent} with kernel {kernel}, stride {stride}, "
            f"padding {padding} does not give an integral output size"
        )
        raise ConfigurationError(msg)
    return span // stride + 1


def conv_transpose_output_extent(
    extent: int,
    kernel: int,
    stride: int,
    padding: int,
) -> int:
    """``(extent − 1)·stride − 2·padding + kernel``; raises unless positive."""
    out = (extent - 1) * stride - 2 * padding + kernel
    if out <= 0:
        msg = (
            f"conv_transpose extent {extent} with kernel {kernel}, stride {stride}, "
            f"padding {padding} gives a non-positive output size"
        )
        raise ConfigurationError(msg)
    return out


def _check_conv_hparams(stride: int, padding: int) -> None:
    if stride < 1 or padding < 0:
        msg = f"stride must be >= 1 and padding >= 0, got {stride} and {padding}"
        raise ConfigurationError(msg)


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlate ``B×C×H×W`` with ``F×C×kh×kw`` into ``B×F×H'×W'``."""
    _require_ndim("conv2d", x, 4, "input")
    _require_ndim("conv2d", kernel, 4, "kernel")
    _check_conv_hparams(stride, padding)
    if x.shape[1] != kernel.shape[1]:
        msg = f"conv2d channel mismatch: input {x.shape}, kernel {kernel.shape}"
        raise DimensionError(msg)
    _, _, height, width = x.shape
    kh, kw = kernel.shape[2], kernel.shape[3]
    conv_output_extent(height, kh, stride, padding)
    conv_output_extent(width, kw, stride, padding)
    x_data, k_data = x.data, kernel.data

    def rule(g: Array) -> tuple[Array | None, Array | None]:
        grad_x = (
            _scatter(g, k_data, stride, padding, (height, width))
            if x.requires_grad
            else None
        )
        grad_k = (
            _kernel_grad(g, x_data, (kh, kw), stride, padding)
            if kernel.requires_grad
            else None
        )
        return grad_x, grad_k

    out = _correlate(x_data, k_data, stride, padding)
    return record("conv2d", (x, kernel), out, rule)


def conv_transpose2d(
    x: Tensor,
    kernel: Tensor,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Adjoint of ``conv2d``: maps ``B×F×H×W`` back to ``B×C×H''×W''``."""
    _require_ndim("conv_transpose2d", x, 4, "input")
    _require_ndim("conv_transpose2d", kernel, 4, "kernel")
    _check_conv_hparams(stride, padding)
    if x.shape[1] != kernel.shape[0]:
        msg = (
            f"conv_transpose2d channel mismatch: input {x.shape}, "
            f"kernel {kernel.shape}"
        )
        raise DimensionError(msg)
    _, _, height, width = x.shape
    kh, kw = kernel.shape[2], kernel.shape[3]
    out_h = conv_transpose_output_extent(height, kh, stride, padding)
    out_w = conv_transpose_output_extent(width, kw, stride, padding)
    x_data, k_data = x.data, kernel.data

    def rule(g: Array) -> tuple[Array | None, Array | None]:
        grad_x = _correlate(g, k_data, stride, padding) if x.requires_grad else None
        grad_k = (
            _kernel_grad(x_data, g, (kh, kw), stride, padding)
            if kernel.requires_grad
            else None
        )
        return grad_x, grad_k

    out = _scatter(x_data, k_data, stride, padding, (out_h, out_w))
    return record("conv_transpose2d", (x, kernel), out, rule)


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a per-feature bias of shape ``(F,)`` along axis 1 of ``B×F[×H×W]``."""
    _require_ndim("add_bias", bias, 1, "bias")
    if x.ndim < 2 or x.shape[1] != bias.shape[0]:
        msg = f"add_bias: bias {bias.shape} does not match axis 1 of {x.shape}"
        raise DimensionError(msg)
    view = (1, bias.shape[0]) + (1,) * (x.ndim - 2)
    reduce_axes = tuple(i for i in range(x.ndim) if i != 1)

    def rule(g: Array) -> tuple[Array, Array | None]:
        grad_b = g.sum(axis=reduce_axes) if bias.requires_grad else None
        return g, grad_b

    return record("add_bias", (x, bias), x.data + bias.data.reshape(view), rule)


# --------------------------------------------------------------------------- #
# Elementwise                                                                 #
# --------------------------------------------------------------------------- #


def relu(x: Tensor) -> Tensor:
    """``max(x, 0)``; the derivative at 0 is taken as 0."""
    mask = x.data > 0

    def rule(g: Array) -> tuple[Array]:
        return (g * mask,)

    return record("relu", (x,), np.where(mask, x.data, 0), rule)


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, saturated to the representable interior of (0, 1)."""
    data = x.data
    e = np.exp(-np.abs(data))
    raw = np.where(data >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(data.dtype)
    info = np.finfo(data.dtype)
    out = np.clip(raw, info.tiny, 1.0 - info.epsneg)

    def rule(g: Array) -> tuple[Array]:
        return (g * out * (1.0 - out),)

    return record("sigmoid", (x,), out, rule)


def tanh(x: Tensor) -> Tensor:
    """Hyperbolic tangent."""
    out = np.tanh(x.data)

    def rule(g: Array) -> tuple[Array]:
        return (g * (1.0 - out * out),)

    return record("tanh", (x,), out, rule)


def exp(x: Tensor) -> Tensor:
    """Elementwise exponential."""
    out = np.exp(x.data)

    def rule(g: Array) -> tuple[Array]:
        return (g * out,)

    return record("exp", (x,), out, rule)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of equal shapes."""
    _require_same_shape("add", a, b)

    def rule(g: Array) -> tuple[Array, Array]:
        return g, g

    return record("add", (a, b), a.data + b.data, rule)


def sub(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise difference of equal shapes."""
    _require_same_shape("sub", a, b)

    def rule(g: Array) -> tuple[Array, Array]:
        return g, -g

    return record("sub", (a, b), a.data - b.data, rule)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of equal shapes."""
    _require_same_shape("mul", a, b)
    a_data, b_data = a.data, b.data

    def rule(g: Array) -> tuple[Array, Array]:
        return g * b_data, g * a_data

    return record("mul", (a, b), a_data * b_data, rule)


def scale(x: Tensor, factor: float) -> Tensor:
    """Multiply by a constant."""
    c = x.dtype.type(factor)

    def rule(g: Array) -> tuple[Array]:
        return (g * c,)

    return record("scale", (x,), x.data * c, rule)


def shift(x: Tensor, offset: float) -> Tensor:
    """Add a constant."""
    c = x.dtype.type(offset)

    def rule(g: Array) -> tuple[Array]:
        return (g,)

    return record("shift", (x,), x.data + c, rule)


def elementwise(op: Elementwise | str, *args: Tensor, factor: float = 1.0) -> Tensor:
    """Dispatch an elementwise primitive by name (``factor`` feeds scale/shift)."""
    match Elementwise(op):
        case Elementwise.RELU:
            return relu(*args)
        case Elementwise.SIGMOID:
            return sigmoid(*args)
        case Elementwise.TANH:
            return tanh(*args)
        case Elementwise.EXP:
            return exp(*args)
        case Elementwise.ADD:
            return add(*args)
        case Elementwise.SUB:
            return sub(*args)
        case Elementwise.MUL:
            return mul(*args)
        case Elementwise.SCALE:
            return scale(*args, factor)
        case Elementwise.SHIFT:
            return shift(*args, factor)


# --------------------------------------------------------------------------- #
# Reductions and shape plumbing                                               #
# --------------------------------------------------------------------------- #


def sum_all(x: Tensor) -> Tensor:
    """Sum of every element as a scalar tensor."""
    shape = x.shape

    def rule(g: Array) -> tuple[Array]:
        return (np.full(shape, g, dtype=g.dtype),)

    return record("sum", (x,), np.sum(x.data), rule)


def mean_all(x: Tensor) -> Tensor:
    """Mean of every element as a scalar tensor."""
    return scale(sum_all(x), 1.0 / x.size)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Reinterpret the row-major data with another shape of equal size."""
    target = tuple(int(s) for s in shape)
    if int(np.prod(target)) != x.size:
        msg = f"cannot reshape {x.shape} into {target}"
        raise DimensionError(msg)
    source = x.shape

    def rule(g: Array) -> tuple[Array]:
        return (g.reshape(source),)

    return record("reshape", (x,), x.data.reshape(target), rule)


def flatten(x: Tensor) -> Tensor:
    """Collapse every axis after the batch axis."""
    return reshape(x, (x.shape[0], x.size // x.shape[0]))


def slice_columns(x: Tensor, start: int, stop: int) -> Tensor:
    """Columns ``start:stop`` of a 2-D tensor."""
    _require_ndim("slice_columns", x, 2, "input")
    if not 0 <= start < stop <= x.shape[1]:
        msg = f"column slice {start}:{stop} is outside {x.shape}"
        raise DimensionError(msg)
    shape = x.shape

    def rule(g: Array) -> tuple[Array]:
        full = np.zeros(shape, dtype=g.dtype)
        full[:, start:stop] = g
        return (full,)

    return record("slice_columns", (x,), x.data[:, start:stop], rule)


# --------------------------------------------------------------------------- #
# Losses                                                                      #
# --------------------------------------------------------------------------- #


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean over all elements of the squared difference."""
    _require_same_shape("mse", a, b)
    diff = a.data - b.data
    n = diff.size

    def rule(g: Array) -> tuple[Array, Array]:
        grad = (2.0 / n) * g * diff
        return grad, -grad

    return record("mse", (a, b), np.mean(diff * diff), rule)


def bce(prob: Tensor, label: Tensor, eps: float = AutodiffDefaults.BCE_EPS) -> Tensor:
    """Mean binary cross-entropy with the probability clamped to [eps, 1−eps]."""
    _require_same_shape("bce", prob, label)
    y = label.data
    if not np.all((y == 0) | (y == 1)):
        msg = "bce labels must be 0 or 1"
        raise InvalidLabelError(msg)
    p = np.clip(prob.data, eps, 1.0 - eps)
    inside = (prob.data > eps) & (prob.data < 1.0 - eps)
    n = p.size
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))

    def rule(g: Array) -> tuple[Array, None]:
        dp = (-y / p + (1.0 - y) / (1.0 - p)) / n
        return g * dp * inside, None

    return record("bce", (prob, label), loss, rule)
