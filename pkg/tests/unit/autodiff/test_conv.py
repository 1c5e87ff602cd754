"""Unit tests for the convolution primitives.

Both directions are checked against explicit loops, the transposed
convolution against the adjoint identity ``<conv(x), y> = <x, conv_t(y)>``,
and both backward rules against central differences.
"""

from __future__ import annotations

import numpy as np
import pytest

from cgenlab.autodiff import ops
from cgenlab.autodiff.gradcheck import grad_check
from cgenlab.autodiff.tensor import Tensor
from cgenlab.errors import ConfigurationError, DimensionError

GRAD_TOL = 1e-5


def conv_loops(x: np.ndarray, k: np.ndarray, stride: int, padding: int) -> np.ndarray:
    """Cross-correlation written as nested loops."""
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    batch, _, height, width = xp.shape
    filters, _, kh, kw = k.shape
    out_h = (height - kh) // stride + 1
    out_w = (width - kw) // stride + 1
    out = np.zeros((batch, filters, out_h, out_w))
    for b in range(batch):
        for f in range(filters):
            for i in range(out_h):
                for j in range(out_w):
                    r, c = i * stride, j * stride
                    out[b, f, i, j] = np.sum(xp[b, :, r : r + kh, c : c + kw] * k[f])
    return out


def conv_transpose_loops(
    y: np.ndarray,
    k: np.ndarray,
    stride: int,
    padding: int,
) -> np.ndarray:
    """Scatter every input pixel through the kernel, then crop the padding."""
    batch, _, height, width = y.shape
    _, channels, kh, kw = k.shape
    full_h = (height - 1) * stride + kh
    full_w = (width - 1) * stride + kw
    full = np.zeros((batch, channels, full_h, full_w))
    for b in range(batch):
        for f in range(y.shape[1]):
            for i in range(height):
                for j in range(width):
                    r, c = i * stride, j * stride
                    full[b, :, r : r + kh, c : c + kw] += y[b, f, i, j] * k[f]
    return full[:, :, padding : full_h - padding, padding : full_w - padding]


@pytest.mark.parametrize(
    ("size", "kernel", "stride", "padding"),
    [(5, 3, 1, 0), (6, 3, 1, 1), (8, 4, 2, 1), (7, 3, 2, 0)],
)
def test_conv2d_matches_loops(
    size: int,
    kernel: int,
    stride: int,
    padding: int,
) -> None:
    gen = np.random.default_rng(10)
    x = gen.standard_normal((2, 3, size, size))
    k = gen.standard_normal((4, 3, kernel, kernel))
    out = ops.conv2d(Tensor(x), Tensor(k), stride=stride, padding=padding)
    np.testing.assert_allclose(out.data, conv_loops(x, k, stride, padding), atol=1e-10)


@pytest.mark.parametrize(
    ("size", "kernel", "stride", "padding"),
    [(4, 3, 1, 0), (4, 3, 1, 1), (4, 4, 2, 1), (3, 3, 2, 0)],
)
def test_conv_transpose2d_matches_loops(
    size: int,
    kernel: int,
    stride: int,
    padding: int,
) -> None:
    gen = np.random.default_rng(11)
    y = gen.standard_normal((2, 4, size, size))
    k = gen.standard_normal((4, 3, kernel, kernel))
    out = ops.conv_transpose2d(Tensor(y), Tensor(k), stride=stride, padding=padding)
    expected = conv_transpose_loops(y, k, stride, padding)
    np.testing.assert_allclose(out.data, expected, atol=1e-10)


@pytest.mark.parametrize(
    ("size", "kernel", "stride", "padding"),
    [(6, 3, 1, 1), (8, 4, 2, 1)],
)
def test_conv_transpose_is_adjoint(
    size: int,
    kernel: int,
    stride: int,
    padding: int,
) -> None:
    gen = np.random.default_rng(12)
    x = gen.standard_normal((2, 3, size, size))
    k = gen.standard_normal((4, 3, kernel, kernel))
    forward = ops.conv2d(Tensor(x), Tensor(k), stride=stride, padding=padding).data
    y = gen.standard_normal(forward.shape)
    back = ops.conv_transpose2d(
        Tensor(y),
        Tensor(k),
        stride=stride,
        padding=padding,
    ).data
    assert back.shape == x.shape
    assert np.sum(forward * y) == pytest.approx(np.sum(x * back), rel=1e-10)


def test_conv2d_gradients_match_finite_differences() -> None:
    gen = np.random.default_rng(13)
    x = gen.standard_normal((1, 2, 6, 6))
    k = gen.standard_normal((3, 2, 4, 4))

    def wrt_input(t: Tensor) -> Tensor:
        return ops.mean_all(ops.tanh(ops.conv2d(t, Tensor(k), stride=2, padding=1)))

    def wrt_kernel(t: Tensor) -> Tensor:
        return ops.mean_all(ops.tanh(ops.conv2d(Tensor(x), t, stride=2, padding=1)))

    assert grad_check(wrt_input, Tensor(x)) < GRAD_TOL
    assert grad_check(wrt_kernel, Tensor(k)) < GRAD_TOL


def test_conv_transpose2d_gradients_match_finite_differences() -> None:
    gen = np.random.default_rng(14)
    y = gen.standard_normal((1, 3, 3, 3))
    k = gen.standard_normal((3, 2, 4, 4))

    def wrt_input(t: Tensor) -> Tensor:
        return ops.mean_all(
            ops.sigmoid(ops.conv_transpose2d(t, Tensor(k), stride=2, padding=1)),
        )

    def wrt_kernel(t: Tensor) -> Tensor:
        return ops.mean_all(
            ops.sigmoid(ops.conv_transpose2d(Tensor(y), t, stride=2, padding=1)),
        )

    assert grad_check(wrt_input, Tensor(y)) < GRAD_TOL
    assert grad_check(wrt_kernel, Tensor(k)) < GRAD_TOL


def test_output_extents() -> None:
    assert ops.conv_output_extent(32, 4, 2, 1) == 16
    assert ops.conv_transpose_output_extent(16, 4, 2, 1) == 32
    with pytest.raises(ConfigurationError):
        ops.conv_output_extent(7, 4, 2, 1)
    with pytest.raises(ConfigurationError):
        ops.conv_transpose_output_extent(1, 1, 1, 1)


def test_conv_rejects_bad_operands() -> None:
    x = Tensor(np.zeros((1, 2, 5, 5)))
    with pytest.raises(DimensionError):
        ops.conv2d(x, Tensor(np.zeros((3, 1, 3, 3))))
    with pytest.raises(DimensionError):
        ops.conv2d(Tensor(np.zeros((2, 5, 5))), Tensor(np.zeros((3, 2, 3, 3))))
    with pytest.raises(ConfigurationError):
        ops.conv2d(x, Tensor(np.zeros((3, 2, 3, 3))), stride=0)
