"""Unit tests for the tensor tape and the elementwise/shape primitives.

Covers:
- dtype handling: supported dtypes, no mixing, ``precision`` switching
- recording rules: ``no_grad``, constants, single replay per forward
- gradient accumulation across two forward/backward passes
- no-broadcast shape checks and the explicit ``add_bias`` alignment
- ``bce`` clamping and label validation
"""

from __future__ import annotations

import numpy as np
import pytest

from cgenlab.autodiff import ops
from cgenlab.autodiff.gradcheck import grad_check
from cgenlab.autodiff.tensor import (
    Tensor,
    backward,
    default_dtype,
    grad_enabled,
    no_grad,
    parameter,
    precision,
)
from cgenlab.errors import (
    DimensionError,
    InvalidLabelError,
    NonFiniteError,
    TapeError,
)

GRAD_TOL = 1e-6


# --------------------------------------------------------------------------- #
# Construction and dtypes                                                     #
# --------------------------------------------------------------------------- #


def test_default_dtype_is_float32() -> None:
    t = Tensor([1.0, 2.0])
    assert t.dtype == np.float32
    assert default_dtype() == np.float32


def test_float64_array_keeps_its_dtype() -> None:
    t = Tensor(np.ones(3, dtype=np.float64))
    assert t.dtype == np.float64


def test_precision_switches_default_dtype() -> None:
    with precision("float64"):
        assert Tensor([1.0]).dtype == np.float64
        assert parameter(np.zeros(2), "w").dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32


def test_unsupported_dtype_is_rejected() -> None:
    with pytest.raises(TypeError):
        Tensor(np.ones(2, dtype=np.float16), dtype=np.float16)


def test_non_finite_data_is_rejected() -> None:
    with pytest.raises(NonFiniteError):
        Tensor([1.0, np.nan])


def test_mixed_dtypes_are_rejected() -> None:
    a = Tensor(np.ones(2, dtype=np.float32))
    b = Tensor(np.ones(2, dtype=np.float64))
    with pytest.raises(TypeError):
        ops.add(a, b)


def test_item_needs_one_element() -> None:
    assert Tensor([[3.5]]).item() == 3.5
    with pytest.raises(DimensionError):
        Tensor([1.0, 2.0]).item()


# --------------------------------------------------------------------------- #
# Recording                                                                   #
# --------------------------------------------------------------------------- #


def test_constants_are_not_recorded() -> None:
    out = ops.add(Tensor([1.0]), Tensor([2.0]))
    assert out.entry is None
    assert not out.requires_grad


def test_no_grad_disables_recording() -> None:
    w = parameter([1.0, 2.0], "w")
    with no_grad():
        assert not grad_enabled()
        out = ops.mul(w, w)
    assert grad_enabled()
    assert out.entry is None


def test_backward_needs_a_scalar() -> None:
    w = parameter([1.0, 2.0], "w")
    with pytest.raises(DimensionError):
        backward(ops.mul(w, w))


def test_constant_loss_leaves_gradients_at_zero() -> None:
    w = parameter([1.0, 2.0], "w")
    backward(ops.sum_all(Tensor([3.0])))
    assert w.grad is None

    backward(ops.sum_all(ops.scale(w, 0.0)))
    assert w.grad is not None
    np.testing.assert_array_equal(w.grad, [0.0, 0.0])


def test_second_backward_without_forward_raises() -> None:
    w = parameter([1.0, 2.0], "w")
    loss = ops.sum_all(ops.mul(w, w))
    backward(loss)
    with pytest.raises(TapeError):
        backward(loss)


def test_gradients_accumulate_across_passes() -> None:
    w = parameter([1.0, -2.0], "w")
    for _ in range(2):
        backward(ops.sum_all(ops.mul(w, w)))
    assert w.grad is not None
    np.testing.assert_allclose(w.grad, [4.0, -8.0])
    w.zero_grad()
    assert w.grad is None


def test_shared_subexpression_sums_both_paths() -> None:
    w = parameter([3.0], "w")
    y = ops.scale(w, 2.0)
    backward(ops.sum_all(ops.add(y, y)))
    assert w.grad is not None
    np.testing.assert_allclose(w.grad, [4.0])


def test_operator_sugar() -> None:
    a = Tensor([1.0, 2.0])
    b = Tensor([3.0, 5.0])
    np.testing.assert_allclose((a + b).data, [4.0, 7.0])
    np.testing.assert_allclose((b - a).data, [2.0, 3.0])
    np.testing.assert_allclose((a * b).data, [3.0, 10.0])
    np.testing.assert_allclose((2.0 * a).data, [2.0, 4.0])
    np.testing.assert_allclose((-a).data, [-1.0, -2.0])


# --------------------------------------------------------------------------- #
# Shapes                                                                      #
# --------------------------------------------------------------------------- #


def test_binary_ops_never_broadcast() -> None:
    a = Tensor(np.ones((2, 3)))
    b = Tensor(np.ones((1, 3)))
    for op in (ops.add, ops.sub, ops.mul, ops.mse):
        with pytest.raises(DimensionError):
            op(a, b)


def test_matmul_checks_inner_dimensions() -> None:
    with pytest.raises(DimensionError):
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    with pytest.raises(DimensionError):
        ops.matmul(Tensor(np.ones(3)), Tensor(np.ones((3, 1))))


def test_add_bias_aligns_on_channel_axis() -> None:
    x = Tensor(np.zeros((2, 3, 2, 2), dtype=np.float32))
    out = ops.add_bias(x, Tensor([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(out.data[1, :, 0, 1], [1.0, 2.0, 3.0])


def test_reshape_flatten_and_slice() -> None:
    x = Tensor(np.arange(12.0).reshape(2, 2, 3))
    flat = ops.flatten(x)
    assert flat.shape == (2, 6)
    np.testing.assert_allclose(ops.slice_columns(flat, 1, 3).data, [[1, 2], [7, 8]])
    with pytest.raises(DimensionError):
        ops.reshape(x, (5, 2))
    with pytest.raises(DimensionError):
        ops.slice_columns(flat, 4, 7)


def test_elementwise_dispatch_matches_direct_calls() -> None:
    x = Tensor([-1.0, 0.5])
    np.testing.assert_allclose(ops.elementwise("relu", x).data, [0.0, 0.5])
    np.testing.assert_allclose(
        ops.elementwise("scale", x, factor=3.0).data,
        [-3.0, 1.5],
    )
    np.testing.assert_allclose(
        ops.elementwise("shift", x, factor=1.0).data,
        [0.0, 1.5],
    )
    with pytest.raises(ValueError, match="softmax"):
        ops.elementwise("softmax", x)


# --------------------------------------------------------------------------- #
# Gradients of the primitives                                                 #
# --------------------------------------------------------------------------- #


@pytest.mark.parametrize("name", ["sigmoid", "tanh", "exp"])
def test_smooth_unary_gradients(name: str) -> None:
    point = Tensor(np.random.default_rng(3).uniform(-1.0, 1.0, (2, 3)))

    def f(t: Tensor) -> Tensor:
        return ops.sum_all(ops.elementwise(name, t))

    assert grad_check(f, point) < GRAD_TOL


def test_matmul_and_bias_gradients() -> None:
    gen = np.random.default_rng(4)
    w = gen.standard_normal((3, 2))
    b = gen.standard_normal(2)
    x = Tensor(gen.standard_normal((4, 3)))

    def f(t: Tensor) -> Tensor:
        return ops.mean_all(ops.tanh(ops.add_bias(ops.matmul(x, t), Tensor(b))))

    assert grad_check(f, Tensor(w)) < GRAD_TOL


def test_mse_gradient() -> None:
    target = Tensor(np.linspace(0.0, 1.0, 6).reshape(2, 3))

    def f(t: Tensor) -> Tensor:
        return ops.mse(t, target)

    assert grad_check(f, Tensor(np.ones((2, 3)))) < GRAD_TOL


def test_relu_derivative_at_zero_is_zero() -> None:
    w = parameter([0.0, 1.0, -1.0], "w")
    backward(ops.sum_all(ops.relu(w)))
    assert w.grad is not None
    np.testing.assert_allclose(w.grad, [0.0, 1.0, 0.0])


# --------------------------------------------------------------------------- #
# Binary cross-entropy                                                        #
# --------------------------------------------------------------------------- #


def test_bce_value_and_gradient() -> None:
    labels = Tensor([1.0, 0.0, 1.0])

    def f(t: Tensor) -> Tensor:
        return ops.bce(t, Tensor(labels.data.astype(t.dtype)))

    p = Tensor(np.array([0.8, 0.3, 0.5], dtype=np.float64))
    expected = -np.mean(np.log([0.8, 0.7, 0.5]))
    assert ops.bce(p, Tensor(labels.data.astype(np.float64))).item() == (
        pytest.approx(expected)
    )
    assert grad_check(f, p) < GRAD_TOL


def test_bce_is_finite_at_saturation() -> None:
    p = parameter([0.0, 1.0], "p", dtype=np.float64)
    loss = ops.bce(p, Tensor(np.array([1.0, 0.0])))
    assert np.isfinite(loss.item())
    backward(loss)
    assert p.grad is not None
    np.testing.assert_allclose(p.grad, [0.0, 0.0])


def test_bce_rejects_soft_labels() -> None:
    with pytest.raises(InvalidLabelError):
        ops.bce(Tensor([0.5]), Tensor([0.3]))
