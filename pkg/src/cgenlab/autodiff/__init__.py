"""Reverse-mode automatic differentiation over numpy arrays."""

from cgenlab.autodiff.gradcheck import grad_check, grad_check_parameters
from cgenlab.autodiff.ops import (
    add,
    add_bias,
    bce,
    conv2d,
    conv_transpose2d,
    elementwise,
    exp,
    flatten,
    matmul,
    mean_all,
    mse,
    mul,
    relu,
    reshape,
    scale,
    shift,
    sigmoid,
    slice_columns,
    sub,
    sum_all,
    tanh,
)
from cgenlab.autodiff.optim import SGD, Adam, Optimizer, make_optimizer, optimizer_step
from cgenlab.autodiff.rng import derive_seed, make_rng, sample_rng, sample_seed
from cgenlab.autodiff.tensor import (
    ComputationTape,
    Tensor,
    backward,
    default_dtype,
    grad_enabled,
    no_grad,
    parameter,
    precision,
)

__all__ = [
    "SGD",
    "Adam",
    "ComputationTape",
    "Optimizer",
    "Tensor",
    "add",
    "add_bias",
    "backward",
    "bce",
    "conv2d",
    "conv_transpose2d",
    "default_dtype",
    "derive_seed",
    "elementwise",
    "exp",
    "flatten",
    "grad_check",
    "grad_check_parameters",
    "grad_enabled",
    "make_optimizer",
    "make_rng",
    "matmul",
    "mean_all",
    "mse",
    "mul",
    "no_grad",
    "optimizer_step",
    "parameter",
    "precision",
    "relu",
    "reshape",
    "sample_rng",
    "sample_seed",
    "scale",
    "shift",
    "sigmoid",
    "slice_columns",
    "sub",
    "sum_all",
    "tanh",
]
