"""Minimal float64 tensor engine with reverse-mode differentiation."""
from . import ops
from .gradcheck import GradCheckReport, grad_check, grad_check_report, injected_fault, relative_error
from .ops import (
    add,
    add_bias,
    affine,
    concat,
    elementwise,
    matmul,
    mean_rows,
    mul,
    repeat_rows,
    reduce_sum,
    reshape,
    scale,
    sigmoid,
    softmax,
    softplus,
    sub,
    take_rows,
    tanh,
    tile_rows,
    transpose,
)
from .tensor import ComputeGraph, Parameter, Tensor, apply, as_tensor, override_backward, registered_primitives

__all__ = [
    "ComputeGraph",
    "GradCheckReport",
    "Parameter",
    "Tensor",
    "add",
    "add_bias",
    "affine",
    "apply",
    "as_tensor",
    "concat",
    "elementwise",
    "grad_check",
    "grad_check_report",
    "injected_fault",
    "matmul",
    "mean_rows",
    "mul",
    "ops",
    "override_backward",
    "registered_primitives",
    "relative_error",
    "repeat_rows",
    "reduce_sum",
    "reshape",
    "scale",
    "sigmoid",
    "softmax",
    "softplus",
    "sub",
    "take_rows",
    "tanh",
    "tile_rows",
    "transpose",
]
