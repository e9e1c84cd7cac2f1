"""Registered primitives and their public wrappers.

Binary elementwise operations require equal shapes; the only broadcast allowed
is a 0-d scalar operand. Matrices are always 2-D.
"""
from __future__ import annotations

from typing import Any, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionError, NumericError

from .tensor import Tensor, apply, as_tensor, register_primitive


def _check_binary(name: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise DimensionError(f"{name}: shapes {a.shape} and {b.shape} differ")


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if shape == () and grad.shape != ():
        return np.asarray(grad.sum())
    return grad


def _add_forward(a, b):
    _check_binary("add", a, b)
    return a + b


def _sub_forward(a, b):
    _check_binary("sub", a, b)
    return a - b


def _mul_forward(a, b):
    _check_binary("mul", a, b)
    return a * b


def _sigmoid_forward(x):
    flat = np.atleast_1d(x)
    out = np.empty_like(flat)
    positive = flat >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-flat[positive]))
    exp_x = np.exp(flat[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out.reshape(x.shape)


def _matmul_forward(a, b):
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} x {b.shape}")
    return a @ b


def _softmax_forward(x, axis):
    if x.shape[axis] == 0:
        raise DimensionError(f"softmax over empty axis {axis} of shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("softmax received non-finite input")
    shifted = x - np.max(x, axis=axis, keepdims=True)
    exp_x = np.exp(shifted)
    return exp_x / np.sum(exp_x, axis=axis, keepdims=True)


def _softmax_backward(g, out, x, axis):
    return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)


def _concat_forward(*arrays, axis):
    first = arrays[0]
    for other in arrays[1:]:
        if other.ndim != first.ndim:
            raise DimensionError(f"concat: ranks differ, {first.shape} vs {other.shape}")
        for dim in range(first.ndim):
            if dim != axis % first.ndim and other.shape[dim] != first.shape[dim]:
                raise DimensionError(f"concat along axis {axis}: shapes {first.shape} and {other.shape}")
    return np.concatenate(arrays, axis=axis)


def _concat_backward(g, out, *arrays, axis):
    boundaries = np.cumsum([array.shape[axis] for array in arrays])[:-1]
    return tuple(np.split(g, boundaries, axis=axis))


def _sum_forward(x, axis):
    return np.asarray(np.sum(x, axis=axis))


def _sum_backward(g, out, x, axis):
    if axis is None:
        return (np.full(x.shape, float(g)),)
    return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)


def _reshape_forward(x, shape):
    if int(np.prod(shape)) != x.size:
        raise DimensionError(f"cannot reshape {x.shape} into {shape}")
    return x.reshape(shape)


def _transpose_forward(x):
    if x.ndim != 2:
        raise DimensionError(f"transpose needs a 2-D tensor, got {x.shape}")
    return x.T.copy()


def _tile_rows_forward(x, reps):
    if x.ndim != 2:
        raise DimensionError(f"tile_rows needs a 2-D tensor, got {x.shape}")
    return np.tile(x, (reps, 1))


def _tile_rows_backward(g, out, x, reps):
    return (g.reshape(reps, x.shape[0], x.shape[1]).sum(axis=0),)


def _repeat_rows_forward(x, reps):
    if x.ndim != 2:
        raise DimensionError(f"repeat_rows needs a 2-D tensor, got {x.shape}")
    return np.repeat(x, reps, axis=0)


def _repeat_rows_backward(g, out, x, reps):
    return (g.reshape(x.shape[0], reps, x.shape[1]).sum(axis=1),)


def _take_rows_forward(x, rows):
    return x[list(rows)]


def _take_rows_backward(g, out, x, rows):
    grad = np.zeros_like(x)
    np.add.at(grad, list(rows), g)
    return (grad,)


register_primitive(
    "add",
    _add_forward,
    lambda g, out, a, b: (_reduce_to(g, a.shape), _reduce_to(g, b.shape)),
)
register_primitive(
    "sub",
    _sub_forward,
    lambda g, out, a, b: (_reduce_to(g, a.shape), _reduce_to(-g, b.shape)),
)
register_primitive(
    "mul",
    _mul_forward,
    lambda g, out, a, b: (_reduce_to(g * b, a.shape), _reduce_to(g * a, b.shape)),
)
register_primitive("tanh", np.tanh, lambda g, out, x: (g * (1.0 - out * out),))
register_primitive("sigmoid", _sigmoid_forward, lambda g, out, x: (g * out * (1.0 - out),))
register_primitive(
    "softplus",
    lambda x: np.logaddexp(0.0, x),
    lambda g, out, x: (g * _sigmoid_forward(x),),
)
register_primitive("matmul", _matmul_forward, lambda g, out, a, b: (g @ b.T, a.T @ g))
register_primitive("softmax", _softmax_forward, _softmax_backward)
register_primitive("concat", _concat_forward, _concat_backward)
register_primitive("sum", _sum_forward, _sum_backward)
register_primitive("scale", lambda x, factor: x * factor, lambda g, out, x, factor: (g * factor,))
register_primitive("reshape", _reshape_forward, lambda g, out, x, shape: (g.reshape(x.shape),))
register_primitive("transpose", _transpose_forward, lambda g, out, x: (g.T.copy(),))
register_primitive("tile_rows", _tile_rows_forward, _tile_rows_backward)
register_primitive("repeat_rows", _repeat_rows_forward, _repeat_rows_backward)
register_primitive("take_rows", _take_rows_forward, _take_rows_backward)


def add(a: Any, b: Any) -> Tensor:
    return apply("add", as_tensor(a), as_tensor(b))


def sub(a: Any, b: Any) -> Tensor:
    return apply("sub", as_tensor(a), as_tensor(b))


def mul(a: Any, b: Any) -> Tensor:
    return apply("mul", as_tensor(a), as_tensor(b))


def tanh(x: Tensor) -> Tensor:
    return apply("tanh", as_tensor(x))


def sigmoid(x: Tensor) -> Tensor:
    return apply("sigmoid", as_tensor(x))


def softplus(x: Tensor) -> Tensor:
    return apply("softplus", as_tensor(x))


_UNARY = {"tanh": tanh, "sigmoid": sigmoid}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op: str, a: Any, b: Optional[Any] = None) -> Tensor:
    if op in _UNARY:
        if b is not None:
            raise DimensionError(f"'{op}' takes a single operand")
        return _UNARY[op](a)
    if op in _BINARY:
        if b is None:
            raise DimensionError(f"'{op}' needs two operands")
        return _BINARY[op](a, b)
    raise KeyError(f"unknown elementwise op '{op}'")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return apply("matmul", as_tensor(a), as_tensor(b))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return apply("softmax", as_tensor(x), axis=axis)


def concat(*tensors: Any, axis: int = 0) -> Tensor:
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    return apply("concat", *(as_tensor(tensor) for tensor in tensors), axis=axis)


def reduce_sum(x: Tensor, axis: Optional[int] = None) -> Tensor:
    return apply("sum", as_tensor(x), axis=axis)


def mean_rows(x: Tensor) -> Tensor:
    """Average a matrix over its rows, returning a 1 x d matrix."""
    x = as_tensor(x)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DimensionError(f"mean_rows needs a non-empty 2-D tensor, got {x.shape}")
    return reshape(scale(reduce_sum(x, axis=0), 1.0 / x.shape[0]), (1, x.shape[1]))


def scale(x: Tensor, factor: float) -> Tensor:
    return apply("scale", as_tensor(x), factor=float(factor))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return apply("reshape", as_tensor(x), shape=tuple(int(dim) for dim in shape))


def transpose(x: Tensor) -> Tensor:
    return apply("transpose", as_tensor(x))


def tile_rows(x: Tensor, reps: int) -> Tensor:
    return apply("tile_rows", as_tensor(x), reps=int(reps))


def repeat_rows(x: Tensor, reps: int) -> Tensor:
    return apply("repeat_rows", as_tensor(x), reps=int(reps))


def take_rows(x: Tensor, rows: Sequence[int]) -> Tensor:
    return apply("take_rows", as_tensor(x), rows=tuple(int(row) for row in rows))


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a length-d bias vector to every row of an m x d matrix."""
    x = as_tensor(x)
    bias = as_tensor(bias)
    if bias.ndim == 0:
        return add(x, bias)
    if x.ndim != 2 or bias.ndim != 1 or bias.shape[0] != x.shape[1]:
        raise DimensionError(f"bias of shape {bias.shape} does not fit rows of {x.shape}")
    return add(x, tile_rows(reshape(bias, (1, bias.shape[0])), x.shape[0]))


def affine(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, weight)
    if bias is not None:
        out = add_bias(out, bias)
    return out
