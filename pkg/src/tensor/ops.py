from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionError
from .tensor import ArrayLike, Tensor, add, as_tensor, div, mul, sub, unbroadcast

Axis = Optional[Union[int, Tuple[int, ...]]]

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Matrix product over the last two axes; leading axes are batch axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise DimensionError(f"matmul: batch axes of {a.shape} and {b.shape} disagree") from None

    def vjp(g: np.ndarray):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return Tensor.from_op(out, "matmul", (a, b), vjp)


def transpose(a: ArrayLike, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return Tensor.from_op(np.transpose(a.data, axes), "transpose", (a,), lambda g: (np.transpose(g, inverse),))


def reshape(a: ArrayLike, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError(f"reshape: cannot view {a.shape} as {tuple(shape)}") from None
    return Tensor.from_op(out, "reshape", (a,), lambda g: (g.reshape(a.shape),))


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        raise DimensionError(f"concat: incompatible shapes {[p.shape for p in parts]}") from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]
    return Tensor.from_op(out, "concat", parts, lambda g: tuple(np.split(g, bounds, axis=axis)))


def gather(a: ArrayLike, indices: Sequence[int], axis: int = 0) -> Tensor:
    """Select (possibly repeated) slices along `axis`; repeated slices accumulate gradient."""
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1 or (idx.size and (idx.min() < -a.shape[axis] or idx.max() >= a.shape[axis])):
        raise DimensionError(f"gather: indices out of range for axis {axis} of {a.shape}")

    def vjp(g: np.ndarray):
        grad = np.zeros(a.shape)
        np.add.at(np.moveaxis(grad, axis, 0), idx, np.moveaxis(g, axis, 0))
        return (grad,)

    return Tensor.from_op(np.take(a.data, idx, axis=axis), "gather", (a,), vjp)


def where(condition: np.ndarray, a: ArrayLike, b: ArrayLike) -> Tensor:
    """Elementwise select; selected entries are copied bit-exactly."""
    a, b = as_tensor(a), as_tensor(b)
    cond = np.asarray(condition, dtype=bool)
    return Tensor.from_op(
        np.where(cond, a.data, b.data), "where", (a, b),
        lambda g: (unbroadcast(np.where(cond, g, 0.0), a.shape), unbroadcast(np.where(cond, 0.0, g), b.shape)),
    )


def _expand_reduced(g: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        axes = (axis,) if isinstance(axis, int) else axis
        g = np.expand_dims(g, tuple(ax % len(shape) for ax in axes))
    return np.broadcast_to(g, shape)


def sum(a: ArrayLike, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    return Tensor.from_op(
        np.sum(a.data, axis=axis, keepdims=keepdims), "sum", (a,),
        lambda g: (_expand_reduced(g, a.shape, axis, keepdims),),
    )


def mean(a: ArrayLike, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    total = np.sum(a.data, axis=axis, keepdims=keepdims)
    count = a.size // max(total.size, 1) if axis is not None else a.size
    return Tensor.from_op(
        total / count, "mean", (a,),
        lambda g: (_expand_reduced(g, a.shape, axis, keepdims) / count,),
    )


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return Tensor.from_op(out, "exp", (a,), lambda g: (g * out,))


def log(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return Tensor.from_op(np.log(a.data), "log", (a,), lambda g: (g / a.data,))


def sqrt(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return Tensor.from_op(out, "sqrt", (a,), lambda g: (0.5 * g / out,))


def tanh(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return Tensor.from_op(out, "tanh", (a,), lambda g: (g * (1.0 - out * out),))


def absolute(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return Tensor.from_op(np.abs(a.data), "abs", (a,), lambda g: (g * np.sign(a.data),))


def gelu(a: ArrayLike) -> Tensor:
    """GELU, tanh approximation."""
    a = as_tensor(a)
    x = a.data
    t = np.tanh(_GELU_C * (x + _GELU_K * x ** 3))
    out = 0.5 * x * (1.0 + t)

    def vjp(g: np.ndarray):
        du = _GELU_C * (1.0 + 3.0 * _GELU_K * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du),)

    return Tensor.from_op(out, "gelu", (a,), vjp)


def softmax_rows(a: ArrayLike) -> Tensor:
    """Softmax over the last axis, stabilized by subtracting the row maximum."""
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=-1, keepdims=True)
    return Tensor.from_op(
        out, "softmax", (a,),
        lambda g: (out * (g - np.sum(g * out, axis=-1, keepdims=True)),),
    )


def layer_norm(a: ArrayLike, scale: ArrayLike, shift: ArrayLike, eps: float = 1e-5) -> Tensor:
    a, scale, shift = as_tensor(a), as_tensor(scale), as_tensor(shift)
    width = a.shape[-1]
    if scale.shape != (width,) or shift.shape != (width,):
        raise DimensionError(
            f"layer_norm: scale {scale.shape} / shift {shift.shape} do not match last axis {width}"
        )
    centered = sub(a, mean(a, axis=-1, keepdims=True))
    variance = mean(mul(centered, centered), axis=-1, keepdims=True)
    normalized = div(centered, sqrt(add(variance, eps)))
    return add(mul(normalized, scale), shift)


def linear(x: ArrayLike, weight: ArrayLike, bias: Optional[ArrayLike] = None) -> Tensor:
    out = matmul(x, weight)
    return out if bias is None else add(out, bias)
