from .gradcheck import grad_check
from .ops import (
    absolute,
    concat,
    exp,
    gather,
    gelu,
    layer_norm,
    linear,
    log,
    matmul,
    mean,
    reshape,
    softmax_rows,
    sqrt,
    sum,
    tanh,
    transpose,
    where,
)
from .random import GaussianSampler
from .tensor import ArrayLike, Gradients, Graph, Tensor, add, as_tensor, backward, div, mul, neg, power, sub

__all__ = [
    "Tensor",
    "ArrayLike",
    "Graph",
    "Gradients",
    "GaussianSampler",
    "backward",
    "grad_check",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "matmul",
    "linear",
    "transpose",
    "reshape",
    "concat",
    "gather",
    "where",
    "sum",
    "mean",
    "exp",
    "log",
    "sqrt",
    "tanh",
    "absolute",
    "gelu",
    "softmax_rows",
    "layer_norm",
]
