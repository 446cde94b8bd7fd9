from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractError, DimensionError, NumericalError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
VJP = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """
    Immutable dense float64 tensor that records the operation that produced it.

    Leaves are created directly; every other tensor is the output of an operation
    and keeps references to its inputs together with a vector-Jacobian product
    closure, which is what `backward` walks in reverse topological order.
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data.data if isinstance(data, Tensor) else data, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise NumericalError(f"leaf tensor '{name or 'unnamed'}' holds non-finite values")
        array.flags.writeable = False
        self.data = array
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.op = "leaf"
        self.inputs: Tuple[Tensor, ...] = ()
        self._vjp: Optional[VJP] = None

    @classmethod
    def from_op(cls, data: np.ndarray, op: str, inputs: Sequence["Tensor"], vjp: VJP) -> "Tensor":
        data = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(data)):
            raise NumericalError(f"operation '{op}' produced non-finite values")
        out = cls.__new__(cls)
        if data.flags.writeable:
            data.flags.writeable = False
        out.data = data
        out.requires_grad = any(t.requires_grad for t in inputs)
        out.name = None
        out.op = op
        out.inputs = tuple(inputs) if out.requires_grad else ()
        out._vjp = vjp if out.requires_grad else None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        label = f", name='{self.name}'" if self.name else ""
        return f"Tensor(shape={self.shape}, op='{self.op}', requires_grad={self.requires_grad}{label})"

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return power(self, exponent)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from .ops import matmul

        return matmul(self, other)


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)
    return Tensor.from_op(
        a.data + b.data, "add", (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)),
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)
    return Tensor.from_op(
        a.data - b.data, "sub", (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)),
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    return Tensor.from_op(
        a.data * b.data, "mul", (a, b),
        lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)),
    )


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("div", a, b)
    return Tensor.from_op(
        a.data / b.data, "div", (a, b),
        lambda g: (
            unbroadcast(g / b.data, a.shape),
            unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
    )


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return Tensor.from_op(-a.data, "neg", (a,), lambda g: (-g,))


def power(a: ArrayLike, exponent: float) -> Tensor:
    a = as_tensor(a)
    exponent = float(exponent)
    return Tensor.from_op(
        a.data ** exponent, "pow", (a,),
        lambda g: (g * exponent * a.data ** (exponent - 1.0),),
    )


@dataclass(frozen=True)
class GraphNode:
    index: int
    op: str
    inputs: Tuple[int, ...]
    tensor: Tensor


class Graph:
    """
    Append-only record of the operations reachable from an output tensor.

    Nodes are stored in topological order, so every input precedes the node
    that consumes it.
    """

    def __init__(self, nodes: List[GraphNode]):
        self.nodes = nodes
        self.outputs: Tuple[int, ...] = (nodes[-1].index,) if nodes else ()

    @classmethod
    def trace(cls, output: Tensor) -> "Graph":
        order: List[Tensor] = []
        seen = set()
        stack = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node.inputs:
                if id(parent) not in seen:
                    stack.append((parent, False))

        index_of = {id(t): i for i, t in enumerate(order)}
        nodes = [
            GraphNode(i, t.op, tuple(index_of[id(p)] for p in t.inputs), t)
            for i, t in enumerate(order)
        ]
        return cls(nodes)

    def leaves(self) -> List[Tensor]:
        return [n.tensor for n in self.nodes if n.op == "leaf" and n.tensor.requires_grad]

    def __len__(self) -> int:
        return len(self.nodes)


Gradients = Dict[Tensor, np.ndarray]


def backward(output: Tensor, graph: Optional[Graph] = None) -> Gradients:
    """
    Reverse-mode differentiation of a scalar output.

    Returns the gradient of `output` with respect to every leaf that requires
    grad and is reachable from it.
    """
    if output.size != 1:
        raise ContractError(f"backward needs a scalar output, got shape {output.shape}")
    graph = graph or Graph.trace(output)
    if not graph.nodes or graph.nodes[-1].tensor is not output:
        raise ContractError("graph was not traced from this output")

    grads: Dict[int, np.ndarray] = {graph.nodes[-1].index: np.ones_like(output.data)}
    for node in reversed(graph.nodes):
        g = grads.get(node.index)
        if g is None or node.tensor._vjp is None:
            continue
        input_grads = node.tensor._vjp(g)
        for parent_index, parent, parent_grad in zip(node.inputs, node.tensor.inputs, input_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent_grad.shape != parent.shape:
                raise ContractError(
                    f"'{node.op}' returned gradient of shape {parent_grad.shape} for input {parent.shape}"
                )
            if parent_index in grads:
                grads[parent_index] = grads[parent_index] + parent_grad
            else:
                grads[parent_index] = parent_grad

    return {
        n.tensor: np.array(grads.get(n.index, np.zeros_like(n.tensor.data)))
        for n in graph.nodes
        if n.op == "leaf" and n.tensor.requires_grad
    }
