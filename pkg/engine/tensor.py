"""Dense float64 tensors with reverse-mode differentiation.

Every differentiable operation is a registered :class:`Primitive` (a forward
function on numpy arrays plus a backward rule). Calling :func:`apply` runs the
forward function and links the result to its inputs; :class:`ComputeGraph`
orders those links topologically and runs the backward rules in reverse.

Only leaf tensors (parameters and other tensors created directly) keep a
``grad`` slot. Gradients accumulate into it with ``+=`` until ``zero_grad`` is
called; intermediate adjoints live only for the duration of one backward pass.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionError

BackwardRule = Callable[..., Tuple[Optional[np.ndarray], ...]]


@dataclass(frozen=True)
class Primitive:
    name: str
    forward: Callable[..., np.ndarray]
    backward: BackwardRule


_REGISTRY: Dict[str, Primitive] = {}


def register_primitive(name: str, forward: Callable[..., np.ndarray], backward: BackwardRule) -> Primitive:
    primitive = Primitive(name=name, forward=forward, backward=backward)
    _REGISTRY[name] = primitive
    return primitive


def get_primitive(name: str) -> Primitive:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown primitive '{name}'") from None


def registered_primitives() -> List[str]:
    return sorted(_REGISTRY)


@contextlib.contextmanager
def override_backward(name: str, backward: BackwardRule) -> Iterator[None]:
    """Temporarily replace the backward rule of a primitive (used for fault injection)."""
    original = get_primitive(name)
    _REGISTRY[name] = Primitive(name=name, forward=original.forward, backward=backward)
    try:
        yield
    finally:
        _REGISTRY[name] = original


class Tensor:
    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._op: Optional[str] = None
        self._attrs: Dict[str, Any] = {}
        self._parents: Tuple["Tensor", ...] = ()

    @classmethod
    def _from_op(
        cls,
        data: np.ndarray,
        op: str,
        parents: Sequence["Tensor"],
        attrs: Dict[str, Any],
    ) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = np.asarray(data, dtype=np.float64)
        out.requires_grad = any(parent.requires_grad for parent in parents)
        out.grad = None
        out.name = None
        out._op = op
        out._attrs = attrs
        out._parents = tuple(parents) if out.requires_grad else ()
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def is_leaf(self) -> bool:
        return self._op is None

    def item(self) -> float:
        if self.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.data.shape:
            raise DimensionError(
                f"gradient shape {grad.shape} does not match tensor shape {self.data.shape}"
            )
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        ComputeGraph(self).backward(seed)

    def __add__(self, other):
        from engine import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from engine import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from engine import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from engine import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from engine import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from engine import ops

        return ops.mul(other, self)

    def __matmul__(self, other):
        from engine import ops

        return ops.matmul(self, other)

    def __neg__(self):
        from engine import ops

        return ops.scale(self, -1.0)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        op = f" op={self._op}" if self._op else ""
        return f"Tensor(shape={self.shape}{label}{op}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """Leaf tensor that always tracks gradients."""

    def __init__(self, data: Any, name: str):
        super().__init__(data, requires_grad=True, name=name)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def apply(name: str, *inputs: Tensor, **attrs: Any) -> Tensor:
    primitive = get_primitive(name)
    data = primitive.forward(*(tensor.data for tensor in inputs), **attrs)
    return Tensor._from_op(data, name, inputs, attrs)


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


class ComputeGraph:
    """Topologically ordered record of the operations that produced ``output``."""

    def __init__(self, output: Tensor):
        self.output = output
        self.nodes = _topological_order(output)

    @property
    def operations(self) -> List[Tensor]:
        return [node for node in self.nodes if node._op is not None]

    @property
    def leaves(self) -> List[Tensor]:
        return [node for node in self.nodes if node._op is None]

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        output = self.output
        if not output.requires_grad:
            return
        if seed is None:
            if output.size != 1:
                raise DimensionError(
                    f"backward without a seed needs a single-element output, got shape {output.shape}"
                )
            seed = np.ones_like(output.data)
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != output.data.shape:
            raise DimensionError(f"seed shape {seed.shape} does not match output shape {output.shape}")

        if output.is_leaf:
            output.accumulate_grad(seed)
            return

        adjoints: Dict[int, np.ndarray] = {id(output): seed}
        for node in reversed(self.nodes):
            if node.is_leaf:
                continue
            grad = adjoints.pop(id(node), None)
            if grad is None:
                continue
            primitive = get_primitive(node._op)
            input_grads = primitive.backward(
                grad, node.data, *(parent.data for parent in node._parents), **node._attrs
            )
            for parent, parent_grad in zip(node._parents, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if parent.is_leaf:
                    parent.accumulate_grad(parent_grad)
                elif id(parent) in adjoints:
                    adjoints[id(parent)] = adjoints[id(parent)] + parent_grad
                else:
                    adjoints[id(parent)] = np.asarray(parent_grad, dtype=np.float64)
