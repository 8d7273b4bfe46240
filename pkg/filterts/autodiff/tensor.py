"""Dense complex tensors with reverse-mode differentiation.

Values are stored as two float64 buffers (real and imaginary part). Gradients follow
the split-real convention: every complex entry is two independent real coordinates,
and a leaf ends up holding ``(dL/dRe, dL/dIm)``.

Internally the backward pass carries one complex array per node,
``G = dL/dRe + 1j * dL/dIm``. For a holomorphic op ``y = f(a)`` the rule is
``G_a = G_y * conj(f'(a))``, which keeps every backward closure a one-liner.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from filterts.errors import ContractError, DimensionError

Backward = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tensor:
    """Immutable value plus optional gradient slots and a link to its producing op."""

    __slots__ = (
        "re",
        "im",
        "grad_re",
        "grad_im",
        "requires_grad",
        "real_only",
        "name",
        "_parents",
        "_backward",
        "_op",
    )

    def __init__(
        self,
        re,
        im=None,
        *,
        requires_grad: bool = False,
        real_only: bool = False,
        name: str | None = None,
    ):
        re = np.array(re, dtype=np.float64)
        im = np.zeros_like(re) if im is None else np.array(im, dtype=np.float64)
        if re.shape != im.shape:
            raise DimensionError(
                f"real part {re.shape} and imaginary part {im.shape} differ"
            )
        if real_only and np.any(im):
            raise ContractError(f"real-only tensor {name!r} got an imaginary part")
        self.re = re
        self.im = im
        self.requires_grad = requires_grad
        self.real_only = real_only
        self.name = name
        self.grad_re = np.zeros_like(re) if requires_grad else None
        self.grad_im = np.zeros_like(re) if requires_grad else None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Backward | None = None
        self._op = ""

    # -- construction -------------------------------------------------------

    @classmethod
    def from_complex(cls, z, **kwargs) -> Tensor:
        z = np.asarray(z, dtype=np.complex128)
        return cls(z.real, z.imag, **kwargs)

    @classmethod
    def parameter(cls, value, *, name: str, real_only: bool = False) -> Tensor:
        value = np.asarray(value)
        if np.iscomplexobj(value):
            return cls(value.real, value.imag, requires_grad=True, name=name)
        return cls(value, requires_grad=True, real_only=real_only, name=name)

    # -- views ----------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    @property
    def ndim(self) -> int:
        return self.re.ndim

    @property
    def size(self) -> int:
        return self.re.size

    @property
    def value(self) -> np.ndarray:
        return self.re + 1j * self.im

    @property
    def grad(self) -> np.ndarray | None:
        if self.grad_re is None:
            return None
        return self.grad_re + 1j * self.grad_im

    @property
    def is_real(self) -> bool:
        return not np.any(self.im)

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def detach(self) -> Tensor:
        return Tensor(self.re, self.im)

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad_re[...] = 0.0
            self.grad_im[...] = 0.0

    def __repr__(self) -> str:
        kind = "real" if self.is_real else "complex"
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}({kind}, shape={self.shape}, op={self._op or 'leaf'})"

    # -- operators ----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def conj(self) -> Tensor:
        return conj(self)

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        return reduce_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def backward(self) -> None:
        backward(self)


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return Tensor.from_complex(x)
    return Tensor(x)


def make_node(
    value: np.ndarray,
    parents: Sequence[Tensor],
    backward_fn: Backward,
    op: str,
    imag: np.ndarray | None = None,
) -> Tensor:
    """Wrap an op result; the graph link is kept only if a parent needs gradients."""
    if imag is None:
        value = np.asarray(value)
        out = Tensor(value.real, value.imag if np.iscomplexobj(value) else None)
    else:
        out = Tensor(value, imag)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    out._op = op
    return out


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over the axes that broadcasting expanded."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, length in enumerate(shape):
        if length == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


# -- elementwise --------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return make_node(
        a.re + b.re, (a, b), lambda g: (g, g), "add", imag=a.im + b.im
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return make_node(
        a.re - b.re, (a, b), lambda g: (g, -g), "sub", imag=a.im - b.im
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return make_node(-a.re, (a,), lambda g: (-g,), "neg", imag=-a.im)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    if a.is_real and b.is_real:
        value = a.re * b.re
    else:
        value = a.value * b.value

    def _backward(g):
        return g * np.conj(b.value), g * np.conj(a.value)

    return make_node(value, (a, b), _backward, "mul")


def conj_mul(a, b) -> Tensor:
    """``a * conj(b)``."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "conj_mul")

    def _backward(g):
        return g * b.value, a.value * np.conj(g)

    return make_node(a.value * np.conj(b.value), (a, b), _backward, "conj_mul")


def complex_elementwise(a, b, kind: str) -> Tensor:
    ops = {"add": add, "mul": mul, "conj_mul": conj_mul}
    if kind not in ops:
        raise ContractError(f"unknown elementwise kind {kind!r}, expected one of {list(ops)}")
    return ops[kind](a, b)


def conj(a) -> Tensor:
    a = as_tensor(a)
    return make_node(a.re, (a,), lambda g: (np.conj(g),), "conj", imag=-a.im)


# -- linear algebra -----------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs matrices, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul inner axes differ: {a.shape} @ {b.shape} ({a.shape[-1]} != {b.shape[-2]})"
        )
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul batch axes differ: {a.shape} @ {b.shape}")

    if a.is_real and b.is_real:
        value = a.re @ b.re
    else:
        value = a.value @ b.value

    def _backward(g):
        ga = g @ np.conj(np.swapaxes(b.value, -1, -2))
        gb = np.conj(np.swapaxes(a.value, -1, -2)) @ g
        return ga, gb

    return make_node(value, (a, b), _backward, "matmul")


# -- shape and reductions -------------------------------------------------------


def reduce_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)

    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).astype(np.complex128),)

    return make_node(
        a.re.sum(axis=axis, keepdims=keepdims),
        (a,),
        _backward,
        "sum",
        imag=a.im.sum(axis=axis, keepdims=keepdims),
    )


def reduce_mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return mul(reduce_sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return make_node(
        a.re.reshape(shape),
        (a,),
        lambda g: (g.reshape(a.shape),),
        "reshape",
        imag=a.im.reshape(shape),
    )


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(
        item is None or item is Ellipsis or isinstance(item, (int, np.integer, slice))
        for item in items
    )


def getitem(a, index) -> Tensor:
    a = as_tensor(a)
    basic = _is_basic_index(index)

    def _backward(g):
        full = np.zeros(a.shape, dtype=np.complex128)
        if basic:
            full[index] += g
        else:
            # fancy indices may repeat
            np.add.at(full, index, g)
        return (full,)

    return make_node(a.re[index], (a,), _backward, "slice", imag=a.im[index])


# -- backward pass --------------------------------------------------------------


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
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
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate dloss/dleaf into the grad slots of every trainable leaf."""
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.is_real:
        raise ContractError("backward needs a real-valued loss")
    if not loss.requires_grad:
        return

    pending: dict[int, np.ndarray] = {id(loss): np.ones(loss.shape, dtype=np.complex128)}
    for node in reversed(_topological_order(loss)):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad_re += g.real
            if not node.real_only:
                node.grad_im += g.imag
            continue
        for parent, parent_grad in zip(node._parents, node._backward(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            parent_grad = unbroadcast(np.asarray(parent_grad, dtype=np.complex128), parent.shape)
            key = id(parent)
            pending[key] = pending[key] + parent_grad if key in pending else parent_grad
