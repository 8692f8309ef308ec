"""Dense tensors with tape-based reverse-mode differentiation.

A :class:`Tensor` wraps a numpy array. Operations on tensors that require
gradients record their parents and a local backward rule; :meth:`Tensor.backward`
walks the recorded graph once in reverse topological order.

All arithmetic stays in the dtype of the operands, so a graph built from
``float32`` leaves is evaluated entirely in single precision.
"""

from __future__ import annotations

import contextlib

import numpy as np

from flowguard.errors import ContractError, DimensionError

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled():
    return _grad_enabled


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    ndim_extra = grad.ndim - len(shape)
    if ndim_extra > 0:
        grad = grad.sum(axis=tuple(range(ndim_extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad=False, name=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if arr.dtype.kind in "biu":
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None
        self.op = "leaf"

    # -- basic properties -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self):
        return len(self.data)

    # -- graph construction -----------------------------------------------
    def _const(self, value):
        if isinstance(value, Tensor):
            return value
        return Tensor(np.asarray(value, dtype=self.data.dtype))

    @staticmethod
    def _make(data, parents, backward, op):
        out = Tensor(data)
        out.op = op
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        other = self._const(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return Tensor._make(a.data + b.data, (a, b), backward, "add")

    __radd__ = __add__

    def __sub__(self, other):
        other = self._const(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

        return Tensor._make(a.data - b.data, (a, b), backward, "sub")

    def __rsub__(self, other):
        return self._const(other) - self

    def __mul__(self, other):
        other = self._const(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

        return Tensor._make(a.data * b.data, (a, b), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._const(other)
        a, b = self, other

        def backward(g):
            ga = g / b.data
            gb = -g * a.data / (b.data * b.data)
            return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

        return Tensor._make(a.data / b.data, (a, b), backward, "div")

    def __rtruediv__(self, other):
        return self._const(other) / self

    def __neg__(self):
        a = self
        return Tensor._make(-a.data, (a,), lambda g: (-g,), "neg")

    def __pow__(self, exponent):
        if isinstance(exponent, Tensor):
            raise TypeError("only constant exponents are supported")
        a = self
        p = np.asarray(exponent, dtype=a.dtype)

        def backward(g):
            return (g * p * a.data ** (p - 1),)

        return Tensor._make(a.data**p, (a,), backward, "pow")

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        a = self

        def backward(g):
            full = np.zeros_like(a.data)
            np.add.at(full, index, g)
            return (full,)

        return Tensor._make(a.data[index], (a,), backward, "getitem")

    # -- reductions / reshaping ------------------------------------------------
    def sum(self, axis=None, keepdims=False):
        a = self

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, a.shape).copy(),)

        return Tensor._make(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward, "sum")

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    @property
    def T(self):
        a = self
        return Tensor._make(a.data.T, (a,), lambda g: (g.T,), "transpose")

    def reshape(self, *shape):
        a = self
        return Tensor._make(
            a.data.reshape(*shape), (a,), lambda g: (g.reshape(a.shape),), "reshape"
        )

    def take(self, indices, axis=1):
        """Select entries along ``axis`` (used for coupling masks)."""
        a = self
        indices = np.asarray(indices, dtype=np.intp)

        def backward(g):
            full = np.zeros_like(a.data)
            idx = [slice(None)] * a.ndim
            idx[axis] = indices
            full[tuple(idx)] += g
            return (full,)

        return Tensor._make(np.take(a.data, indices, axis=axis), (a,), backward, "take")

    # -- elementwise functions ---------------------------------------------------
    def tanh(self):
        a = self
        y = np.tanh(a.data)
        return Tensor._make(y, (a,), lambda g: (g * (1 - y * y),), "tanh")

    def sigmoid(self):
        a = self
        y = _sigmoid(a.data)
        return Tensor._make(y, (a,), lambda g: (g * y * (1 - y),), "sigmoid")

    def log_sigmoid(self):
        a = self
        y = -np.logaddexp(np.zeros((), dtype=a.dtype), -a.data)
        return Tensor._make(y, (a,), lambda g: (g * _sigmoid(-a.data),), "log_sigmoid")

    def exp(self):
        a = self
        y = np.exp(a.data)
        return Tensor._make(y, (a,), lambda g: (g * y,), "exp")

    def log(self):
        a = self
        return Tensor._make(np.log(a.data), (a,), lambda g: (g / a.data,), "log")

    def abs(self):
        a = self
        return Tensor._make(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),), "abs")

    def relu(self):
        a = self
        mask = a.data > 0
        return Tensor._make(a.data * mask, (a,), lambda g: (g * mask,), "relu")

    def leaky_relu(self, slope=0.1):
        a = self
        factor = np.where(a.data > 0, 1.0, slope).astype(a.dtype)
        return Tensor._make(a.data * factor, (a,), lambda g: (g * factor,), "leaky_relu")

    def softplus(self):
        a = self
        y = np.logaddexp(np.zeros((), dtype=a.dtype), a.data)
        return Tensor._make(y, (a,), lambda g: (g * _sigmoid(a.data),), "softplus")

    def minimum(self, bound):
        """Elementwise ``min(self, bound)`` for a constant ``bound``."""
        a = self
        keep = a.data < bound
        y = np.where(keep, a.data, np.asarray(bound, dtype=a.dtype))
        return Tensor._make(y, (a,), lambda g: (g * keep,), "minimum")

    # -- differentiation -----------------------------------------------------------
    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every reachable leaf."""
        if grad is None:
            if self.data.size != 1:
                raise ContractError(
                    f"backward() needs a scalar loss, got shape {self.shape}"
                )
            grad = np.ones_like(self.data)
        order = _topological_order(self)
        grads = {id(self): np.asarray(grad, dtype=self.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


def _sigmoid(x):
    # branch-free stable logistic
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1 / (1 + e), e / (1 + e))


def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        if dtype is not None and x.dtype != dtype:
            return Tensor(x.data.astype(dtype))
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor._make(a.data @ b.data, (a, b), backward, "matmul")


def concat(tensors, axis=1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._make(data, tuple(tensors), backward, "concat")


def scatter_columns(parts, index_sets, width):
    """Inverse of ``take``: place column blocks back at their indices."""
    order = np.concatenate([np.asarray(ix, dtype=np.intp) for ix in index_sets])
    inverse = np.empty(width, dtype=np.intp)
    inverse[order] = np.arange(width)
    return concat(parts, axis=1).take(inverse, axis=1)


class Graph:
    """Named leaf parameters plus the tape recorded while using them."""

    def __init__(self, params):
        self.leaves = {
            name: Tensor(value, requires_grad=True, name=name) for name, value in params.items()
        }

    def __getitem__(self, name):
        return self.leaves[name]

    def backward(self, loss):
        return backward(self, loss)


def backward(graph, loss):
    """Gradient of scalar ``loss`` with respect to every leaf of ``graph``.

    Leaves that ``loss`` does not depend on get zero gradients.
    """
    if not isinstance(loss, Tensor) or loss.data.size != 1:
        shape = loss.shape if isinstance(loss, Tensor) else type(loss).__name__
        raise ContractError(f"loss must be a scalar tensor, got {shape}")
    for leaf in graph.leaves.values():
        leaf.grad = None
    if loss.requires_grad:
        loss.backward()
    return {
        name: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data))
        for name, leaf in graph.leaves.items()
    }
