"""Dense float64 tensors with reverse-mode differentiation.

The engine is deliberately small: every op computes its value eagerly with
numpy and records a closure that pushes the upstream gradient to its parents.
``backward`` walks the graph in reverse topological order.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class DimensionError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class GraphError(RuntimeError):
    """Misuse of the differentiation graph (e.g. non-scalar loss)."""


def _as_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    return arr


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    # sum out dimensions that numpy broadcasting added or stretched
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = _as_array(data)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    def backward(self) -> None:
        """Populate ``.grad`` on every tensor that requires it."""
        if self.data.size != 1:
            raise GraphError(f"backward() needs a scalar loss, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                # leaf
                if node.requires_grad:
                    node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg

    # operator sugar
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
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> tuple:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# -- elementwise binary -------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, (a, b), bw)


def mul(a, b) -> Tensor:
    """Elementwise (Hadamard) product with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def bw(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), bw)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 1 or b.ndim < 1 or a.shape[-1] != b.shape[0 if b.ndim == 1 else -2]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} are not aligned")
    if b.ndim != 2 and b.ndim != 1:
        raise DimensionError(f"matmul: right operand must be 1-D or 2-D, got {b.shape}")

    def bw(g):
        if b.ndim == 1:
            ga = np.multiply.outer(g, b.data)
            gb = np.tensordot(a.data, g, axes=(tuple(range(a.ndim - 1)), tuple(range(g.ndim))))
            return ga, gb
        ga = g @ b.data.T
        a2 = a.data.reshape(-1, a.shape[-1])
        gb = a2.T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return _make(a.data @ b.data, (a, b), bw)


# -- elementwise unary --------------------------------------------------------

def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _make(y, (x,), lambda g: (g * (1.0 - y * y),))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(x) -> Tensor:
    """Logistic sigmoid, evaluated without overflow for large |x|."""
    x = as_tensor(x)
    y = _sigmoid(x.data)
    return _make(y, (x,), lambda g: (g * y * (1.0 - y),))


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return _make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def exp(x) -> Tensor:
    x = as_tensor(x)
    y = np.exp(x.data)
    return _make(y, (x,), lambda g: (g * y,))


def square(x) -> Tensor:
    x = as_tensor(x)
    return _make(x.data * x.data, (x,), lambda g: (2.0 * g * x.data,))


def softplus(x) -> Tensor:
    x = as_tensor(x)
    y = np.logaddexp(0.0, x.data)
    s = _sigmoid(x.data)
    return _make(y, (x,), lambda g: (g * s,))


# -- reductions ---------------------------------------------------------------

def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum(x, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001 - mirrors numpy
    x = as_tensor(x)
    axes = _norm_axis(axis, x.ndim)
    y = x.data.sum(axis=axes, keepdims=keepdims)

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(y, (x,), bw)


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    axes = _norm_axis(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


# -- structural ---------------------------------------------------------------

def take(x, index) -> Tensor:
    """Basic/advanced indexing (slicing) with scatter-add backward."""
    x = as_tensor(x)
    y = x.data[index]
    parts = index if isinstance(index, tuple) else (index,)
    basic = all(isinstance(p, (int, slice, type(None), type(Ellipsis))) for p in parts)

    def bw(g):
        out = np.zeros_like(x.data)
        if basic:
            out[index] = g  # basic indexing never repeats an element
        else:
            np.add.at(out, index, g)
        return (out,)

    return _make(np.array(y, copy=True), (x,), bw)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        y = x.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}") from None
    return _make(y, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x, axes=None) -> Tensor:
    x = as_tensor(x)
    y = np.transpose(x.data, axes)
    inv = None if axes is None else np.argsort(axes)
    return _make(y, (x,), lambda g: (np.transpose(g, inv),))


def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    if not ts:
        raise DimensionError("concat: nothing to concatenate")
    try:
        y = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise DimensionError(
            "concat: incompatible shapes " + ", ".join(str(t.shape) for t in ts)
        ) from None
    ax = axis % y.ndim
    bounds = np.cumsum([t.shape[ax] for t in ts])[:-1]

    def bw(g):
        return tuple(np.split(g, bounds, axis=ax))

    return _make(y, ts, bw)


def conv1d(x, kernel, bias=None) -> Tensor:
    """Valid 1-D cross-correlation with stride 1.

    ``x`` is (batch, in_channels, length) or a bare (length,) signal;
    ``kernel`` is (out_channels, in_channels, width) or a bare (width,) filter.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    squeeze = x.ndim == 1 and kernel.ndim == 1
    xd = x.data.reshape(1, 1, -1) if x.ndim == 1 else x.data
    kd = kernel.data.reshape(1, 1, -1) if kernel.ndim == 1 else kernel.data
    if xd.ndim != 3 or kd.ndim != 3 or xd.shape[1] != kd.shape[1]:
        raise DimensionError(f"conv1d: input {x.shape} and kernel {kernel.shape} are incompatible")
    width = kd.shape[2]
    length = xd.shape[2]
    if width > length:
        raise DimensionError(f"conv1d: kernel width {width} exceeds input length {length} (input {x.shape})")
    out_len = length - width + 1
    # cols: (B, out_len, Cin, width)
    cols = sliding_window_view(xd, width, axis=2).transpose(0, 2, 1, 3)
    b, cin = xd.shape[0], xd.shape[1]
    cols2 = cols.reshape(b, out_len, cin * width)
    k2 = kd.reshape(kd.shape[0], cin * width)
    y = (cols2 @ k2.T).transpose(0, 2, 1)  # (B, Cout, out_len)
    parents = [x, kernel]
    if bias is not None:
        bias = as_tensor(bias)
        y = y + bias.data.reshape(1, -1, 1)
        parents.append(bias)

    def bw(g):
        g3 = g.reshape(1, 1, -1) if squeeze else g
        gt = g3.transpose(0, 2, 1)  # (B, out_len, Cout)
        gk = np.einsum("bto,btc->oc", gt, cols2).reshape(kd.shape)
        gcols = (gt @ k2).reshape(b, out_len, cin, width)
        gx = np.zeros_like(xd)
        for j in range(width):
            gx[:, :, j:j + out_len] += gcols[:, :, :, j].transpose(0, 2, 1)
        grads = [gx.reshape(x.shape), gk.reshape(kernel.shape)]
        if bias is not None:
            grads.append(g3.sum(axis=(0, 2)).reshape(bias.shape))
        return tuple(grads)

    if squeeze:
        y = y.reshape(-1)
    return _make(y, parents, bw)


# -- losses -------------------------------------------------------------------

def mse(pred, target) -> Tensor:
    return mean(square(sub(pred, target)))
