"""Define-by-run reverse-mode differentiation over float64 arrays.

Every primitive accepts plain ``numpy`` arrays as well as :class:`Tensor`
objects.  When none of the inputs is a tensor the primitive returns a plain
array, so numerical code written against these functions runs unchanged on
either backend.  Operations are recorded only while a :class:`Tape` is active
and at least one input requires a gradient.
"""

from __future__ import annotations

import threading

import numpy as np

_local = threading.local()

# Large finite offset used to exclude padded entries from max/softmax.
MASK_OFFSET = 1e30


class Tape:
    """Ordered record of primitive applications.

    Used as a context manager; nested tapes are allowed and the innermost one
    records.  Backward visits ``nodes`` in exact reverse recording order.
    """

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        _stack().append(self)
        return self

    def __exit__(self, *exc):
        _stack().pop()
        return False

    def __len__(self):
        return len(self.nodes)


def _stack():
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def active_tape() -> Tape | None:
    stack = _stack()
    return stack[-1] if stack else None


class Tensor:
    """A float64 array plus the bookkeeping needed for reverse mode."""

    __array_ufunc__ = None  # make numpy defer to our reflected operators
    __slots__ = ("value", "parents", "backward_fn", "requires_grad", "name")

    def __init__(self, value, requires_grad=False, name=None):
        value = np.array(value, dtype=np.float64)
        if not np.all(np.isfinite(value)):
            raise FloatingPointError(f"non-finite value in tensor {name or ''}".strip())
        self.value = value
        self.parents = ()
        self.backward_fn = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def numpy(self) -> np.ndarray:
        return self.value

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

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def value(x):
    """The raw array behind ``x`` (identity for arrays and scalars)."""
    return x.value if isinstance(x, Tensor) else x


def is_tensor(x) -> bool:
    return isinstance(x, Tensor)


def _any_tensor(*xs) -> bool:
    return any(isinstance(x, Tensor) for x in xs)


def _make(out, parents, backward_fn):
    tape = active_tape()
    needs = tape is not None and any(isinstance(p, Tensor) and p.requires_grad for p in parents)
    t = Tensor(out, requires_grad=needs)
    if needs:
        t.parents = parents
        t.backward_fn = backward_fn
        tape.nodes.append(t)
    return t


def unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    shape = tuple(shape)
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------- elementwise


def add(a, b):
    if not _any_tensor(a, b):
        return a + b
    return _make(value(a) + value(b), (a, b), lambda g: (g, g))


def sub(a, b):
    if not _any_tensor(a, b):
        return a - b
    return _make(value(a) - value(b), (a, b), lambda g: (g, -g))


def neg(a):
    if not _any_tensor(a):
        return -a
    return _make(-value(a), (a,), lambda g: (-g,))


def mul(a, b):
    if not _any_tensor(a, b):
        return a * b
    va, vb = value(a), value(b)
    return _make(va * vb, (a, b), lambda g: (g * vb, g * va))


def div(a, b):
    if not _any_tensor(a, b):
        return a / b
    va, vb = value(a), value(b)
    out = va / vb
    return _make(out, (a, b), lambda g: (g / vb, -g * out / vb))


def relu(x):
    """Positive part ``[x]^+``; the subgradient at 0 is 0."""
    if not _any_tensor(x):
        return np.maximum(x, 0.0)
    v = value(x)
    return _make(np.maximum(v, 0.0), (x,), lambda g: (g * (v > 0),))


positive_part = relu


def sigmoid(x):
    v = value(x)
    out = 0.5 * (1.0 + np.tanh(0.5 * v))
    if not _any_tensor(x):
        return out
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),))


def tanh(x):
    out = np.tanh(value(x))
    if not _any_tensor(x):
        return out
    return _make(out, (x,), lambda g: (g * (1.0 - out * out),))


def exp(x):
    out = np.exp(value(x))
    if not _any_tensor(x):
        return out
    return _make(out, (x,), lambda g: (g * out,))


def log(x):
    v = value(x)
    out = np.log(v)
    if not _any_tensor(x):
        return out
    return _make(out, (x,), lambda g: (g / v,))


# ------------------------------------------------------------------ structure


def matmul(a, b):
    """``a @ b`` with numpy semantics, including batched and vector cases."""
    if not _any_tensor(a, b):
        return a @ b
    va, vb = value(a), value(b)

    def backward(g):
        if vb.ndim == 1:
            ga = g[..., None] * vb
            gb = (va * g[..., None]).reshape(-1, vb.shape[0]).sum(axis=0)
            return ga, gb
        if va.ndim == 1:
            ga = (g[..., None, :] @ np.swapaxes(vb, -1, -2)).reshape(-1, va.shape[0]).sum(axis=0)
            gb = va[:, None] * g[..., None, :]
            return ga, unbroadcast(gb, vb.shape)
        if vb.ndim == 2:
            ga = g @ vb.T
            gb = va.reshape(-1, va.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            return ga, gb
        ga = g @ np.swapaxes(vb, -1, -2)
        gb = np.swapaxes(va, -1, -2) @ g
        return unbroadcast(ga, va.shape), unbroadcast(gb, vb.shape)

    return _make(va @ vb, (a, b), backward)


matvec = matmul


def reshape(x, shape):
    if not _any_tensor(x):
        return np.reshape(x, shape)
    v = value(x)
    return _make(v.reshape(shape), (x,), lambda g: (g.reshape(v.shape),))


def getitem(x, idx):
    v = value(x)
    if not _any_tensor(x):
        return v[idx]

    def backward(g):
        full = np.zeros_like(v)
        np.add.at(full, idx, g)
        return (full,)

    return _make(v[idx], (x,), backward)


slice_ = getitem


def concat(xs, axis=-1):
    xs = list(xs)
    vals = [np.asarray(value(x), dtype=np.float64) for x in xs]
    out = np.concatenate(vals, axis=axis)
    if not _any_tensor(*xs):
        return out
    bounds = np.cumsum([v.shape[axis] for v in vals])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(out, tuple(xs), backward)


def broadcast_to(x, shape):
    v = value(x)
    out = np.broadcast_to(v, shape).copy()
    if not _any_tensor(x):
        return out
    return _make(out, (x,), lambda g: (unbroadcast(g, v.shape),))


def sum_(x, axis=None, keepdims=False):
    v = value(x)
    out = np.sum(v, axis=axis, keepdims=keepdims)
    if not _any_tensor(x):
        return out

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, v.shape).copy(),)

    return _make(out, (x,), backward)


def max_over_axis(x, axis=-1, keepdims=False, mask=None):
    """Maximum along ``axis``; ties route the gradient to the first index.

    ``mask`` (0/1, broadcastable to ``x``) excludes padded entries.
    """
    v = value(x)
    vm = v if mask is None else v - MASK_OFFSET * (1.0 - mask)
    idx = np.expand_dims(np.argmax(vm, axis=axis), axis)
    out = np.take_along_axis(v, idx, axis=axis)
    if not keepdims:
        out = np.squeeze(out, axis=axis)
    if not _any_tensor(x):
        return out

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        full = np.zeros_like(v)
        np.put_along_axis(full, idx, g, axis=axis)
        return (full,)

    return _make(out, (x,), backward)


# ---------------------------------------------------------- neural primitives


def softmax(x, axis=-1, mask=None):
    v = value(x)
    z = v if mask is None else v - MASK_OFFSET * (1.0 - mask)
    e = np.exp(z - np.max(z, axis=axis, keepdims=True))
    if mask is not None:
        e = e * mask
    out = e / np.sum(e, axis=axis, keepdims=True)
    if not _any_tensor(x):
        return out

    def backward(g):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return _make(out, (x,), backward)


def layer_norm(x, axis=-1, eps=1e-10):
    """Standardise along ``axis`` (no affine part)."""
    v = value(x)
    mu = v.mean(axis=axis, keepdims=True)
    xc = v - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=axis, keepdims=True) + eps)
    out = xc * inv
    if not _any_tensor(x):
        return out

    def backward(g):
        gm = g.mean(axis=axis, keepdims=True)
        gym = (g * out).mean(axis=axis, keepdims=True)
        return (inv * (g - gm - out * gym),)

    return _make(out, (x,), backward)


def entropy(p, axis=-1):
    """Shannon entropy of simplex points, with ``0 log 0 = 0``."""
    v = value(p)
    pos = v > 0
    logv = np.log(np.where(pos, v, 1.0))
    out = -np.sum(v * logv, axis=axis)
    if not _any_tensor(p):
        return out

    def backward(g):
        return (np.where(pos, -(logv + 1.0), 0.0) * np.expand_dims(g, axis),)

    return _make(out, (p,), backward)


def normalize_or_uniform(xi, mask=None, axis=-1):
    """Regret-matching normalisation ``xi / ||xi||_1``.

    Rows whose sum is zero map to the uniform distribution over ``mask`` and
    carry no gradient.  ``xi`` must be elementwise non-negative.
    """
    v = value(xi)
    if mask is None:
        mask = np.ones_like(v)
    mask = np.broadcast_to(mask, v.shape)
    s = np.sum(v, axis=axis, keepdims=True)
    live = s > 0
    safe = np.where(live, s, 1.0)
    uniform = mask / np.sum(mask, axis=axis, keepdims=True)
    out = np.where(live, v / safe, uniform)
    if not _any_tensor(xi):
        return out

    def backward(g):
        inner = np.sum(g * out, axis=axis, keepdims=True)
        return (np.where(live, (g - inner) / safe, 0.0),)

    return _make(out, (xi,), backward)


# ------------------------------------------------------------------- backward


def backward(tape: Tape, loss: Tensor, wrt=None, extra=None):
    """Reverse sweep over ``tape`` starting from the scalar ``loss``.

    Returns a list of gradient arrays aligned with ``wrt`` (zeros for tensors
    the loss does not depend on).  Tensors listed in ``extra`` (intermediate
    nodes, e.g. reward vectors) have their adjoints returned as a second list.
    """
    if not isinstance(loss, Tensor) or loss.value.size != 1:
        raise ValueError("loss must be a scalar tensor")
    grads = {id(loss): np.ones_like(loss.value)}
    for node in reversed(tape.nodes):
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, gp in zip(node.parents, node.backward_fn(g)):
            if gp is None or not isinstance(parent, Tensor) or not parent.requires_grad:
                continue
            gp = unbroadcast(np.asarray(gp, dtype=np.float64), parent.value.shape)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + gp
            else:
                grads[key] = gp
    wrt = list(wrt or [])
    out = [grads.get(id(t), np.zeros_like(t.value)) for t in wrt]
    if extra is not None:
        return out, [grads.get(id(t), np.zeros_like(t.value)) for t in extra]
    return out
