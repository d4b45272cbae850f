"""Reverse-mode automatic differentiation over numpy arrays.

The primitive set is deliberately closed: matrix multiply, bias add,
elementwise add/multiply, sigmoid, swish, relu, tanh, softmax (last axis),
layer/group normalization, 1-D depthwise convolution, embedding lookup,
concatenation, slicing, and mean-pooling, plus a fused
softmax-cross-entropy loss. Every model layer in this package is a
composition of these.

Graphs are built define-by-run: each op records its parents and a closure
that routes the upstream gradient to them. `Tensor.backward` walks the
graph in reverse topological order.
"""

from __future__ import annotations

import contextlib

import numpy as np


class ShapeError(ValueError):
    """Raised when an op's operand shapes are incompatible."""


class NumericError(ArithmeticError):
    """Raised when a non-finite value is detected in forward or backward."""


_grad_enabled = True
_anomaly = False


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (evaluation / decoding)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


@contextlib.contextmanager
def anomaly_detection():
    """Check every op's output and gradient for non-finite values."""
    global _anomaly
    prev = _anomaly
    _anomaly = True
    try:
        yield
    finally:
        _anomaly = prev


class Tensor:
    """A numpy array plus an optional gradient and graph linkage."""

    __slots__ = ("data", "grad", "requires_grad", "name", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.op = None
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data, requires_grad=False, name=self.name)

    def backward(self, seed=None):
        """Backpropagate from this tensor.

        `seed` defaults to 1 for scalars; non-scalar roots require an
        explicit seed gradient of the same shape.
        """
        if seed is None:
            if self.data.ndim != 0:
                raise ValueError(
                    "backward on a non-scalar tensor requires a seed gradient"
                )
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(seed, dtype=self.data.dtype)
            if seed.shape != self.data.shape:
                raise ShapeError(
                    f"backward seed shape {seed.shape} does not match tensor shape {self.data.shape}"
                )

        order = _toposort(self)
        self.grad = seed if self.grad is None else self.grad + seed
        for node in order:
            if node._backward is None or node.grad is None:
                continue
            node._backward(node.grad)
            if _anomaly:
                for p in node._parents:
                    if p.grad is not None and not np.all(np.isfinite(p.grad)):
                        raise NumericError(
                            f"non-finite gradient produced by primitive {node.op!r}"
                        )

    # Operator sugar; the named functions below are the actual primitives.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _toposort(root):
    """Reverse topological order, iterative (graphs can be 1000s deep)."""
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return list(reversed(order))


def _as_tensor(x, like=None):
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _make(op, data, parents, backward):
    """Assemble an op's output tensor, recording the graph if enabled."""
    if _anomaly and not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite output from primitive {op!r}")
    track = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=track)
    if track:
        out.op = op
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _accum(t, g):
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def matmul(a, b, transpose_a=False, transpose_b=False):
    """a (..., M, K) @ b (..., K, N) -> (..., M, N); leading dims broadcast."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(
            f"matmul requires rank >= 2 operands, got {a.data.shape} and {b.data.shape}"
        )
    A = np.swapaxes(a.data, -1, -2) if transpose_a else a.data
    B = np.swapaxes(b.data, -1, -2) if transpose_b else b.data
    if A.shape[-1] != B.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.data.shape} x {b.data.shape}"
            f" (transpose_a={transpose_a}, transpose_b={transpose_b})"
        )
    out = np.matmul(A, B)

    def backward(g):
        if a.requires_grad:
            dA = np.matmul(g, np.swapaxes(B, -1, -2))
            da = np.swapaxes(dA, -1, -2) if transpose_a else dA
            _accum(a, _unbroadcast(da, a.data.shape))
        if b.requires_grad:
            dB = np.matmul(np.swapaxes(A, -1, -2), g)
            db = np.swapaxes(dB, -1, -2) if transpose_b else dB
            _accum(b, _unbroadcast(db, b.data.shape))

    return _make("matmul", out, (a, b), backward)


def bias_add(x, b):
    """x (..., D) + b (D,)."""
    x, b = _as_tensor(x), _as_tensor(b)
    if b.data.ndim != 1 or x.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"bias_add expects bias (D,) matching x (..., D), got {x.data.shape} and {b.data.shape}")
    out = x.data + b.data

    def backward(g):
        _accum(x, g)
        if b.requires_grad:
            _accum(b, g.reshape(-1, g.shape[-1]).sum(axis=0))

    return _make("bias_add", out, (x, b), backward)


def add(a, b):
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add operands do not broadcast: {a.data.shape} and {b.data.shape}") from None

    def backward(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    return _make("add", out, (a, b), backward)


def mul(a, b):
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul operands do not broadcast: {a.data.shape} and {b.data.shape}") from None

    def backward(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _make("mul", out, (a, b), backward)


def _sigmoid(x):
    # Piecewise form avoids overflow in exp for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x):
    x = _as_tensor(x)
    y = _sigmoid(x.data)

    def backward(g):
        _accum(x, g * y * (1.0 - y))

    return _make("sigmoid", y, (x,), backward)


def swish(x):
    """x * sigmoid(x)."""
    x = _as_tensor(x)
    s = _sigmoid(x.data)
    y = x.data * s

    def backward(g):
        _accum(x, g * (s + x.data * s * (1.0 - s)))

    return _make("swish", y, (x,), backward)


def relu(x):
    x = _as_tensor(x)
    y = np.maximum(x.data, 0)

    def backward(g):
        _accum(x, g * (x.data > 0))

    return _make("relu", y, (x,), backward)


def tanh(x):
    x = _as_tensor(x)
    y = np.tanh(x.data)

    def backward(g):
        _accum(x, g * (1.0 - y * y))

    return _make("tanh", y, (x,), backward)


def softmax(x):
    """Softmax over the last axis, numerically stabilized."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * y).sum(axis=-1, keepdims=True)
        _accum(x, y * (g - inner))

    return _make("softmax", y, (x,), backward)


def layer_norm(x, gamma, beta, eps=1e-6):
    """Normalize the last axis to zero mean / unit variance, then scale+shift."""
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    d = x.data.shape[-1]
    if gamma.data.shape != (d,) or beta.data.shape != (d,):
        raise ShapeError(
            f"layer_norm scale/shift must be ({d},), got {gamma.data.shape} and {beta.data.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    y = xhat * gamma.data + beta.data

    def backward(g):
        if x.requires_grad:
            gy = g * gamma.data
            m1 = gy.mean(axis=-1, keepdims=True)
            m2 = (gy * xhat).mean(axis=-1, keepdims=True)
            _accum(x, (gy - m1 - xhat * m2) * inv)
        if gamma.requires_grad:
            _accum(gamma, (g * xhat).reshape(-1, d).sum(axis=0))
        if beta.requires_grad:
            _accum(beta, g.reshape(-1, d).sum(axis=0))

    return _make("layer_norm", y, (x, gamma, beta), backward)


def group_norm(x, gamma, beta, num_groups, eps=1e-6):
    """Per-position normalization within `num_groups` channel groups.

    With num_groups=1 this reduces to layer_norm. Statistics are computed
    over each group of the feature axis independently at every position;
    no batch or time pooling is involved.
    """
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    d = x.data.shape[-1]
    if d % num_groups != 0:
        raise ShapeError(f"group_norm: {d} features not divisible into {num_groups} groups")
    if gamma.data.shape != (d,) or beta.data.shape != (d,):
        raise ShapeError(
            f"group_norm scale/shift must be ({d},), got {gamma.data.shape} and {beta.data.shape}"
        )
    gshape = x.data.shape[:-1] + (num_groups, d // num_groups)
    xg = x.data.reshape(gshape)
    mu = xg.mean(axis=-1, keepdims=True)
    var = xg.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mu) * inv).reshape(x.data.shape)
    y = xhat * gamma.data + beta.data

    def backward(g):
        if x.requires_grad:
            gy = (g * gamma.data).reshape(gshape)
            xh = xhat.reshape(gshape)
            m1 = gy.mean(axis=-1, keepdims=True)
            m2 = (gy * xh).mean(axis=-1, keepdims=True)
            _accum(x, ((gy - m1 - xh * m2) * inv).reshape(x.data.shape))
        if gamma.requires_grad:
            _accum(gamma, (g * xhat).reshape(-1, d).sum(axis=0))
        if beta.requires_grad:
            _accum(beta, g.reshape(-1, d).sum(axis=0))

    return _make("group_norm", y, (x, gamma, beta), backward)


def depthwise_conv1d(x, w):
    """Per-channel 1-D convolution along time with same padding.

    x (B, T, D) or (T, D); w (K, D) with K odd. out[..., t, d] =
    sum_k x[..., t + k - K//2, d] * w[k, d], zero padded at the edges.
    """
    x, w = _as_tensor(x), _as_tensor(w)
    if w.data.ndim != 2 or w.data.shape[0] % 2 != 1:
        raise ShapeError(f"depthwise_conv1d kernel must be (K odd, D), got {w.data.shape}")
    if x.data.ndim not in (2, 3) or x.data.shape[-1] != w.data.shape[1]:
        raise ShapeError(
            f"depthwise_conv1d expects x (..., T, D={w.data.shape[1]}), got {x.data.shape}"
        )
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    k = w.data.shape[0]
    pad = k // 2
    xp = np.pad(xd, ((0, 0), (pad, pad), (0, 0)))
    # windows[b, t, d, k] = xp[b, t + k, d]
    windows = np.lib.stride_tricks.sliding_window_view(xp, k, axis=1)
    out = np.einsum("btdk,kd->btd", windows, w.data)
    if squeeze:
        out = out[0]

    def backward(g):
        gd = g[None] if squeeze else g
        if w.requires_grad:
            _accum(w, np.einsum("btd,btdk->kd", gd, windows))
        if x.requires_grad:
            gp = np.pad(gd, ((0, 0), (pad, pad), (0, 0)))
            gwin = np.lib.stride_tricks.sliding_window_view(gp, k, axis=1)
            dx = np.einsum("btdk,kd->btd", gwin, w.data[::-1])
            _accum(x, dx[0] if squeeze else dx)

    return _make("depthwise_conv1d", out, (x, w), backward)


def embedding(table, ids):
    """table (V, D) gathered by integer array ids (...) -> (..., D)."""
    table = _as_tensor(table)
    ids = np.asarray(ids)
    if not np.issubdtype(ids.dtype, np.integer):
        raise ShapeError("embedding ids must be integers")
    if table.data.ndim != 2:
        raise ShapeError(f"embedding table must be (V, D), got {table.data.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise ShapeError(
            f"embedding id out of range [0, {table.data.shape[0]}): {int(ids.min())}..{int(ids.max())}"
        )
    out = table.data[ids]

    def backward(g):
        if table.requires_grad:
            dt = np.zeros_like(table.data)
            np.add.at(dt, ids, g)
            _accum(table, dt)

    return _make("embedding", out, (table,), backward)


def concat(tensors, axis=-1):
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat of an empty sequence")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(
            f"concat shapes incompatible along axis {axis}: {[t.data.shape for t in tensors]}"
        ) from None
    ax = axis if axis >= 0 else out.ndim + axis
    sizes = [t.data.shape[ax] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=ax)):
            _accum(t, piece)

    return _make("concat", out, tuple(tensors), backward)


def slice_axis(x, axis, start, stop, step=1):
    """Basic slice along one axis; the axis is kept."""
    x = _as_tensor(x)
    ax = axis if axis >= 0 else x.data.ndim + axis
    if ax < 0 or ax >= x.data.ndim:
        raise ShapeError(f"slice_axis axis {axis} invalid for shape {x.data.shape}")
    idx = tuple([slice(None)] * ax + [slice(start, stop, step)])
    out = x.data[idx]

    def backward(g):
        dx = np.zeros_like(x.data)
        dx[idx] = g
        _accum(x, dx)

    return _make("slice", out, (x,), backward)


def index_axis(x, axis, i):
    """Take a single index along an axis, dropping that axis."""
    x = _as_tensor(x)
    ax = axis if axis >= 0 else x.data.ndim + axis
    if ax < 0 or ax >= x.data.ndim:
        raise ShapeError(f"index_axis axis {axis} invalid for shape {x.data.shape}")
    n = x.data.shape[ax]
    if not -n <= i < n:
        raise ShapeError(f"index_axis index {i} out of range for axis of extent {n}")
    out = np.take(x.data, i, axis=ax)

    def backward(g):
        dx = np.zeros_like(x.data)
        idx = tuple([slice(None)] * ax + [i])
        dx[idx] = g
        _accum(x, dx)

    return _make("slice", out, (x,), backward)


def mean_pool(x, axis, keepdims=False):
    x = _as_tensor(x)
    ax = axis if axis >= 0 else x.data.ndim + axis
    if ax < 0 or ax >= x.data.ndim:
        raise ShapeError(f"mean_pool axis {axis} invalid for shape {x.data.shape}")
    n = x.data.shape[ax]
    out = x.data.mean(axis=ax, keepdims=keepdims)

    def backward(g):
        gg = g if keepdims else np.expand_dims(g, ax)
        _accum(x, np.broadcast_to(gg, x.data.shape) / n)

    return _make("mean_pool", out, (x,), backward)


def softmax_cross_entropy(logits, labels, mask=None):
    """Mean token-level cross entropy with integrated softmax.

    logits (..., V); labels integer (...); mask, when given, weights each
    position (typically 1 for real tokens, 0 for padding) and the loss is
    sum(nll * mask) / sum(mask). Fused so the backward is the numerically
    benign softmax-minus-onehot form.
    """
    logits = _as_tensor(logits)
    labels = np.asarray(labels)
    v = logits.data.shape[-1]
    if labels.shape != logits.data.shape[:-1]:
        raise ShapeError(
            f"cross-entropy labels shape {labels.shape} does not match logits {logits.data.shape}"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= v):
        raise ShapeError(f"cross-entropy label out of range [0, {v})")
    if mask is None:
        mask = np.ones(labels.shape, dtype=logits.data.dtype)
    else:
        mask = np.asarray(mask, dtype=logits.data.dtype)
        if mask.shape != labels.shape:
            raise ShapeError(f"cross-entropy mask shape {mask.shape} does not match labels {labels.shape}")
    denom = mask.sum()
    if denom <= 0:
        raise ShapeError("cross-entropy mask selects no positions")

    m = logits.data.max(axis=-1, keepdims=True)
    e = np.exp(logits.data - m)
    z = e.sum(axis=-1, keepdims=True)
    probs = e / z
    lse = np.squeeze(m + np.log(z), axis=-1)
    picked = np.take_along_axis(logits.data, labels[..., None], axis=-1)[..., 0]
    nll = lse - picked
    loss = np.asarray((nll * mask).sum() / denom, dtype=logits.data.dtype)

    def backward(g):
        if logits.requires_grad:
            onehot = np.zeros_like(probs)
            np.put_along_axis(onehot, labels[..., None], 1.0, axis=-1)
            _accum(logits, (probs - onehot) * (mask / denom)[..., None] * g)

    return _make("softmax_cross_entropy", loss, (logits,), backward)


def token_nll(logits, labels):
    """Per-position negative log-likelihood, no graph (metrics only)."""
    logits = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    labels = np.asarray(labels)
    m = logits.max(axis=-1, keepdims=True)
    lse = np.squeeze(m + np.log(np.exp(logits - m).sum(axis=-1, keepdims=True)), axis=-1)
    picked = np.take_along_axis(logits, labels[..., None], axis=-1)[..., 0]
    return lse - picked
