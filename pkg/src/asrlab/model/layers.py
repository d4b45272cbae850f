"""Shared building blocks; every forward is a composition of autograd primitives."""

from __future__ import annotations

import numpy as np

from .. import autograd as ag
from ..autograd import Module, Parameter, glorot

NEG_INF = -1e9  # additive mask value; exp underflows to exactly 0 after softmax shift


class Linear(Module):
    def __init__(self, in_dim, out_dim, rng, bias=True, dtype=np.float32, init="glorot"):
        if init == "zeros":
            w = np.zeros((in_dim, out_dim), dtype=dtype)
        else:
            w = glorot(rng, (in_dim, out_dim), dtype)
        self.w = Parameter(w)
        self.b = Parameter(np.zeros(out_dim, dtype=dtype)) if bias else None

    def __call__(self, x):
        y = ag.matmul(x, self.w)
        return ag.bias_add(y, self.b) if self.b is not None else y


class LayerNorm(Module):
    def __init__(self, dim, dtype=np.float32):
        self.gamma = Parameter(np.ones(dim, dtype=dtype))
        self.beta = Parameter(np.zeros(dim, dtype=dtype))

    def __call__(self, x):
        return ag.layer_norm(x, self.gamma, self.beta)


class GroupNorm(Module):
    def __init__(self, dim, num_groups, dtype=np.float32):
        self.num_groups = int(num_groups)
        self.gamma = Parameter(np.ones(dim, dtype=dtype))
        self.beta = Parameter(np.zeros(dim, dtype=dtype))

    def __call__(self, x):
        return ag.group_norm(x, self.gamma, self.beta, self.num_groups)


class FeedForward(Module):
    """norm -> expand -> swish -> contract; caller owns the residual."""

    def __init__(self, dim, expansion, rng, dtype=np.float32):
        self.norm = LayerNorm(dim, dtype)
        self.up = Linear(dim, dim * expansion, rng, dtype=dtype)
        self.down = Linear(dim * expansion, dim, rng, dtype=dtype)

    def __call__(self, x):
        return self.down(ag.swish(self.up(self.norm(x))))


class MultiHeadAttention(Module):
    """Scaled dot-product attention, queries (B,Tq,*) against keys (B,Tk,*).

    `mask`, when given, is added to the pre-softmax scores and must
    broadcast to (B, Tq, Tk); use NEG_INF entries to forbid positions.
    """

    def __init__(self, query_dim, kv_dim, dim, heads, rng, dtype=np.float32):
        if dim % heads:
            raise ValueError(f"attention dim {dim} not divisible by {heads} heads")
        self.heads = heads
        self.head_dim = dim // heads
        self.wq = Linear(query_dim, dim, rng, dtype=dtype)
        # no key bias: softmax scores are invariant to a constant key offset,
        # which would leave a parameter with identically zero gradient
        self.wk = Linear(kv_dim, dim, rng, bias=False, dtype=dtype)
        self.wv = Linear(kv_dim, dim, rng, dtype=dtype)
        self.wo = Linear(dim, dim, rng, dtype=dtype)

    def __call__(self, q_in, kv_in, mask=None):
        q, k, v = self.wq(q_in), self.wk(kv_in), self.wv(kv_in)
        scale = 1.0 / np.sqrt(self.head_dim)
        ctx = []
        for h in range(self.heads):
            lo, hi = h * self.head_dim, (h + 1) * self.head_dim
            qh = ag.slice_axis(q, -1, lo, hi)
            kh = ag.slice_axis(k, -1, lo, hi)
            vh = ag.slice_axis(v, -1, lo, hi)
            scores = ag.mul(ag.matmul(qh, kh, transpose_b=True), scale)
            if mask is not None:
                scores = ag.add(scores, mask)
            ctx.append(ag.matmul(ag.softmax(scores), vh))
        return self.wo(ag.concat(ctx, axis=-1))


class ConvModule(Module):
    """Pointwise GLU -> depthwise conv -> group norm -> swish -> pointwise.

    The depthwise convolution is what carries relative positional
    information, so no positional encodings appear anywhere else.
    """

    def __init__(self, dim, kernel, num_groups, rng, dtype=np.float32):
        self.norm = LayerNorm(dim, dtype)
        self.pw_in = Linear(dim, 2 * dim, rng, dtype=dtype)
        self.dw = Parameter(glorot(rng, (kernel, dim), dtype))
        self.gn = GroupNorm(dim, num_groups, dtype)
        self.pw_out = Linear(dim, dim, rng, dtype=dtype)

    def __call__(self, x, pad_mask=None):
        h = self.pw_in(self.norm(x))
        d = h.shape[-1] // 2
        h = ag.mul(ag.slice_axis(h, -1, 0, d), ag.sigmoid(ag.slice_axis(h, -1, d, 2 * d)))
        if pad_mask is not None:
            h = ag.mul(h, pad_mask)  # keep padding out of neighbouring frames
        h = ag.depthwise_conv1d(h, self.dw)
        return self.pw_out(ag.swish(self.gn(h)))


class Adapter(Module):
    """Residual bottleneck: h + up(relu(down(norm(h)))).

    The up-projection starts at zero so a fresh adapter is an exact
    identity, which is what extension warm starts rely on.
    """

    def __init__(self, dim, bottleneck, rng, dtype=np.float32):
        self.norm = LayerNorm(dim, dtype)
        self.down = Linear(dim, bottleneck, rng, dtype=dtype)
        self.up = Linear(bottleneck, dim, rng, dtype=dtype, init="zeros")

    def __call__(self, x):
        return ag.add(x, self.up(ag.relu(self.down(self.norm(x)))))


class LstmCell(Module):
    """LSTM with a projected recurrent state (hidden_dim cell, proj_dim output)."""

    def __init__(self, in_dim, hidden_dim, proj_dim, rng, dtype=np.float32):
        self.hidden_dim = hidden_dim
        self.wx = Parameter(glorot(rng, (in_dim, 4 * hidden_dim), dtype))
        self.wh = Parameter(glorot(rng, (proj_dim, 4 * hidden_dim), dtype))
        self.b = Parameter(np.zeros(4 * hidden_dim, dtype=dtype))
        self.proj = Linear(hidden_dim, proj_dim, rng, bias=False, dtype=dtype)
        # encourage remembering early in training
        self.b.data[hidden_dim : 2 * hidden_dim] = 1.0

    def initial_state(self, batch, dtype):
        c = ag.Tensor(np.zeros((batch, 1, self.hidden_dim), dtype=dtype))
        m = ag.Tensor(np.zeros((batch, 1, self.proj.w.shape[1]), dtype=dtype))
        return c, m

    def __call__(self, x, state):
        """x (B,1,in); state (c (B,1,H), m (B,1,P)) -> (m', state')."""
        c, m = state
        gates = ag.bias_add(ag.add(ag.matmul(x, self.wx), ag.matmul(m, self.wh)), self.b)
        h = self.hidden_dim
        i = ag.sigmoid(ag.slice_axis(gates, -1, 0, h))
        f = ag.sigmoid(ag.slice_axis(gates, -1, h, 2 * h))
        g = ag.tanh(ag.slice_axis(gates, -1, 2 * h, 3 * h))
        o = ag.sigmoid(ag.slice_axis(gates, -1, 3 * h, 4 * h))
        c_new = ag.add(ag.mul(f, c), ag.mul(i, g))
        m_new = self.proj(ag.mul(o, ag.tanh(c_new)))
        return m_new, (c_new, m_new)


def sinusoid_positions(length, dim, dtype=np.float32):
    """Fixed sinusoidal position table (length, dim)."""
    pos = np.arange(length)[:, None]
    idx = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2 * (idx // 2)) / dim)
    table = np.where(idx % 2 == 0, np.sin(angle), np.cos(angle))
    return table.astype(dtype)


def lengths_to_masks(lengths, max_len, dtype=np.float32):
    """(additive key mask (B,1,T), multiplicative pad mask (B,T,1))."""
    lengths = np.asarray(lengths)
    valid = np.arange(max_len)[None, :] < lengths[:, None]
    additive = np.where(valid, 0.0, NEG_INF).astype(dtype)[:, None, :]
    multiplicative = valid.astype(dtype)[:, :, None]
    return ag.Tensor(additive), ag.Tensor(multiplicative)


def causal_mask(length, dtype=np.float32):
    """(T,T) additive mask hiding positions > t."""
    m = np.triu(np.full((length, length), NEG_INF, dtype=dtype), k=1)
    return ag.Tensor(m)
