"""LAS and Transformer decoders, optionally routed per language family."""

from __future__ import annotations

import numpy as np

from .. import autograd as ag
from ..autograd import Module, Parameter, glorot
from .layers import Linear, LayerNorm, LstmCell, MultiHeadAttention, causal_mask, sinusoid_positions


class AdditiveAttention(Module):
    """Multi-head additive (content-based) attention.

    Per head h: score_t = v_h . tanh(Wq q + Wk enc_t + b), weights softmaxed
    over encoder frames, context is the per-head value average, heads
    concatenated.
    """

    def __init__(self, query_dim, enc_dim, dim, heads, rng, dtype=np.float32):
        if dim % heads:
            raise ValueError(f"attention dim {dim} not divisible by {heads} heads")
        self.heads = heads
        self.head_dim = dim // heads
        self.wq = Linear(query_dim, dim, rng, bias=False, dtype=dtype)
        self.wk = Linear(enc_dim, dim, rng, bias=True, dtype=dtype)
        self.wv = Linear(enc_dim, dim, rng, bias=False, dtype=dtype)
        self.v = Parameter(glorot(rng, (1, dim), dtype))

    def precompute(self, enc_out):
        return self.wk(enc_out), self.wv(enc_out)

    def step(self, query, keys, values, enc_mask=None):
        """query (B,1,Dq); keys/values (B,T,dim) -> (context (B,1,dim), weights)."""
        e = ag.tanh(ag.add(self.wq(query), keys))
        ctx, weights = [], []
        for h in range(self.heads):
            lo, hi = h * self.head_dim, (h + 1) * self.head_dim
            vh = ag.slice_axis(self.v, -1, lo, hi)
            scores = ag.matmul(vh, ag.slice_axis(e, -1, lo, hi), transpose_b=True)
            if enc_mask is not None:
                scores = ag.add(scores, enc_mask)
            alpha = ag.softmax(scores)  # (B,1,T)
            ctx.append(ag.matmul(alpha, ag.slice_axis(values, -1, lo, hi)))
            weights.append(alpha.data[:, 0, :])
        return ag.concat(ctx, axis=-1), np.stack(weights, axis=1)


class LasDecoder(Module):
    """Projected-LSTM stack with additive attention and input feeding."""

    def __init__(self, num_layers, model_dim, hidden_dim, heads, enc_dim, vocab_size, rng, dtype=np.float32):
        self.model_dim = model_dim
        self.vocab_size = vocab_size
        self.embed = Parameter(glorot(rng, (vocab_size, model_dim), dtype))
        self.cells = [
            LstmCell(2 * model_dim if i == 0 else model_dim, hidden_dim, model_dim, rng, dtype)
            for i in range(num_layers)
        ]
        self.attention = AdditiveAttention(model_dim, enc_dim, model_dim, heads, rng, dtype)
        self.out_proj = Linear(2 * model_dim, vocab_size, rng, dtype=dtype)

    def initial_state(self, batch):
        dtype = self.embed.dtype
        states = [cell.initial_state(batch, dtype) for cell in self.cells]
        context = ag.Tensor(np.zeros((batch, 1, self.model_dim), dtype=dtype))
        return states, context

    def step(self, prev_ids, state, keys, values, enc_mask=None):
        """One decode step. prev_ids (B,1) ints -> (logits (B,1,V), state', attention)."""
        states, context = state
        x = ag.concat([ag.embedding(self.embed, np.asarray(prev_ids)), context], axis=-1)
        new_states = []
        for cell, cell_state in zip(self.cells, states):
            x, ns = cell(x, cell_state)
            new_states.append(ns)
        context, attn = self.attention.step(x, keys, values, enc_mask)
        logits = self.out_proj(ag.concat([x, context], axis=-1))
        return logits, (new_states, context), attn

    def __call__(self, targets_in, enc_out, enc_mask=None):
        """Teacher-forced logits (B,U,V) for input ids (B,U)."""
        targets_in = np.asarray(targets_in)
        if targets_in.ndim != 2 or targets_in.shape[1] < 1:
            raise ValueError(f"target ids must be (B, U>=1), got {targets_in.shape}")
        keys, values = self.attention.precompute(enc_out)
        state = self.initial_state(targets_in.shape[0])
        steps = []
        for u in range(targets_in.shape[1]):
            logits, state, _ = self.step(targets_in[:, u : u + 1], state, keys, values, enc_mask)
            steps.append(logits)
        return steps[0] if len(steps) == 1 else ag.concat(steps, axis=1)


class TransformerLayer(Module):
    def __init__(self, dim, hidden_dim, heads, enc_dim, rng, dtype=np.float32):
        self.self_norm = LayerNorm(dim, dtype)
        self.self_attn = MultiHeadAttention(dim, dim, dim, heads, rng, dtype)
        self.cross_norm = LayerNorm(dim, dtype)
        self.cross_attn = MultiHeadAttention(dim, enc_dim, dim, heads, rng, dtype)
        self.ffn_norm = LayerNorm(dim, dtype)
        self.ffn_up = Linear(dim, hidden_dim, rng, dtype=dtype)
        self.ffn_down = Linear(hidden_dim, dim, rng, dtype=dtype)

    def __call__(self, x, enc_out, self_mask, enc_mask=None):
        a = self.self_norm(x)
        x = ag.add(x, self.self_attn(a, a, self_mask))
        x = ag.add(x, self.cross_attn(self.cross_norm(x), enc_out, enc_mask))
        h = ag.relu(self.ffn_up(self.ffn_norm(x)))
        return ag.add(x, self.ffn_down(h))


class TransformerDecoder(Module):
    """Pre-norm transformer with masked self-attention and cross attention."""

    def __init__(self, num_layers, model_dim, hidden_dim, heads, enc_dim, vocab_size, rng, dtype=np.float32):
        self.model_dim = model_dim
        self.vocab_size = vocab_size
        self.embed = Parameter(glorot(rng, (vocab_size, model_dim), dtype))
        self.layers = [
            TransformerLayer(model_dim, hidden_dim, heads, enc_dim, rng, dtype)
            for _ in range(num_layers)
        ]
        self.final_norm = LayerNorm(model_dim, dtype)
        self.out_proj = Linear(model_dim, vocab_size, rng, dtype=dtype)

    def __call__(self, targets_in, enc_out, enc_mask=None):
        """Logits (B,U,V); position u sees targets <= u and the encoder only."""
        targets_in = np.asarray(targets_in)
        if targets_in.ndim != 2 or targets_in.shape[1] < 1:
            raise ValueError(f"target ids must be (B, U>=1), got {targets_in.shape}")
        u = targets_in.shape[1]
        dtype = self.embed.dtype
        x = ag.embedding(self.embed, targets_in)
        x = ag.add(x, ag.Tensor(sinusoid_positions(u, self.model_dim, dtype)))
        mask = causal_mask(u, dtype)
        for layer in self.layers:
            x = layer(x, enc_out, mask, enc_mask)
        return self.out_proj(self.final_norm(x))


def route(language, config):
    """Decoder instance for a language id: single -> 0, else family table."""
    if config.routing == "single":
        return 0
    if int(language) not in config.families:
        raise KeyError(f"language {language} has no family in the routing table")
    return config.families[int(language)]


class DecoderBank(Module):
    """One decoder per routing instance, sharing a config."""

    def __init__(self, config, enc_dim, vocab_size, rng, dtype=np.float32):
        self.config = config
        self.instances = {}
        for i in range(config.num_instances()):
            if config.kind == "las_lstm":
                dec = LasDecoder(
                    config.num_layers, config.model_dim, config.hidden_dim,
                    config.attention_heads, enc_dim, vocab_size, rng, dtype,
                )
            else:
                dec = TransformerDecoder(
                    config.num_layers, config.model_dim, config.hidden_dim,
                    config.attention_heads, enc_dim, vocab_size, rng, dtype,
                )
            self.instances[str(i)] = dec

    def route(self, language):
        return route(language, self.config)

    def instance_for(self, language):
        return self.instances[str(self.route(language))]
