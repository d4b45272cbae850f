"""Conformer encoder: 4 layers, time stacking, 1 wide layer, projection, rest.

Layout per config num_layers = N (N >= 5):
  input projection -> 4 layers at D -> time_stack (2x reduction, width 2D)
  -> 1 layer at 2D -> projection 2D -> D -> N-5 layers at D.
Language conditioning is either a one-hot block appended to the input
features (bias_concat) or residual adapters after every layer
(per_language_adapter / shared_adapter), or nothing.
"""

from __future__ import annotations

import numpy as np

from .. import autograd as ag
from ..autograd import Module
from .layers import Adapter, ConvModule, FeedForward, Linear, LayerNorm, MultiHeadAttention, lengths_to_masks


def time_stack(h, lengths=None):
    """(B,T,D) -> (B,ceil(T/2),2D); frame i = concat(h[2i-1], h[2i]), h[-1]=0.

    Returns (stacked, new_lengths). Lengths shrink to ceil(len/2).
    """
    b, t, d = h.shape
    zeros = ag.Tensor(np.zeros((b, 1, d), dtype=h.data.dtype))
    left_all = ag.concat([zeros, ag.slice_axis(h, 1, 0, t - 1)], axis=1) if t > 1 else zeros
    left = ag.slice_axis(left_all, 1, 0, t, 2)
    right = ag.slice_axis(h, 1, 0, t, 2)
    stacked = ag.concat([left, right], axis=-1)
    if lengths is None:
        return stacked, None
    return stacked, -(-np.asarray(lengths) // 2)


class ConformerLayer(Module):
    """Macaron FFN / self-attention / conv / FFN with residuals, then norm."""

    def __init__(self, dim, heads, kernel, expansion, num_groups, rng, dtype=np.float32):
        self.ffn1 = FeedForward(dim, expansion, rng, dtype)
        self.attn_norm = LayerNorm(dim, dtype)
        self.attn = MultiHeadAttention(dim, dim, dim, heads, rng, dtype)
        self.conv = ConvModule(dim, kernel, num_groups, rng, dtype)
        self.ffn2 = FeedForward(dim, expansion, rng, dtype)
        self.out_norm = LayerNorm(dim, dtype)

    def __call__(self, x, attn_mask=None, pad_mask=None):
        x = ag.add(x, ag.mul(self.ffn1(x), 0.5))
        a = self.attn_norm(x)
        x = ag.add(x, self.attn(a, a, attn_mask))
        x = ag.add(x, self.conv(x, pad_mask))
        x = ag.add(x, ag.mul(self.ffn2(x), 0.5))
        return self.out_norm(x)


class ConformerEncoder(Module):
    def __init__(self, config, input_dim, rng, dtype=np.float32):
        if config.num_layers < 5:
            raise ValueError(
                f"the three-block layout needs >= 5 layers, got {config.num_layers}"
            )
        self.config = config
        d = config.model_dim
        in_dim = input_dim
        if config.conditioning == "bias_concat":
            in_dim += config.language_vector_dim
        self.input_dim = input_dim
        self.input_proj = Linear(in_dim, d, rng, dtype=dtype)

        def layer(width):
            return ConformerLayer(
                width,
                config.attention_heads,
                config.conv_kernel,
                config.ffn_expansion,
                config.num_groups,
                rng,
                dtype,
            )

        self.block1 = [layer(d) for _ in range(4)]
        self.block2 = layer(2 * d)
        self.block2_proj = Linear(2 * d, d, rng, dtype=dtype)
        self.block3 = [layer(d) for _ in range(config.num_layers - 5)]

        widths = [d] * 4 + [2 * d] + [d] * (config.num_layers - 5)
        if config.conditioning == "per_language_adapter":
            self.adapters = {
                str(lang): [self._adapter(w, rng, dtype) for w in widths]
                for lang in range(config.num_languages)
            }
        elif config.conditioning == "shared_adapter":
            self.adapters = {"shared": [self._adapter(w, rng, dtype) for w in widths]}
        else:
            self.adapters = {}

    def _adapter(self, width, rng, dtype):
        # bottleneck scales with layer width so the wide block keeps the ratio
        b = max(self.config.adapter_bottleneck * width // self.config.model_dim, 1)
        return Adapter(width, b, rng, dtype)

    def adapter_forward(self, h, language_ids, site):
        """Apply the language-selected (or shared) adapter at layer index `site`.

        Mixed-language batches take every present language's adapter on its
        own rows: out = h + sum_l mask_l * (adapter_l(h) - h). Entries of
        absent languages contribute exactly zero, so their parameters see
        zero gradient and perturbing them cannot change this output.
        """
        if not self.adapters:
            return h
        if "shared" in self.adapters:
            return self.adapters["shared"][site](h)
        language_ids = np.asarray(language_ids)
        present = np.unique(language_ids)
        out = h
        for lang in present:
            entry = self.adapters[str(int(lang))][site]
            delta = ag.add(entry(h), ag.mul(h, -1.0))
            sel = (language_ids == lang).astype(h.data.dtype)[:, None, None]
            out = ag.add(out, ag.mul(delta, ag.Tensor(sel)))
        return out

    def language_vectors(self, language_ids, dtype=np.float32):
        """One-hot rows (B, language_vector_dim)."""
        language_ids = np.asarray(language_ids)
        bad = language_ids[(language_ids < 0) | (language_ids >= self.config.num_languages)]
        if bad.size:
            raise ValueError(
                f"language id {int(bad[0])} out of range for {self.config.num_languages} languages"
            )
        vecs = np.zeros((language_ids.size, self.config.language_vector_dim), dtype=dtype)
        vecs[np.arange(language_ids.size), language_ids] = 1.0
        return vecs

    def __call__(self, features, lengths, language_ids, language_vectors=None):
        """features (B,T,input_dim) array or Tensor -> ((B,ceil(T/2),D), new lengths).

        `language_vectors` overrides the one-hot rows (used to probe the
        conditioning-degeneracy property); shape (B, language_vector_dim).
        """
        cfg = self.config
        data = features.data if isinstance(features, ag.Tensor) else np.asarray(features)
        dtype = self.input_proj.w.dtype
        b, t, f = data.shape
        if f != self.input_dim:
            raise ValueError(f"expected {self.input_dim}-dim features, got {f}")
        if lengths is None:
            lengths = np.full(b, t, dtype=np.int64)
        lengths = np.asarray(lengths)

        if cfg.conditioning == "bias_concat":
            if language_vectors is None:
                language_vectors = self.language_vectors(language_ids, dtype)
            lv = np.broadcast_to(
                np.asarray(language_vectors, dtype=dtype)[:, None, :],
                (b, t, cfg.language_vector_dim),
            )
            data = np.concatenate([data.astype(dtype), lv], axis=-1)
        else:
            self.language_vectors(language_ids)  # range check only
            data = data.astype(dtype)

        attn_mask, pad_mask = lengths_to_masks(lengths, t, dtype)
        h = self.input_proj(ag.Tensor(data))
        site = 0
        for layer in self.block1:
            h = layer(h, attn_mask, pad_mask)
            h = self.adapter_forward(h, language_ids, site)
            site += 1

        h, lengths = time_stack(h, lengths)
        attn_mask, pad_mask = lengths_to_masks(lengths, h.shape[1], dtype)
        h = self.block2(h, attn_mask, pad_mask)
        h = self.adapter_forward(h, language_ids, site)
        site += 1
        h = self.block2_proj(h)

        for layer in self.block3:
            h = layer(h, attn_mask, pad_mask)
            h = self.adapter_forward(h, language_ids, site)
            site += 1
        return h, lengths
