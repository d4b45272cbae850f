"""The full encoder-decoder model: batch loss, logits, and transcription."""

from __future__ import annotations

import numpy as np

from .. import autograd as ag
from ..autograd import Module
from .beam import beam_search, log_softmax
from .decoder import DecoderBank
from .encoder import ConformerEncoder
from .layers import lengths_to_masks
from ..text import BEGIN, END


class AsrModel(Module):
    """Conformer encoder + routed decoder(s) over a shared grapheme vocabulary."""

    def __init__(self, config, seed=0):
        rng = np.random.default_rng(seed)
        dtype = np.dtype(config.dtype).type
        self.config = config
        self.encoder = ConformerEncoder(config.encoder, config.input_dim, rng, dtype)
        self.decoders = DecoderBank(
            config.decoder, config.encoder.model_dim, config.vocab_size, rng, dtype
        )

    @property
    def dtype(self):
        return self.encoder.input_proj.w.dtype

    def num_params(self):
        return sum(p.data.size for _, p in self.named_parameters())

    def _grouped(self, batch):
        """Reorder a batch contiguously by decoder instance.

        Returns (order, instance run list [(instance_id, start, stop)]) over
        the reordered arrays.
        """
        language_ids = np.asarray(batch["language_ids"])
        instances = np.array([self.decoders.route(l) for l in language_ids])
        order = np.argsort(instances, kind="stable")
        runs = []
        sorted_inst = instances[order]
        start = 0
        for i in range(1, len(sorted_inst) + 1):
            if i == len(sorted_inst) or sorted_inst[i] != sorted_inst[start]:
                runs.append((int(sorted_inst[start]), start, i))
                start = i
        return order, runs

    def loss(self, batch):
        """Mean token cross-entropy over the batch (padding excluded).

        batch: features (B,T,F), feat_lengths (B,), targets (B,U+1) framed
        [begin, ..., end, pad...], target_lengths (B,), language_ids (B,).
        Returns (scalar loss Tensor, aux with per-language token NLL means).
        """
        if len(np.asarray(batch["language_ids"])) == 0:
            raise ValueError("empty batch")
        order, runs = self._grouped(batch)
        feats = np.asarray(batch["features"])[order]
        feat_lengths = np.asarray(batch["feat_lengths"])[order]
        targets = np.asarray(batch["targets"])[order]
        target_lengths = np.asarray(batch["target_lengths"])[order]
        language_ids = np.asarray(batch["language_ids"])[order]

        enc, enc_lengths = self.encoder(feats, feat_lengths, language_ids)
        total_tokens = int((target_lengths - 1).sum())
        total = None
        lang_nll_sum = {}
        lang_nll_count = {}
        for inst, a, b in runs:
            u = int(target_lengths[a:b].max()) - 1
            targets_in = targets[a:b, :u]
            labels = targets[a:b, 1 : u + 1]
            label_mask = (np.arange(u)[None, :] < (target_lengths[a:b] - 1)[:, None]).astype(
                self.dtype
            )
            enc_sub = ag.slice_axis(enc, 0, a, b)
            enc_mask, _ = lengths_to_masks(enc_lengths[a:b], enc.shape[1], self.dtype)
            logits = self.decoders.instances[str(inst)](targets_in, enc_sub, enc_mask)
            group_tokens = float(label_mask.sum())
            part = ag.softmax_cross_entropy(logits, labels, label_mask)
            weighted = ag.mul(part, group_tokens / total_tokens)
            total = weighted if total is None else ag.add(total, weighted)

            nll = ag.token_nll(logits.data, labels) * label_mask
            for row, lang in enumerate(language_ids[a:b]):
                lang = int(lang)
                lang_nll_sum[lang] = lang_nll_sum.get(lang, 0.0) + float(nll[row].sum())
                lang_nll_count[lang] = lang_nll_count.get(lang, 0) + int(label_mask[row].sum())
        aux = {
            "tokens": total_tokens,
            "per_language_loss": {
                lang: lang_nll_sum[lang] / max(lang_nll_count[lang], 1)
                for lang in sorted(lang_nll_sum)
            },
            "per_language_tokens": {lang: lang_nll_count[lang] for lang in sorted(lang_nll_count)},
        }
        return total, aux

    def forward_logits(self, batch):
        """Teacher-forced logits (B, U, V) in the original batch order, no graph."""
        order, runs = self._grouped(batch)
        feats = np.asarray(batch["features"])[order]
        feat_lengths = np.asarray(batch["feat_lengths"])[order]
        targets = np.asarray(batch["targets"])[order]
        language_ids = np.asarray(batch["language_ids"])[order]
        u = targets.shape[1] - 1
        out = np.zeros((len(order), u, self.config.vocab_size), dtype=self.dtype)
        with ag.no_grad():
            enc, enc_lengths = self.encoder(feats, feat_lengths, language_ids)
            for inst, a, b in runs:
                enc_sub = ag.slice_axis(enc, 0, a, b)
                enc_mask, _ = lengths_to_masks(enc_lengths[a:b], enc.shape[1], self.dtype)
                logits = self.decoders.instances[str(inst)](targets[a:b, :u], enc_sub, enc_mask)
                out[a:b] = logits.data
        inverse = np.empty_like(order)
        inverse[order] = np.arange(len(order))
        return out[inverse]

    def transcribe(self, features, language_id, beam_size=4, max_len=None):
        """Decode one utterance (T,F) -> Hypothesis."""
        features = np.asarray(features)
        if features.ndim != 2:
            raise ValueError(f"transcribe expects a single (T,F) utterance, got {features.shape}")
        with ag.no_grad():
            enc, _ = self.encoder(
                features[None], np.array([features.shape[0]]), np.array([language_id])
            )
            if max_len is None:
                max_len = 2 * enc.shape[1] + 10
            decoder = self.decoders.instance_for(language_id)
            if hasattr(decoder, "cells"):
                stepper = _LasStepper(decoder, enc)
            else:
                stepper = _TransformerStepper(decoder, enc)
            return beam_search(stepper, BEGIN, END, beam_size, max_len)


class _LasStepper:
    def __init__(self, decoder, enc):
        self.decoder = decoder
        self.keys, self.values = decoder.attention.precompute(enc)

    def start(self):
        return self.decoder.initial_state(1)

    def step(self, state, last_token):
        with ag.no_grad():
            logits, new_state, _ = self.decoder.step(
                np.array([[last_token]]), state, self.keys, self.values
            )
        return log_softmax(logits.data[0, 0]), new_state


class _TransformerStepper:
    def __init__(self, decoder, enc):
        self.decoder = decoder
        self.enc = enc

    def start(self):
        return ()

    def step(self, state, last_token):
        prefix = state + (int(last_token),)
        with ag.no_grad():
            logits = self.decoder(np.array([prefix]), self.enc)
        return log_softmax(logits.data[0, -1]), prefix


def build_model(config, seed=0):
    """Deterministic model construction: same config + seed, same parameters."""
    return AsrModel(config, seed=seed)
