"""Warm-start surgery for adding languages or vocabulary to a trained model.

The extended model must behave identically to the old one on old inputs:
grown weight matrices keep the old values in their leading corner and zero
elsewhere, new adapters start as exact identities, and new vocabulary
entries get zero embedding rows and zero output columns.
"""

from __future__ import annotations

import re

import numpy as np

from ..model import AsrModel, ModelConfig, build_model

_NEW_PARAM_OK = re.compile(r"(^|\.)adapters\.(\d+)\.|(^|\.)instances\.(\d+)\.")


def _check_compatible(old: ModelConfig, new: ModelConfig) -> None:
    if new.vocab_size < old.vocab_size:
        raise ValueError("extension cannot shrink the vocabulary")
    if new.input_dim != old.input_dim or new.dtype != old.dtype:
        raise ValueError("extension cannot change input_dim or dtype")
    oe, ne = old.encoder, new.encoder
    for f in ("num_layers", "model_dim", "attention_heads", "conv_kernel",
              "ffn_expansion", "conditioning", "adapter_bottleneck", "num_groups"):
        if getattr(oe, f) != getattr(ne, f):
            raise ValueError(f"extension cannot change encoder.{f}")
    if ne.num_languages < oe.num_languages:
        raise ValueError("extension cannot drop languages")
    if ne.language_vector_dim < oe.language_vector_dim:
        raise ValueError("extension cannot shrink the language vector")
    od, nd = old.decoder, new.decoder
    for f in ("kind", "num_layers", "model_dim", "hidden_dim", "attention_heads", "routing"):
        if getattr(od, f) != getattr(nd, f):
            raise ValueError(f"extension cannot change decoder.{f}")
    if od.routing == "per_family":
        for lang, inst in od.families.items():
            if nd.families.get(lang) != inst:
                raise ValueError(f"extension cannot reroute language {lang}")


def extend_model(model: AsrModel, new_config: ModelConfig, seed: int = 0) -> AsrModel:
    """Build a model for ``new_config`` warm-started from ``model``.

    Parameters present in both keep the old values; grown matrices embed the
    old block at the origin with zeros in the new rows/columns; parameters
    that exist only in the new model must belong to a new language's adapter
    stack or a new decoder instance (anything else is a config mismatch).
    """
    _check_compatible(model.config, new_config)
    new_model = build_model(new_config, seed=seed)
    old_params = dict(model.named_parameters())
    old_instances = model.config.decoder.num_instances()
    for name, p in new_model.named_parameters():
        if name in old_params:
            old = old_params[name].data
            if old.shape == p.data.shape:
                p.data = old.copy()
                continue
            if old.ndim != p.data.ndim or any(
                n < o for n, o in zip(p.data.shape, old.shape)
            ):
                raise ValueError(
                    f"parameter {name} changed shape {old.shape} -> {p.data.shape} "
                    "in a way extension cannot warm-start"
                )
            grown = np.zeros_like(p.data)
            grown[tuple(slice(0, s) for s in old.shape)] = old
            p.data = grown
        else:
            m = _NEW_PARAM_OK.search(name)
            fresh_lang = m and m.group(2) and int(m.group(2)) >= model.config.num_languages
            fresh_inst = m and m.group(4) and int(m.group(4)) >= old_instances
            if not (fresh_lang or fresh_inst):
                raise ValueError(f"unexpected new parameter {name}")
            # Fresh adapters are identity by construction and fresh decoder
            # instances keep their random init; nothing to copy.
    return new_model


def extend_slots(
    old_slots: dict,
    new_model: AsrModel,
    policy: str = "reset",
) -> dict:
    """Carry optimizer state across an extension.

    ``reset`` discards everything (including the step counter, so warmup
    restarts).  ``copy`` keeps matching state, zero-pads state for grown
    parameters, and starts new parameters fresh.
    """
    if policy not in ("reset", "copy"):
        raise ValueError(f"unknown slot policy: {policy!r}")
    if policy == "reset":
        return {}
    new_params = dict(new_model.named_parameters())
    slots: dict = {"step": int(old_slots.get("step", 0))}
    for name, slot in old_slots.items():
        if name == "step" or name not in new_params:
            continue
        target = new_params[name].data
        carried = {}
        for key, arr in slot.items():
            # Slot arrays either mirror the parameter shape (m, v) or a
            # single axis of it (adafactor row/col); pad whichever grew.
            if arr.shape == _expected_slot_shape(key, arr, target):
                carried[key] = arr.copy()
            else:
                expected = _expected_slot_shape(key, arr, target)
                grown = np.zeros(expected, dtype=arr.dtype)
                grown[tuple(slice(0, s) for s in arr.shape)] = arr
                carried[key] = grown
        slots[name] = carried
    return slots


def _expected_slot_shape(key: str, arr: np.ndarray, target: np.ndarray) -> tuple:
    if key == "row":
        return (target.shape[0],)
    if key == "col":
        return (target.shape[1],)
    return target.shape
