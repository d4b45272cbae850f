"""SpecAugment: random frequency and time masking on a feature matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureFrames


@dataclass
class SpecAugmentPolicy:
    num_freq_masks: int = 2
    max_freq_len: int = 27
    num_time_masks: int = 2
    max_time_len: int = 50
    mask_value: float = 0.0

    def __post_init__(self):
        for name in ("num_freq_masks", "max_freq_len", "num_time_masks", "max_time_len"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def spec_augment(feats, policy, rng):
    """Apply `policy` with randomness from `rng`; returns a new FeatureFrames.

    Each mask draws a length uniformly from [0, max_len] (clipped to the
    axis) and a start uniformly over positions that keep the mask in range.
    Unmasked cells are bit-identical to the input.
    """
    out = feats.frames.copy()
    t, d = out.shape
    for _ in range(policy.num_freq_masks):
        length = int(rng.integers(0, min(policy.max_freq_len, d) + 1))
        start = int(rng.integers(0, d - length + 1))
        out[:, start : start + length] = policy.mask_value
    for _ in range(policy.num_time_masks):
        length = int(rng.integers(0, min(policy.max_time_len, t) + 1))
        start = int(rng.integers(0, t - length + 1))
        out[start : start + length, :] = policy.mask_value
    return FeatureFrames(out, frame_rate_ms=feats.frame_rate_ms)
