from .features import (
    FeatureFrames,
    compute_logmel,
    mel_filterbank,
    stack_and_subsample,
    ENERGY_FLOOR,
)
from .augment import SpecAugmentPolicy, spec_augment
from .io import read_feat, read_wav, write_feat, write_wav

__all__ = [
    "FeatureFrames",
    "compute_logmel",
    "mel_filterbank",
    "stack_and_subsample",
    "ENERGY_FLOOR",
    "SpecAugmentPolicy",
    "spec_augment",
    "read_feat",
    "read_wav",
    "write_feat",
    "write_wav",
]
