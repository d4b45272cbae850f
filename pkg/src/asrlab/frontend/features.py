"""Acoustic feature extraction: 80-D log-Mel at 10ms, stacked to 240-D at 30ms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WINDOW_MS = 32
HOP_MS = 10
NUM_MEL_BINS = 80
MEL_LOW_HZ = 125.0
ENERGY_FLOOR = 1e-10
STACK = 3


@dataclass
class FeatureFrames:
    """A T x D matrix of features at a fixed frame rate."""

    frames: np.ndarray
    frame_rate_ms: int
    dim: int = field(default=0)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 2:
            raise ValueError(f"frames must be 2-D (T, D), got shape {self.frames.shape}")
        if self.dim == 0:
            self.dim = self.frames.shape[1]
        if self.dim != self.frames.shape[1]:
            raise ValueError(f"dim {self.dim} does not match frame width {self.frames.shape[1]}")
        if self.frame_rate_ms not in (10, 30):
            raise ValueError(f"frame_rate_ms must be 10 or 30, got {self.frame_rate_ms}")

    @property
    def num_frames(self):
        return self.frames.shape[0]


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(num_bins, nfft, sample_rate, low_hz=MEL_LOW_HZ, high_hz=None):
    """Triangular Mel filters, shape (num_bins, nfft//2 + 1)."""
    if high_hz is None:
        high_hz = sample_rate / 2.0
    points = _mel_to_hz(np.linspace(_hz_to_mel(low_hz), _hz_to_mel(high_hz), num_bins + 2))
    freqs = np.linspace(0.0, sample_rate / 2.0, nfft // 2 + 1)
    fb = np.zeros((num_bins, freqs.size))
    for i in range(num_bins):
        lo, center, hi = points[i], points[i + 1], points[i + 2]
        up = (freqs - lo) / max(center - lo, 1e-12)
        down = (hi - freqs) / max(hi - center, 1e-12)
        fb[i] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def compute_logmel(pcm, sample_rate):
    """Raw mono samples -> 80-D natural-log Mel magnitudes at a 10ms hop.

    Frames are Hann-windowed 32ms slices; T = 1 + floor((N - window) / hop).
    Mel filters span 125 Hz to Nyquist; energies are floored before the log
    so silence maps to log(ENERGY_FLOOR).
    """
    if sample_rate < 8000:
        raise ValueError(f"unsupported sample rate {sample_rate}; need >= 8000 Hz")
    pcm = np.asarray(pcm, dtype=np.float64).reshape(-1)
    window = int(round(WINDOW_MS * sample_rate / 1000))
    hop = int(round(HOP_MS * sample_rate / 1000))
    if pcm.size < window:
        raise ValueError(
            f"audio too short: {pcm.size} samples, need at least one {window}-sample window"
        )
    num_frames = 1 + (pcm.size - window) // hop
    nfft = 1 << (window - 1).bit_length()
    hann = np.hanning(window)
    fb = mel_filterbank(NUM_MEL_BINS, nfft, sample_rate)

    idx = np.arange(window)[None, :] + hop * np.arange(num_frames)[:, None]
    spectra = np.abs(np.fft.rfft(pcm[idx] * hann, n=nfft, axis=1))
    mel = spectra @ fb.T
    logmel = np.log(np.maximum(mel, ENERGY_FLOOR))
    return FeatureFrames(logmel.astype(np.float32), frame_rate_ms=10)


def stack_and_subsample(feats):
    """3 consecutive 10ms frames -> one 240-D frame at 30ms.

    T' = ceil(T/3); a ragged tail is completed by repeating the last frame.
    """
    if feats.dim != NUM_MEL_BINS or feats.frame_rate_ms != 10:
        raise ValueError(
            f"expected {NUM_MEL_BINS}-D frames at 10ms, got {feats.dim}-D at {feats.frame_rate_ms}ms"
        )
    t = feats.num_frames
    if t == 0:
        raise ValueError("cannot stack an empty feature matrix")
    out_t = -(-t // STACK)
    pad = out_t * STACK - t
    frames = feats.frames
    if pad:
        frames = np.concatenate([frames, np.repeat(frames[-1:], pad, axis=0)])
    stacked = frames.reshape(out_t, STACK * NUM_MEL_BINS)
    return FeatureFrames(stacked, frame_rate_ms=30)
