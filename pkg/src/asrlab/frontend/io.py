"""Audio and feature file formats.

WAV: 16-bit little-endian mono PCM, via the stdlib wave module.
FEAT: 16-byte header (magic "FEAT", u32 version, u32 T, u32 D, all
little-endian) followed by T*D float32 little-endian values, row-major.
"""

from __future__ import annotations

import struct
import wave

import numpy as np

FEAT_MAGIC = b"FEAT"
FEAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def read_wav(path):
    """Returns (samples as float64 in [-1, 1), sample_rate)."""
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono audio, got {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit samples, got {8 * w.getsampwidth()}-bit")
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return pcm, rate


def write_wav(path, samples, sample_rate):
    samples = np.clip(np.asarray(samples), -1.0, 1.0 - 1.0 / 32768)
    ints = np.round(samples * 32768.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(ints.tobytes())


def write_feat(path, frames):
    frames = np.ascontiguousarray(frames, dtype="<f4")
    if frames.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {frames.shape}")
    t, d = frames.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(FEAT_MAGIC, FEAT_VERSION, t, d))
        f.write(frames.tobytes())


def read_feat(path):
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated feature header")
        magic, version, t, d = _HEADER.unpack(header)
        if magic != FEAT_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {FEAT_MAGIC!r}")
        if version != FEAT_VERSION:
            raise ValueError(f"{path}: unsupported feature version {version}")
        body = f.read(4 * t * d)
    if len(body) != 4 * t * d:
        raise ValueError(f"{path}: truncated feature body ({len(body)} bytes for {t}x{d})")
    return np.frombuffer(body, dtype="<f4").reshape(t, d).copy()
