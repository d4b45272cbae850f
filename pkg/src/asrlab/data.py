"""Utterance records, JSONL manifests, feature loading, and batch assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .frontend import compute_logmel, read_feat, read_wav, spec_augment, stack_and_subsample
from .frontend.features import FeatureFrames
from .text import PAD


@dataclass(frozen=True)
class UtteranceRecord:
    """One example: spoken audio (or precomputed features) plus transcript."""

    id: str
    language_code: str
    transcript: str
    audio_path: str = ""
    feature_path: str = ""

    def __post_init__(self):
        if not self.audio_path and not self.feature_path:
            raise ValueError(f"record {self.id}: needs audio_path or feature_path")


def load_manifest(path):
    """Line-delimited JSON records {id, language_code, audio_path|feature_path, transcript}."""
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({e})") from None
            records.append(
                UtteranceRecord(
                    id=str(row["id"]),
                    language_code=row["language_code"],
                    transcript=row["transcript"],
                    audio_path=row.get("audio_path", ""),
                    feature_path=row.get("feature_path", ""),
                )
            )
    return records


def save_manifest(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            row = {"id": r.id, "language_code": r.language_code, "transcript": r.transcript}
            if r.audio_path:
                row["audio_path"] = r.audio_path
            if r.feature_path:
                row["feature_path"] = r.feature_path
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def group_by_language(records, table):
    """dict language id -> list of records; unknown codes raise."""
    groups = {i: [] for i in range(len(table))}
    for r in records:
        groups[table.id_of(r.language_code)].append(r)
    return groups


def load_features(record):
    """(T, 240) float32 features for one record."""
    if record.feature_path:
        frames = read_feat(record.feature_path)
        if frames.shape[1] != 240:
            raise ValueError(
                f"record {record.id}: precomputed features must be 240-dim, got {frames.shape[1]}"
            )
        return frames
    pcm, rate = read_wav(record.audio_path)
    return stack_and_subsample(compute_logmel(pcm, rate)).frames


@dataclass
class Normalizer:
    """Per-feature global shift/scale estimated from the training manifest."""

    mean: np.ndarray
    std: np.ndarray

    def __call__(self, frames):
        return (frames - self.mean) / self.std

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], np.float32), np.asarray(d["std"], np.float32))

    @classmethod
    def identity(cls, dim=240):
        return cls(np.zeros(dim, np.float32), np.ones(dim, np.float32))

    @classmethod
    def estimate(cls, records, max_utterances=500):
        moments = np.zeros((2, 240), dtype=np.float64)
        count = 0
        for r in records[:max_utterances]:
            frames = load_features(r).astype(np.float64)
            moments[0] += frames.sum(axis=0)
            moments[1] += (frames**2).sum(axis=0)
            count += frames.shape[0]
        if count == 0:
            return cls.identity()
        mean = moments[0] / count
        var = np.maximum(moments[1] / count - mean**2, 1e-8)
        return cls(mean.astype(np.float32), np.sqrt(var).astype(np.float32))


def build_batch(records, vocab, table, normalizer=None, augment_policy=None, rng=None):
    """Pad a record list into the model's batch dict."""
    feats = []
    for r in records:
        frames = load_features(r)
        if normalizer is not None:
            frames = normalizer(frames)
        if augment_policy is not None:
            frames = spec_augment(FeatureFrames(frames, 30), augment_policy, rng).frames
        feats.append(frames)
    feat_lengths = np.array([f.shape[0] for f in feats])
    max_t = int(feat_lengths.max())
    features = np.zeros((len(records), max_t, 240), dtype=np.float32)
    for i, f in enumerate(feats):
        features[i, : f.shape[0]] = f

    encoded = [vocab.encode(r.transcript) for r in records]
    target_lengths = np.array([len(e) for e in encoded])
    max_u = int(target_lengths.max())
    targets = np.full((len(records), max_u), PAD, dtype=np.int64)
    for i, e in enumerate(encoded):
        targets[i, : len(e)] = e

    return {
        "features": features,
        "feat_lengths": feat_lengths,
        "targets": targets,
        "target_lengths": target_lengths,
        "language_ids": np.array([table.id_of(r.language_code) for r in records]),
        "utterance_ids": [r.id for r in records],
    }
