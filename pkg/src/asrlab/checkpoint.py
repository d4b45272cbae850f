"""Single-file binary checkpoints.

Layout: magic, format version, canonical-JSON header (array manifest sorted
by name, run metadata, vocab hash, language table), raw little-endian array
blobs in manifest order, then a sha256 of everything before it. Canonical
header + fixed blob order make save(load(f)) byte-identical to f, which the
warm-start and kill-and-resume contracts lean on.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .model import AsrModel, ModelConfig

MAGIC = b"ASRLCKPT"
FORMAT_VERSION = 1
_HASH_BYTES = 32


@dataclass
class Checkpoint:
    meta: dict
    arrays: dict
    vocab_hash: str
    language_table: list
    format_version: int = FORMAT_VERSION


def save_checkpoint(path, meta, arrays, vocab_hash, language_table) -> None:
    entries = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        entries.append((name, arr))
    header = {
        "arrays": [
            {"name": n, "dtype": a.dtype.str, "shape": list(a.shape)} for n, a in entries
        ],
        "language_table": language_table,
        "meta": meta,
        "vocab_hash": vocab_hash,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", FORMAT_VERSION)
    encoded = blob.encode("utf-8")
    out += struct.pack("<Q", len(encoded))
    out += encoded
    for _, a in entries:
        out += a.tobytes()
    out += hashlib.sha256(bytes(out)).digest()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(out)
    os.replace(tmp, path)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    (version,) = struct.unpack_from("<I", raw, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint format version {version}")
    if hashlib.sha256(raw[:-_HASH_BYTES]).digest() != raw[-_HASH_BYTES:]:
        raise ValueError(f"{path}: integrity hash mismatch (truncated or corrupted)")
    (header_len,) = struct.unpack_from("<Q", raw, len(MAGIC) + 4)
    offset = len(MAGIC) + 4 + 8
    header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        count = 1
        for s in entry["shape"]:
            count *= s
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
        offset += count * dtype.itemsize
    if offset != len(raw) - _HASH_BYTES:
        raise ValueError(f"{path}: array section length mismatch")
    return Checkpoint(
        meta=header["meta"],
        arrays=arrays,
        vocab_hash=header["vocab_hash"],
        language_table=header["language_table"],
        format_version=version,
    )


def write_trainer_checkpoint(path, trainer) -> None:
    meta, arrays = trainer.checkpoint_state()
    save_checkpoint(path, meta, arrays, trainer.vocab.content_hash(), trainer.table.to_dict())


def restore_trainer(trainer, ckpt: Checkpoint) -> None:
    """Load a checkpoint into a compatible trainer; loud mismatch errors."""
    if ckpt.vocab_hash != trainer.vocab.content_hash():
        raise ValueError("checkpoint was written with a different vocabulary")
    if ckpt.meta["model_config"] != trainer.model.config.to_dict():
        raise ValueError("checkpoint model config does not match the live model")
    codes = [row["code"] for row in ckpt.language_table]
    if codes != trainer.table.codes:
        raise ValueError(
            f"checkpoint language table {codes} does not match {trainer.table.codes}"
        )
    trainer.restore(ckpt.meta, ckpt.arrays)


def model_from_checkpoint(ckpt: Checkpoint) -> AsrModel:
    config = ModelConfig.from_dict(ckpt.meta["model_config"])
    model = AsrModel(config, seed=0)
    model.load_state_dict(
        {k[len("model/") :]: v for k, v in ckpt.arrays.items() if k.startswith("model/")}
    )
    return model
