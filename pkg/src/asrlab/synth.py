"""Synthetic speech-free corpora for exercising the pipeline end to end.

Every grapheme owns a fixed multivariate-normal template, derived from a
stable digest of the language and character, so the mapping from strings to
feature matrices is deterministic across runs and processes. Languages use
disjoint alphabets, which keeps language conditioning observable.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .data import UtteranceRecord, save_manifest
from .frontend import write_feat
from .languages import LanguageInfo, LanguageTable

ALPHABETS = {"aa": "abcde", "bb": "fghij", "cc": "klmno"}
FEAT_DIM = 240


def char_template(language, char, frames_per_char=4):
    digest = hashlib.sha256(f"{language}:{char}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.normal(size=(frames_per_char, FEAT_DIM)).astype(np.float32)


def render_string(language, text, frames_per_char=4):
    return np.concatenate(
        [char_template(language, c, frames_per_char) for c in text], axis=0
    )


def synth_table(languages=("aa", "bb", "cc"), per_language=3000):
    families = {"aa": "germanic", "bb": "italic", "cc": "uralic"}
    return LanguageTable(
        LanguageInfo(code, families.get(code, "others"), per_language / 1e6, 0.0)
        for code in languages
    )


def generate_corpus(
    out_dir,
    per_language=3000,
    seed=0,
    languages=("aa", "bb", "cc"),
    min_len=2,
    max_len=5,
    frames_per_char=4,
):
    """Write FEAT files plus a manifest under out_dir; returns (table, records)."""
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    records = []
    for code in languages:
        letters = list(ALPHABETS[code])
        lang_dir = out_dir / code
        lang_dir.mkdir(parents=True, exist_ok=True)
        for k in range(per_language):
            length = int(rng.integers(min_len, max_len + 1))
            text = "".join(rng.choice(letters, size=length))
            path = lang_dir / f"{k:05d}.feat"
            write_feat(path, render_string(code, text, frames_per_char))
            records.append(
                UtteranceRecord(
                    id=f"{code}-{k}",
                    language_code=code,
                    transcript=text,
                    feature_path=str(path),
                )
            )
    save_manifest(out_dir / "manifest.jsonl", records)
    return synth_table(languages, per_language), records
