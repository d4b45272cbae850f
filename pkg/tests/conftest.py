"""Shared fixtures: a tiny 3-language corpus small enough for fast training."""

import numpy as np
import pytest

from asrlab.data import UtteranceRecord
from asrlab.frontend import write_feat
from asrlab.languages import LanguageInfo, LanguageTable
from asrlab.model import DecoderConfig, EncoderConfig, ModelConfig, build_model
from asrlab.text import build_vocab


def tiny_table():
    return LanguageTable(
        [
            LanguageInfo("aa", "germanic", 2.0, 1.0),
            LanguageInfo("bb", "italic", 1.0, 1.0),
            LanguageInfo("cc", "uralic", 1.0, 1.0),
        ]
    )


def tiny_config(
    vocab_size,
    num_languages=3,
    conditioning="bias_concat",
    routing="single",
    families=None,
    decoder_kind="transformer",
):
    enc = EncoderConfig(
        num_layers=5,
        model_dim=32,
        attention_heads=4,
        conv_kernel=3,
        ffn_expansion=2,
        conditioning=conditioning,
        num_languages=num_languages,
    )
    dec = DecoderConfig(
        kind=decoder_kind,
        num_layers=1,
        model_dim=32,
        hidden_dim=64,
        attention_heads=4,
        routing=routing,
        families=families or {},
    )
    return ModelConfig(encoder=enc, decoder=dec, vocab_size=vocab_size)


def write_corpus(tmp_path, table, per_lang=4, t_frames=6, seed=0):
    """FEAT-backed records with per-language alphabets; returns (records, vocab)."""
    rng = np.random.default_rng(seed)
    alphabets = ("ab", "cd", "ef")
    records = []
    for lang_i, info in enumerate(table):
        letters = list(alphabets[lang_i % len(alphabets)])
        for k in range(per_lang):
            path = tmp_path / f"{info.code}_{k}.feat"
            write_feat(path, rng.normal(size=(t_frames, 240)).astype(np.float32))
            text = "".join(rng.choice(letters, size=3))
            records.append(
                UtteranceRecord(
                    id=f"{info.code}-{k}",
                    language_code=info.code,
                    transcript=text,
                    feature_path=str(path),
                )
            )
    vocab = build_vocab([(r.language_code, r.transcript) for r in records], min_count=1)
    return records, vocab


@pytest.fixture
def tiny_corpus(tmp_path):
    table = tiny_table()
    records, vocab = write_corpus(tmp_path, table)
    return table, records, vocab


@pytest.fixture
def tiny_model_setup(tiny_corpus):
    table, records, vocab = tiny_corpus
    model = build_model(tiny_config(len(vocab)), seed=1)
    return model, table, records, vocab
