"""End-to-end runs of the command line against a disk-backed corpus."""

import json
import subprocess
import sys

import pytest
from conftest import tiny_table, write_corpus

from asrlab.capacity import count_params
from asrlab.checkpoint import load_checkpoint, model_from_checkpoint
from asrlab.cli import main
from asrlab.data import save_manifest
from asrlab.languages import LanguageInfo, LanguageTable
from asrlab.text import GraphemeVocab

TINY_MODEL = [
    "--set", "encoder.num_layers=5",
    "--set", "encoder.model_dim=16",
    "--set", "encoder.attention_heads=4",
    "--set", "encoder.conv_kernel=3",
    "--set", "encoder.ffn_expansion=2",
    "--set", "decoder.kind=transformer",
    "--set", "decoder.num_layers=1",
    "--set", "decoder.model_dim=16",
    "--set", "decoder.hidden_dim=32",
    "--set", "decoder.attention_heads=4",
    "--set", "train.batch_size=2",
    "--set", "train.warmup_steps=5",
]


@pytest.fixture
def corpus(tmp_path):
    table = tiny_table()
    records, _ = write_corpus(tmp_path, table, per_lang=3)
    manifest = tmp_path / "train.jsonl"
    save_manifest(manifest, records)
    languages = tmp_path / "languages.json"
    languages.write_text(json.dumps(table.to_dict()))
    return tmp_path, manifest, languages


def test_build_vocab(corpus, capsys):
    tmp, manifest, _ = corpus
    assert main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")]) == 0
    vocab = GraphemeVocab.load(tmp / "v.txt")
    assert {"a", "b", "c", "d", "e", "f"} <= set(vocab.tokens)
    assert str(tmp / "v.txt") in capsys.readouterr().out


def test_plan_catalogue_name(capsys):
    assert main(["plan", "--config", "e3"]) == 0
    out = capsys.readouterr().out
    total = int(out.split("total")[1].split()[0].replace(",", ""))
    assert 0.85e9 < total < 1.15e9


def test_plan_config_file(tmp_path, capsys):
    from conftest import tiny_config

    config = tiny_config(vocab_size=32)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(config.to_dict()))
    assert main(["plan", "--config", str(path), "--records"]) == 0
    rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    by_name = {r["name"]: r for r in rows if r["kind"] == "component"}
    assert by_name["total"]["params"] == count_params(config).total
    assert any(r["kind"] == "memory" and r["feasible"] for r in rows)


def test_plan_list_covers_catalogue(capsys):
    assert main(["plan", "--list", "--records"]) == 0
    names = {json.loads(line)["name"] for line in capsys.readouterr().out.splitlines()}
    assert {"monolingual", "b0", "e3", "10b"} <= names


def test_plan_unknown_name(capsys):
    assert main(["plan", "--config", "nope"]) == 2
    assert "nope" in capsys.readouterr().err


def test_train_zero_steps_writes_checkpoint(corpus, capsys):
    tmp, manifest, languages = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    rc = main(
        ["train", "--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
         "--languages", str(languages), "--out-dir", str(tmp / "run"),
         "--steps", "0", *TINY_MODEL]
    )
    assert rc == 0
    ckpt = load_checkpoint(tmp / "run" / "checkpoints" / "latest.ckpt")
    assert ckpt.meta["step"] == 0
    assert ckpt.vocab_hash == GraphemeVocab.load(tmp / "v.txt").content_hash()


def test_train_and_resume(corpus):
    tmp, manifest, languages = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    base = ["--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
            "--languages", str(languages), "--out-dir", str(tmp / "run")]
    assert main(["train", *base, "--steps", "3", *TINY_MODEL]) == 0
    first = load_checkpoint(tmp / "run" / "checkpoints" / "latest.ckpt")
    assert first.meta["step"] == 3
    assert (tmp / "run" / "metrics.jsonl").exists()

    # architecture comes from the checkpoint on resume, so no --set needed
    rc = main(
        ["train", *base, "--steps", "2",
         "--resume", str(tmp / "run" / "checkpoints" / "latest.ckpt")]
    )
    assert rc == 0
    second = load_checkpoint(tmp / "run" / "checkpoints" / "latest.ckpt")
    assert second.meta["step"] == 5
    assert second.meta["model_config"] == first.meta["model_config"]


def test_resume_rejects_architecture_overrides(corpus, capsys):
    tmp, manifest, languages = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    base = ["--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
            "--languages", str(languages), "--out-dir", str(tmp / "run")]
    main(["train", *base, "--steps", "0", *TINY_MODEL])
    rc = main(
        ["train", *base, "--steps", "1", "--set", "encoder.model_dim=32",
         "--resume", str(tmp / "run" / "checkpoints" / "latest.ckpt")]
    )
    assert rc == 2
    assert "fixed by --resume" in capsys.readouterr().err


def test_unknown_config_key_rejected(corpus, capsys):
    tmp, manifest, languages = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    rc = main(
        ["train", "--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
         "--languages", str(languages), "--out-dir", str(tmp / "run"),
         "--steps", "0", "--set", "train.batchsize=8"]
    )
    assert rc == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_eval_missing_checkpoint_leaves_no_report(corpus, capsys):
    tmp, manifest, _ = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    rc = main(
        ["eval", "--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
         "--checkpoint", str(tmp / "missing.ckpt"), "--report", str(tmp / "wer.jsonl")]
    )
    assert rc == 2
    assert "not found" in capsys.readouterr().err
    assert not (tmp / "wer.jsonl").exists()


def test_eval_reports_every_language(corpus, capsys):
    tmp, manifest, languages = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    main(
        ["train", "--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
         "--languages", str(languages), "--out-dir", str(tmp / "run"),
         "--steps", "0", *TINY_MODEL]
    )
    rc = main(
        ["eval", "--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
         "--checkpoint", str(tmp / "run" / "checkpoints" / "latest.ckpt"),
         "--beam-size", "2", "--report", str(tmp / "wer.jsonl")]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "average" in out
    rows = [json.loads(line) for line in (tmp / "wer.jsonl").read_text().splitlines()]
    assert [r["language"] for r in rows] == ["aa", "bb", "cc", "average"]


def test_eval_vocab_mismatch(corpus, capsys):
    tmp, manifest, languages = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    main(
        ["train", "--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
         "--languages", str(languages), "--out-dir", str(tmp / "run"),
         "--steps", "0", *TINY_MODEL]
    )
    other = tmp / "other.txt"
    other.write_text((tmp / "v.txt").read_text() + "zz\n")
    rc = main(
        ["eval", "--manifest", str(manifest), "--vocab", str(other),
         "--checkpoint", str(tmp / "run" / "checkpoints" / "latest.ckpt")]
    )
    assert rc == 2
    assert "vocabulary" in capsys.readouterr().err


def test_extend_grows_model_and_resumes(tmp_path):
    table = tiny_table()
    records, _ = write_corpus(tmp_path, table, per_lang=3)
    old_records = [r for r in records if r.language_code != "cc"]
    old_manifest = tmp_path / "old.jsonl"
    save_manifest(old_manifest, old_records)
    full_manifest = tmp_path / "full.jsonl"
    save_manifest(full_manifest, records)

    old_table = LanguageTable([LanguageInfo("aa", "germanic", 2.0, 1.0),
                               LanguageInfo("bb", "italic", 1.0, 1.0)])
    old_langs = tmp_path / "old_languages.json"
    old_langs.write_text(json.dumps(old_table.to_dict()))
    new_langs = tmp_path / "new_languages.json"
    new_langs.write_text(json.dumps(table.to_dict()))

    main(["build-vocab", "--manifest", str(old_manifest), "--out", str(tmp_path / "v.txt")])
    main(
        ["train", "--manifest", str(old_manifest), "--vocab", str(tmp_path / "v.txt"),
         "--languages", str(old_langs), "--out-dir", str(tmp_path / "run"),
         "--steps", "2", *TINY_MODEL]
    )
    rc = main(
        ["extend", "--checkpoint", str(tmp_path / "run" / "checkpoints" / "latest.ckpt"),
         "--vocab", str(tmp_path / "v.txt"), "--manifest", str(full_manifest),
         "--languages", str(new_langs), "--out-dir", str(tmp_path / "grown")]
    )
    assert rc == 0
    ckpt = load_checkpoint(tmp_path / "grown" / "extended.ckpt")
    model = model_from_checkpoint(ckpt)
    assert model.config.encoder.num_languages == 3
    new_vocab = GraphemeVocab.load(tmp_path / "grown" / "vocab.txt")
    assert {"e", "f"} <= set(new_vocab.tokens)  # cc's alphabet arrived
    assert ckpt.meta["step"] == 0  # default slot policy starts the clock over

    rc = main(
        ["train", "--manifest", str(full_manifest),
         "--vocab", str(tmp_path / "grown" / "vocab.txt"),
         "--languages", str(new_langs), "--out-dir", str(tmp_path / "run2"),
         "--steps", "1", "--resume", str(tmp_path / "grown" / "extended.ckpt")]
    )
    assert rc == 0
    resumed = load_checkpoint(tmp_path / "run2" / "checkpoints" / "latest.ckpt")
    assert resumed.meta["step"] == 1


def test_extend_rejects_non_superset(tmp_path, corpus):
    tmp, manifest, languages = corpus
    main(["build-vocab", "--manifest", str(manifest), "--out", str(tmp / "v.txt")])
    main(
        ["train", "--manifest", str(manifest), "--vocab", str(tmp / "v.txt"),
         "--languages", str(languages), "--out-dir", str(tmp / "run"),
         "--steps", "0", *TINY_MODEL]
    )
    smaller = LanguageTable([LanguageInfo("aa", "germanic", 2.0, 1.0)])
    shrunk = tmp / "shrunk.json"
    shrunk.write_text(json.dumps(smaller.to_dict()))
    rc = main(
        ["extend", "--checkpoint", str(tmp / "run" / "checkpoints" / "latest.ckpt"),
         "--vocab", str(tmp / "v.txt"), "--manifest", str(manifest),
         "--languages", str(shrunk), "--out-dir", str(tmp / "grown")]
    )
    assert rc == 2


def test_console_script_wiring():
    proc = subprocess.run(
        [sys.executable, "-m", "asrlab.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    for command in ("build-vocab", "train", "eval", "plan", "extend", "serve"):
        assert command in proc.stdout
