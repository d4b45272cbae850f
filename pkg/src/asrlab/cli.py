"""Command line front door: thin argument handling over the package modules.

Run settings come from a flat key=value file (--run-config) plus repeatable
--set overrides; every key is validated against the tables below. The train
and serve commands share one implementation; serve just keeps the HTTP
control surface on.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .capacity import GiB, catalogue, catalogue_entry, check_memory, count_params
from .checkpoint import (
    load_checkpoint,
    model_from_checkpoint,
    restore_trainer,
    save_checkpoint,
)
from .data import Normalizer, load_manifest
from .frontend import SpecAugmentPolicy
from .languages import LanguageInfo, LanguageTable, corpus_table
from .model import ModelConfig, build_model
from .service import TrainerService, create_app, run_server
from .text import GraphemeVocab, build_vocab
from .trainer import (
    MixingSchedule,
    OptimizerConfig,
    ScheduleConfig,
    TrainConfig,
    Trainer,
    extend_model,
    extend_slots,
    natural_schedule,
)
from .wer import evaluate

_ENCODER_INT_KEYS = (
    "num_layers",
    "model_dim",
    "attention_heads",
    "conv_kernel",
    "ffn_expansion",
    "adapter_bottleneck",
    "num_groups",
    "language_vector_dim",
)
_DECODER_INT_KEYS = ("num_layers", "model_dim", "hidden_dim", "attention_heads")


def _parse_kv(path, sets):
    kv = {}
    if path:
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            kv[key.strip()] = value.strip()
    for item in sets or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        kv[key.strip()] = value.strip()
    return kv


class _KV:
    """Typed reads over the flat config; tracks unknown keys."""

    def __init__(self, kv):
        self.kv = dict(kv)

    def take(self, key, default, cast=str):
        if key not in self.kv:
            return default
        raw = self.kv.pop(key)
        if cast is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"{key}: expected true/false, got {raw!r}")
        try:
            return cast(raw)
        except ValueError:
            raise ValueError(f"{key}: cannot parse {raw!r} as {cast.__name__}") from None

    def done(self):
        if self.kv:
            raise ValueError(f"unknown config keys: {sorted(self.kv)}")


def resolve_table(spec, records=None):
    """--languages value: 'corpus15', a JSON file of rows, or derived from data."""
    if spec == "corpus15":
        return corpus_table()
    if spec:
        rows = json.loads(Path(spec).read_text(encoding="utf-8"))
        return LanguageTable.from_dict(rows)
    if not records:
        raise ValueError("no --languages given and no records to derive a table from")
    counts: dict[str, int] = {}
    for r in records:
        counts.setdefault(r.language_code, 0)
        counts[r.language_code] += 1
    return LanguageTable(
        LanguageInfo(code, "others", float(n), 0.0) for code, n in counts.items()
    )


def model_config_from(kv: _KV, vocab_size, table):
    enc = {"num_languages": len(table)}
    for key in _ENCODER_INT_KEYS:
        value = kv.take(f"encoder.{key}", None, int)
        if value is not None:
            enc[key] = value
    enc["conditioning"] = kv.take("encoder.conditioning", "bias_concat")
    dec = {}
    for key in _DECODER_INT_KEYS:
        value = kv.take(f"decoder.{key}", None, int)
        if value is not None:
            dec[key] = value
    dec["kind"] = kv.take("decoder.kind", "las_lstm")
    dec["routing"] = kv.take("decoder.routing", "single")
    if dec["routing"] == "per_family":
        dec["families"], _ = table.family_ids()
    from .model import DecoderConfig, EncoderConfig

    return ModelConfig(
        encoder=EncoderConfig(**enc),
        decoder=DecoderConfig(**dec),
        vocab_size=vocab_size,
        dtype=kv.take("model.dtype", "float32"),
    )


def train_config_from(kv: _KV):
    schedule = ScheduleConfig(
        peak_lr=kv.take("train.peak_lr", 3e-4, float),
        warmup_steps=kv.take("train.warmup_steps", 10_000, int),
    )
    optimizer = OptimizerConfig(kind=kv.take("train.optimizer", "adam"))
    return TrainConfig(
        batch_size=kv.take("train.batch_size", 32, int),
        num_shards=kv.take("train.num_shards", 1, int),
        schedule=schedule,
        optimizer=optimizer,
        seed=kv.take("train.seed", 0, int),
    )


# ------------------------------------------------------------------ commands


def cmd_build_vocab(args):
    records = load_manifest(args.manifest)
    vocab = build_vocab([(r.language_code, r.transcript) for r in records], args.min_count)
    vocab.save(args.out)
    print(f"{len(vocab)} tokens (min_count={args.min_count}) -> {args.out}")
    return 0


def _build_trainer(args):
    records = load_manifest(args.manifest)
    table = resolve_table(args.languages, records)
    vocab = GraphemeVocab.load(args.vocab)
    kv = _KV(_parse_kv(args.run_config, args.set))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    resumed = None
    if args.resume:
        resumed = load_checkpoint(args.resume)
        config = ModelConfig.from_dict(resumed.meta["model_config"])
        train_config = TrainConfig.from_dict(resumed.meta["train_config"])
        # architecture comes from the checkpoint; only training keys may change
        for key in list(kv.kv):
            if key.startswith(("encoder.", "decoder.", "model.")):
                raise ValueError(f"{key}: architecture is fixed by --resume")
    else:
        config = model_config_from(kv, len(vocab), table)
        train_config = train_config_from(kv)

    config_steps = kv.take("train.steps", 1000, int)
    steps = args.steps if args.steps is not None else config_steps
    mixing_kind = kv.take("train.mixing", "presence")
    augment = SpecAugmentPolicy() if kv.take("train.augment", False, bool) else None
    normalizer = None
    if kv.take("train.normalize", False, bool):
        normalizer = Normalizer.estimate(records)
        (out_dir / "normalizer.json").write_text(json.dumps(normalizer.to_dict()))
    checkpoint_every = kv.take("train.checkpoint_every", args.checkpoint_every, int)
    kv.done()

    if mixing_kind == "natural":
        mixing = natural_schedule(table)
    elif mixing_kind == "uniform":
        mixing = MixingSchedule((1.0,) * len(table))
    elif mixing_kind == "presence":
        mixing = None
    else:
        raise ValueError(f"train.mixing: unknown kind {mixing_kind!r}")

    model = build_model(config, seed=train_config.seed)
    trainer = Trainer(
        model,
        records,
        vocab,
        table,
        config=train_config,
        mixing=mixing,
        normalizer=normalizer,
        augment=augment,
        metrics_path=out_dir / "metrics.jsonl",
    )
    if resumed is not None:
        restore_trainer(trainer, resumed)
    return trainer, steps, out_dir, checkpoint_every


def cmd_train(args, serve=False):
    trainer, steps, out_dir, every = _build_trainer(args)
    service = TrainerService(trainer, out_dir / "checkpoints", checkpoint_every=every)
    if steps == 0:
        path, _ = service.checkpoint_now()
        print(f"initial checkpoint: {path}")
        return 0
    service.start(steps)
    if serve or args.serve:
        static = args.static
        if static is None and Path("dashboard/dist").is_dir():
            static = "dashboard/dist"
        port = args.port or int(os.environ.get("ASRLAB_PORT", "8000"))
        print(f"control surface on http://127.0.0.1:{port}")
        try:
            run_server(service, port, static_dir=static)
        finally:
            service.stop()
    else:
        service.wait()
    state = service.status()["state"]
    if state == "diverged":
        print(f"training diverged: {service.status()['error']}", file=sys.stderr)
        return 3
    path, step = service.checkpoint_now()
    print(f"done at step {step}; checkpoint: {path}")
    return 0


def cmd_serve(args):
    args.serve = True
    return cmd_train(args, serve=True)


def cmd_eval(args):
    if not Path(args.checkpoint).exists():
        print(f"error: checkpoint not found: {args.checkpoint}", file=sys.stderr)
        return 2
    ckpt = load_checkpoint(args.checkpoint)
    vocab = GraphemeVocab.load(args.vocab)
    if ckpt.vocab_hash != vocab.content_hash():
        print("error: vocabulary does not match the checkpoint", file=sys.stderr)
        return 2
    records = load_manifest(args.manifest)
    table = LanguageTable.from_dict(ckpt.language_table)
    model = model_from_checkpoint(ckpt)
    normalizer = None
    if args.normalizer:
        normalizer = Normalizer.from_dict(
            json.loads(Path(args.normalizer).read_text(encoding="utf-8"))
        )
    report = evaluate(
        model,
        records,
        vocab,
        table,
        beam_size=args.beam_size,
        normalizer=normalizer,
    )
    print(report.render())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            for row in report.to_records():
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
    return 0


def _plan_config(spec):
    if Path(spec).exists():
        return ModelConfig.from_dict(json.loads(Path(spec).read_text(encoding="utf-8"))), spec
    entry = catalogue_entry(spec)
    if entry.config is None:
        raise ValueError(f"catalogue entry {spec!r} has no buildable config ({entry.note})")
    return entry.config, entry.name


def cmd_plan(args):
    if args.list:
        for entry in catalogue():
            total = count_params(entry.config).total if entry.config else None
            if args.records:
                print(
                    json.dumps(
                        {
                            "kind": "entry",
                            "name": entry.name,
                            "params": total,
                            "stated": entry.stated_params,
                            "note": entry.note,
                        }
                    )
                )
            else:
                shown = f"{total:>14,}" if total is not None else f"{'-':>14}"
                stated = (
                    f"  (stated {entry.stated_params / 1e6:,.0f}M)"
                    if entry.stated_params
                    else ""
                )
                print(f"{entry.name:<24}{shown}{stated}")
        return 0
    if not args.config:
        print("error: plan needs --config NAME|FILE or --list", file=sys.stderr)
        return 2
    config, name = _plan_config(args.config)
    report = count_params(config)
    memory = check_memory(
        report,
        bytes_per_param=args.bytes_per_param,
        partitions=args.partitions,
        per_partition_limit=args.limit_gib * GiB,
        optimizer_kind=args.optimizer,
    )
    if args.records:
        for component, value in report.to_dict().items():
            print(json.dumps({"kind": "component", "name": component, "params": value}))
        print(
            json.dumps(
                {
                    "kind": "memory",
                    "per_partition_bytes": memory.per_partition_bytes,
                    "limit_bytes": memory.limit_bytes,
                    "replication": memory.replication,
                    "feasible": memory.feasible,
                }
            )
        )
    else:
        print(f"config: {name}")
        for component, value in report.to_dict().items():
            print(f"  {component:<20} {value:>14,}")
        verdict = "fits" if memory.feasible else "exceeds limit"
        print(
            f"memory: {args.bytes_per_param} B/param x {memory.replication}x ({args.optimizer}) "
            f"/ {args.partitions} partition(s) = "
            f"{memory.per_partition_bytes / GiB:.2f} GiB per partition "
            f"(limit {args.limit_gib:.1f} GiB) -> {verdict}"
        )
    return 0


def cmd_extend(args):
    ckpt = load_checkpoint(args.checkpoint)
    old_vocab = GraphemeVocab.load(args.vocab)
    if ckpt.vocab_hash != old_vocab.content_hash():
        print("error: vocabulary does not match the checkpoint", file=sys.stderr)
        return 2
    old_table = LanguageTable.from_dict(ckpt.language_table)
    new_table = resolve_table(args.languages)
    if not new_table.is_superset_of(old_table):
        print("error: new language table must extend the old one in place", file=sys.stderr)
        return 2

    records = load_manifest(args.manifest)
    new_vocab = old_vocab.extend(
        [(r.language_code, r.transcript) for r in records], min_count=args.min_count
    )
    old_config = ModelConfig.from_dict(ckpt.meta["model_config"])
    encoder = replace(
        old_config.encoder,
        num_languages=len(new_table),
        language_vector_dim=max(old_config.encoder.language_vector_dim, len(new_table)),
    )
    decoder = old_config.decoder
    if decoder.routing == "per_family":
        families, _ = new_table.family_ids()
        for lang, fam in decoder.families.items():
            if families.get(lang) != fam:
                print(
                    f"error: family table would reroute language {lang}", file=sys.stderr
                )
                return 2
        decoder = replace(decoder, families=families)
    new_config = replace(
        old_config, encoder=encoder, decoder=decoder, vocab_size=len(new_vocab)
    )

    old_model = model_from_checkpoint(ckpt)
    new_model = extend_model(old_model, new_config, seed=args.seed)

    nested = {"step": int(ckpt.arrays["optim/step"][0])}
    for flat, arr in ckpt.arrays.items():
        if not flat.startswith("optim/") or flat == "optim/step":
            continue
        name, _, key = flat[len("optim/") :].rpartition("/")
        nested.setdefault(name, {})[key] = arr
    slots = extend_slots(nested, new_model, policy=args.slots)
    step = int(slots.get("step", 0))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    new_vocab.save(out_dir / "vocab.txt")
    (out_dir / "languages.json").write_text(json.dumps(new_table.to_dict(), indent=2))

    arrays = {f"model/{n}": p.data.copy() for n, p in new_model.named_parameters()}
    arrays["optim/step"] = np.asarray([step], dtype=np.int64)
    for name, slot in slots.items():
        if name == "step":
            continue
        for key, arr in slot.items():
            arrays[f"optim/{name}/{key}"] = arr
    mixing = natural_schedule(new_table)
    meta = {
        "step": step,
        "train_config": ckpt.meta["train_config"],
        "model_config": new_config.to_dict(),
        "mixing": list(mixing.weights),
        "mixing_history": [{"step": step + 1, "weights": list(mixing.probabilities())}],
        "rng_state": ckpt.meta["rng_state"],
    }
    path = out_dir / "extended.ckpt"
    save_checkpoint(path, meta, arrays, new_vocab.content_hash(), new_table.to_dict())
    print(
        f"{len(old_table)} -> {len(new_table)} languages, "
        f"{len(old_vocab)} -> {len(new_vocab)} tokens, "
        f"{new_model.num_params():,} params -> {path}"
    )
    return 0


# --------------------------------------------------------------------- main


def _add_train_args(sp):
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--languages", default=None, help="JSON table file or 'corpus15'")
    sp.add_argument("--run-config", default=None, help="flat key=value file")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--resume", default=None, help="checkpoint to continue from")
    sp.add_argument("--checkpoint-every", type=int, default=0)
    sp.add_argument("--port", type=int, default=None)
    sp.add_argument("--static", default=None, help="directory of dashboard assets")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="asrlab", description="multilingual ASR laboratory"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build-vocab", help="grapheme inventory from a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--min-count", type=int, default=1)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_build_vocab)

    sp = sub.add_parser("train", help="run the training loop")
    _add_train_args(sp)
    sp.add_argument("--serve", action="store_true", help="expose the control surface")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("serve", help="train with the control surface on")
    _add_train_args(sp)
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("eval", help="decode a manifest and report WER")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--beam-size", type=int, default=4)
    sp.add_argument("--normalizer", default=None)
    sp.add_argument("--report", default=None, help="write line-delimited records here")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("plan", help="parameter counts and memory arithmetic")
    sp.add_argument("--config", default=None, help="catalogue name or ModelConfig JSON file")
    sp.add_argument("--list", action="store_true", help="show the whole catalogue")
    sp.add_argument("--records", action="store_true", help="line-delimited output")
    sp.add_argument("--bytes-per-param", type=int, default=4)
    sp.add_argument("--partitions", type=int, default=1)
    sp.add_argument("--optimizer", default="adafactor")
    sp.add_argument("--limit-gib", type=float, default=16.0)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("extend", help="warm-start a grown model from a checkpoint")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--vocab", required=True, help="vocabulary the checkpoint was trained with")
    sp.add_argument("--manifest", required=True, help="corpus that introduces the new languages")
    sp.add_argument("--languages", required=True, help="extended table (JSON or 'corpus15')")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--slots", default="reset", choices=("reset", "copy"))
    sp.add_argument("--min-count", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_extend)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
