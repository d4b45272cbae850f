"""Training loop: weighted sampling, gradient steps, metrics, live mixing.

The loop owns a single RNG whose state is part of the checkpoint, so a
restored run replays the exact batch sequence it would have seen.  Mixing
weight changes are queued and applied only at batch boundaries, and every
application is recorded in an audit history.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .. import autograd as ag
from ..data import build_batch, group_by_language
from ..frontend import SpecAugmentPolicy
from ..languages import LanguageTable
from .optim import OptimizerConfig, ScheduleConfig, adam_config, lr_at, make_optimizer
from .sampling import MixingSchedule, sample_batch


class TrainingDiverged(ArithmeticError):
    """Raised when a step produces a non-finite loss or gradient."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    num_shards: int = 1
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    optimizer: OptimizerConfig = field(default_factory=adam_config)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not 1 <= self.num_shards <= self.batch_size:
            raise ValueError("num_shards must be in [1, batch_size]")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "num_shards": self.num_shards,
            "schedule": {
                "peak_lr": self.schedule.peak_lr,
                "warmup_steps": self.schedule.warmup_steps,
            },
            "optimizer": self.optimizer.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(
            batch_size=d["batch_size"],
            num_shards=d["num_shards"],
            schedule=ScheduleConfig(**d["schedule"]),
            optimizer=OptimizerConfig.from_dict(d["optimizer"]),
            seed=d["seed"],
        )


def _shard_bounds(n: int, shards: int) -> list[tuple[int, int]]:
    sizes = [n // shards + (1 if i < n % shards else 0) for i in range(shards)]
    bounds, start = [], 0
    for s in sizes:
        if s:
            bounds.append((start, start + s))
        start += s
    return bounds


class Trainer:
    def __init__(
        self,
        model,
        records,
        vocab,
        table: LanguageTable,
        config: TrainConfig | None = None,
        mixing: MixingSchedule | None = None,
        normalizer=None,
        augment: SpecAugmentPolicy | None = None,
        metrics_path=None,
    ):
        self.model = model
        self.vocab = vocab
        self.table = table
        self.config = config or TrainConfig()
        self.groups = group_by_language(records, table)
        if mixing is None:
            present = [1.0 if self.groups.get(i) else 0.0 for i in range(len(table.codes))]
            mixing = MixingSchedule(tuple(present))
        self.mixing = mixing
        self.normalizer = normalizer
        self.augment = augment
        self.metrics_path = metrics_path
        self.rng = np.random.default_rng(self.config.seed)
        self.optimizer = make_optimizer(dict(model.named_parameters()), self.config.optimizer)
        self._pending_mixing: list[dict[int, float]] = []
        # audit rows: "step" is the first step sampled under those weights
        self.mixing_history = [{"step": 1, "weights": list(self.mixing.probabilities())}]
        self.history: list[dict] = []

    @property
    def step_count(self) -> int:
        return self.optimizer.step_count

    def request_mixing(self, updates: dict[int, float]) -> MixingSchedule:
        """Queue a weight change for the next batch boundary.

        Validates eagerly (against the schedule as it will stand once all
        queued changes land) so a bad request fails at the call site, and
        returns that resulting schedule.
        """
        preview = self.mixing
        for queued in self._pending_mixing:
            preview = preview.replaced(queued)
        preview = preview.replaced(updates)
        self._pending_mixing.append(dict(updates))
        return preview

    def _apply_pending_mixing(self) -> None:
        # one audit row per request, even when several land on one boundary
        for updates in self._pending_mixing:
            self.mixing = self.mixing.replaced(updates)
            self.mixing_history.append(
                {"step": self.step_count + 1, "weights": list(self.mixing.probabilities())}
            )
        self._pending_mixing.clear()

    def _batch_from(self, records):
        return build_batch(
            records,
            self.vocab,
            self.table,
            normalizer=self.normalizer,
            augment_policy=self.augment,
            rng=self.rng,
        )

    def step(self) -> dict:
        """Run one optimizer step and return its metrics row."""
        self._apply_pending_mixing()
        picked = sample_batch(self.groups, self.mixing, self.config.batch_size, self.rng)
        bounds = _shard_bounds(len(picked), self.config.num_shards)
        shards = [self._batch_from(picked[a:b]) for a, b in bounds]
        token_counts = [int((s["target_lengths"] - 1).sum()) for s in shards]
        total_tokens = sum(token_counts)

        step = self.step_count + 1
        self.model.zero_grad()
        loss_value = 0.0
        lang_sum: dict[int, float] = {}
        lang_tok: dict[int, int] = {}
        for shard, tokens in zip(shards, token_counts):
            part, aux = self.model.loss(shard)
            if not np.isfinite(part.data):
                ids = [u for s in shards for u in s["utterance_ids"]]
                raise TrainingDiverged(
                    f"non-finite loss at step {step}; batch utterances: {ids}"
                )
            weighted = ag.mul(part, tokens / total_tokens)
            weighted.backward()
            loss_value += float(weighted.data)
            for lang, mean in aux["per_language_loss"].items():
                n = aux["per_language_tokens"][lang]
                lang_sum[lang] = lang_sum.get(lang, 0.0) + mean * n
                lang_tok[lang] = lang_tok.get(lang, 0) + n

        lr = lr_at(step, self.config.schedule)
        try:
            self.optimizer.step(lr)
        except ArithmeticError as e:
            ids = [u for s in shards for u in s["utterance_ids"]]
            raise TrainingDiverged(f"{e} at step {step}; batch utterances: {ids}") from e

        row = {
            "step": step,
            "lr": lr,
            "loss": loss_value,
            "tokens": total_tokens,
            "per_language_loss": {
                self.table.codes[lang]: lang_sum[lang] / max(lang_tok[lang], 1)
                for lang in sorted(lang_sum)
            },
        }
        self.history.append(row)
        if self.metrics_path is not None:
            with open(self.metrics_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(row) + "\n")
        return row

    def run(self, num_steps: int, should_stop=None) -> list[dict]:
        rows = []
        for _ in range(num_steps):
            if should_stop is not None and should_stop():
                break
            rows.append(self.step())
        return rows

    def checkpoint_state(self) -> tuple[dict, dict[str, np.ndarray]]:
        """Everything needed to resume bit-exactly: (json meta, named arrays)."""
        meta = {
            "step": self.step_count,
            "train_config": self.config.to_dict(),
            "model_config": self.model.config.to_dict(),
            "mixing": list(self.mixing.weights),
            "mixing_history": self.mixing_history,
            "rng_state": _rng_state_to_json(self.rng),
        }
        arrays: dict[str, np.ndarray] = {}
        for name, p in self.model.named_parameters():
            arrays[f"model/{name}"] = p.data.copy()
        for name, arr in self.optimizer.state_arrays().items():
            arrays[f"optim/{name}"] = arr.copy()
        return meta, arrays

    def restore(self, meta: dict, arrays: dict[str, np.ndarray]) -> None:
        self.model.load_state_dict(
            {k[len("model/") :]: v for k, v in arrays.items() if k.startswith("model/")}
        )
        self.optimizer.load_state_arrays(
            {k[len("optim/") :]: v for k, v in arrays.items() if k.startswith("optim/")}
        )
        self.mixing = MixingSchedule(tuple(meta["mixing"]))
        self.mixing_history = [dict(h) for h in meta["mixing_history"]]
        self.rng = np.random.default_rng()
        self.rng.bit_generator.state = _rng_state_from_json(meta["rng_state"])


def _rng_state_to_json(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": {k: int(v) for k, v in state["state"].items()},
        "has_uint32": int(state.get("has_uint32", 0)),
        "uinteger": int(state.get("uinteger", 0)),
    }


def _rng_state_from_json(d: dict) -> dict:
    return {
        "bit_generator": d["bit_generator"],
        "state": {k: int(v) for k, v in d["state"].items()},
        "has_uint32": int(d["has_uint32"]),
        "uinteger": int(d["uinteger"]),
    }
