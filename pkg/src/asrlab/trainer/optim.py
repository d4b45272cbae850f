"""Learning-rate schedule and optimizers.

The update rule is a pure function from (slots, grads, lr) to (slots,
deltas), so checkpointing the slot dict is enough to resume a run
bit-exactly.  ``Adam`` and ``Adafactor`` wrap that core with parameter
bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..autograd import Parameter


@dataclass(frozen=True)
class ScheduleConfig:
    peak_lr: float = 3e-4
    warmup_steps: int = 10_000

    def __post_init__(self) -> None:
        if self.peak_lr <= 0:
            raise ValueError("peak_lr must be positive")
        if self.warmup_steps < 1:
            raise ValueError("warmup_steps must be at least 1")


def lr_at(step: int, schedule: ScheduleConfig) -> float:
    """Linear warmup to ``peak_lr`` then inverse-sqrt decay.

    The two pieces meet at ``warmup_steps`` where both equal the peak.
    """
    if step < 0:
        raise ValueError("step must be non-negative")
    if step == 0:
        return 0.0
    w = schedule.warmup_steps
    return schedule.peak_lr * min(step / w, math.sqrt(w / step))


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    # adafactor-only knobs
    factored_eps: float = 1e-30
    clip_threshold: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("adam", "adafactor"):
            raise ValueError(f"unknown optimizer kind: {self.kind!r}")
        for field in ("beta1", "beta2"):
            v = getattr(self, field)
            if not 0 <= v < 1:
                raise ValueError(f"{field} must be in [0, 1)")
        if self.clip_threshold <= 0:
            raise ValueError("clip_threshold must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "factored_eps": self.factored_eps,
            "clip_threshold": self.clip_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        return cls(**d)


def adam_config() -> OptimizerConfig:
    return OptimizerConfig(kind="adam", beta1=0.9, beta2=0.999)


def adafactor_config() -> OptimizerConfig:
    return OptimizerConfig(kind="adafactor", beta1=0.9, beta2=0.99)


def _adam_param(slot, g, config, lr, step):
    if slot is None:
        slot = {"m": np.zeros_like(g), "v": np.zeros_like(g)}
    m = config.beta1 * slot["m"] + (1 - config.beta1) * g
    v = config.beta2 * slot["v"] + (1 - config.beta2) * g * g
    m_hat = m / (1 - config.beta1**step)
    v_hat = v / (1 - config.beta2**step)
    delta = -lr * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return {"m": m, "v": v}, delta.astype(g.dtype)


def _adafactor_param(slot, g, config, lr, step):
    factored = g.ndim == 2
    if slot is None:
        if factored:
            slot = {
                "row": np.zeros(g.shape[0], dtype=g.dtype),
                "col": np.zeros(g.shape[1], dtype=g.dtype),
                "m": np.zeros_like(g),
            }
        else:
            slot = {"v": np.zeros_like(g), "m": np.zeros_like(g)}
    g2 = g.astype(np.float64) ** 2 + config.factored_eps
    correction = 1 - config.beta2**step
    if factored:
        row = config.beta2 * slot["row"].astype(np.float64) + (1 - config.beta2) * g2.sum(axis=1)
        col = config.beta2 * slot["col"].astype(np.float64) + (1 - config.beta2) * g2.sum(axis=0)
        row_hat = row / correction
        col_hat = col / correction
        # rank-1 reconstruction of the second moment: outer(row, col) / total,
        # where total is the bias-corrected sum of squared gradients.
        v_hat = np.outer(row_hat, col_hat) / row_hat.sum()
        new_second = {"row": row.astype(g.dtype), "col": col.astype(g.dtype)}
    else:
        v = config.beta2 * slot["v"].astype(np.float64) + (1 - config.beta2) * g2
        v_hat = v / correction
        new_second = {"v": v.astype(g.dtype)}
    u = g / np.sqrt(v_hat)
    rms = math.sqrt(float(np.mean(u * u)))
    u = u / max(1.0, rms / config.clip_threshold)
    m = config.beta1 * slot["m"] + (1 - config.beta1) * u
    delta = -lr * m
    return {**new_second, "m": m.astype(g.dtype)}, delta.astype(g.dtype)


def optimizer_update(
    slots: dict,
    grads: dict[str, np.ndarray],
    config: OptimizerConfig,
    lr: float,
) -> tuple[dict, dict[str, np.ndarray]]:
    """One optimizer step as a pure function.

    ``slots`` carries the step counter plus per-parameter state; pass ``{}``
    for a fresh run.  Returns the advanced slots and the additive parameter
    deltas, leaving the inputs untouched.
    """
    step = int(slots.get("step", 0)) + 1
    fn = _adam_param if config.kind == "adam" else _adafactor_param
    new_slots: dict = {"step": step}
    deltas = {}
    for name in sorted(grads):
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise ArithmeticError(f"non-finite gradient for {name}")
        new_slots[name], deltas[name] = fn(slots.get(name), g, config, lr, step)
    return new_slots, deltas


class _Optimizer:
    """Stateful wrapper binding the functional update to named parameters."""

    def __init__(self, params: dict[str, Parameter], config: OptimizerConfig):
        self.params = dict(params)
        self.config = config
        self.slots: dict = {}

    @property
    def step_count(self) -> int:
        return int(self.slots.get("step", 0))

    def step(self, lr: float) -> None:
        grads = {}
        for name, p in self.params.items():
            if p.grad is None:
                raise ValueError(f"parameter {name} has no gradient")
            grads[name] = p.grad
        self.slots, deltas = optimizer_update(self.slots, grads, self.config, lr)
        for name, p in self.params.items():
            p.data += deltas[name]

    def slot_floats(self) -> int:
        """Total scalars held in optimizer state, for memory accounting."""
        total = 0
        for name, slot in self.slots.items():
            if name == "step":
                continue
            total += sum(int(a.size) for a in slot.values())
        return total

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Flatten slots to named arrays for checkpointing."""
        out = {"step": np.asarray([self.step_count], dtype=np.int64)}
        for name, slot in self.slots.items():
            if name == "step":
                continue
            for key, arr in slot.items():
                out[f"{name}/{key}"] = arr
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        slots: dict = {"step": int(arrays["step"][0])}
        for flat, arr in arrays.items():
            if flat == "step":
                continue
            name, _, key = flat.rpartition("/")
            slots.setdefault(name, {})[key] = np.array(arr)
        self.slots = slots


class Adam(_Optimizer):
    def __init__(self, params: dict[str, Parameter], config: OptimizerConfig | None = None):
        super().__init__(params, config or adam_config())


class Adafactor(_Optimizer):
    def __init__(self, params: dict[str, Parameter], config: OptimizerConfig | None = None):
        super().__init__(params, config or adafactor_config())


def make_optimizer(params: dict[str, Parameter], config: OptimizerConfig) -> _Optimizer:
    return Adam(params, config) if config.kind == "adam" else Adafactor(params, config)
