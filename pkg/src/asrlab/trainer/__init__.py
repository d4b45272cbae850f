from .sampling import MixingSchedule, natural_schedule, rebalanced_schedule, sample_batch
from .optim import (
    Adafactor,
    Adam,
    OptimizerConfig,
    ScheduleConfig,
    adafactor_config,
    adam_config,
    lr_at,
    make_optimizer,
    optimizer_update,
)
from .loop import Trainer, TrainConfig, TrainingDiverged
from .extend import extend_model, extend_slots

__all__ = [
    "MixingSchedule",
    "natural_schedule",
    "rebalanced_schedule",
    "sample_batch",
    "Adafactor",
    "Adam",
    "OptimizerConfig",
    "ScheduleConfig",
    "adafactor_config",
    "adam_config",
    "lr_at",
    "make_optimizer",
    "optimizer_update",
    "Trainer",
    "TrainConfig",
    "TrainingDiverged",
    "extend_model",
    "extend_slots",
]
