from .optimizer import Adam, AdamState, PlateauDecay, adam_step
from .trainer import EpochRecord, TrainConfig, TrainingLog, TrainingResult, diagnostic_path, mean_loss, train

__all__ = [
    "Adam",
    "AdamState",
    "EpochRecord",
    "PlateauDecay",
    "TrainConfig",
    "TrainingLog",
    "TrainingResult",
    "adam_step",
    "diagnostic_path",
    "mean_loss",
    "train",
]
