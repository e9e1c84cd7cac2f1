"""Training loop: seeded shuffling, summed batch loss, Adam, plateau decay."""
from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from tqdm import tqdm

from dataio.dataset import Sample
from errors import ConfigurationError, InputError, NumericError, ParseError
from model.checkpoint import save_checkpoint
from model.network import SSGRLModel, bce_loss

from .optimizer import Adam, PlateauDecay

logger = logging.getLogger("SSGRL.Train")


class TrainConfig(BaseModel):
    epochs: int = Field(200, ge=0)
    batch_size: int = Field(4, ge=1)
    lr: float = Field(1e-5, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    plateau_patience: int = Field(5, ge=1)
    plateau_threshold: float = Field(1e-4, ge=0.0)
    shuffle_seed: int = Field(0, ge=0)
    record_wall_time: bool = True
    show_progress: bool = False

    class Config:
        allow_mutation = False

    @classmethod
    def create(cls, **values: Any) -> "TrainConfig":
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid training configuration: {exc}") from None


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    lr: float
    wall_ms: int

    def to_line(self) -> str:
        return f"{self.epoch}\t{self.loss:.17g}\t{self.lr:.17g}\t{self.wall_ms}"

    @classmethod
    def from_line(cls, line: str, line_number: int) -> "EpochRecord":
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(parts)}", line=line_number)
        try:
            return cls(epoch=int(parts[0]), loss=float(parts[1]), lr=float(parts[2]), wall_ms=int(parts[3]))
        except ValueError as exc:
            raise ParseError(str(exc), line=line_number) from None


@dataclass
class TrainingLog:
    records: List[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final_loss(self) -> Optional[float]:
        return self.records[-1].loss if self.records else None

    def to_text(self) -> str:
        return "".join(record.to_line() + "\n" for record in self.records)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp_path = path.with_name(path.name + ".tmp")
        with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.to_text())
        os.replace(tmp_path, path)
        return path

    @classmethod
    def read(cls, path: Path) -> "TrainingLog":
        log = cls()
        for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
            if raw:
                log.append(EpochRecord.from_line(raw, line_number))
        return log


@dataclass
class TrainingResult:
    log: TrainingLog
    initial_loss: float
    checkpoint_path: Optional[Path] = None
    log_path: Optional[Path] = None

    @property
    def final_loss(self) -> float:
        return self.log.final_loss if len(self.log) else self.initial_loss


def diagnostic_path(checkpoint_path: Path) -> Path:
    checkpoint_path = Path(checkpoint_path)
    return checkpoint_path.with_name(checkpoint_path.name + ".diag")


def mean_loss(model: SSGRLModel, dataset: Sequence[Sample]) -> float:
    total = 0.0
    for sample in dataset:
        total += bce_loss(model.forward(sample.feature_map).scores, sample.labels).item()
    return total / len(dataset)


def _batch_step(model: SSGRLModel, batch: Sequence[Sample], optimizer: Adam) -> float:
    """Accumulate per-sample gradients in batch order, then take one optimizer step."""
    optimizer.zero_grad()
    batch_loss = 0.0
    for sample in batch:
        loss = bce_loss(model.forward(sample.feature_map).scores, sample.labels)
        value = loss.item()
        if not math.isfinite(value):
            raise NumericError(f"loss became non-finite ({value}) on sample '{sample.sample_id}'")
        loss.backward()
        batch_loss += value
    optimizer.step()
    return batch_loss


def train(
    dataset: Sequence[Sample],
    model: SSGRLModel,
    cfg: TrainConfig,
    checkpoint_path: Optional[Path] = None,
    log_path: Optional[Path] = None,
) -> TrainingResult:
    if not dataset:
        raise InputError("cannot train on an empty dataset")
    for sample in dataset:
        if sample.labels.shape != (model.config.C,):
            raise ConfigurationError(
                f"sample '{sample.sample_id}' has {sample.labels.shape[0]} labels, model has C={model.config.C}"
            )

    optimizer = Adam(model.params.values(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps)
    schedule = PlateauDecay(patience=cfg.plateau_patience, threshold=cfg.plateau_threshold)
    rng = np.random.default_rng(cfg.shuffle_seed)
    log = TrainingLog()
    initial_loss = mean_loss(model, dataset)
    logger.info(
        "🏋️ [TRAIN] 开始训练: %d 个样本, %d 轮, batch=%d, lr=%.3g, 初始损失 %.6f",
        len(dataset),
        cfg.epochs,
        cfg.batch_size,
        cfg.lr,
        initial_loss,
    )

    try:
        for epoch in tqdm(range(1, cfg.epochs + 1), desc="train", disable=not cfg.show_progress):
            started = time.perf_counter()
            order = rng.permutation(len(dataset))
            epoch_loss = 0.0
            for start in range(0, len(order), cfg.batch_size):
                batch = [dataset[int(index)] for index in order[start:start + cfg.batch_size]]
                epoch_loss += _batch_step(model, batch, optimizer)
            epoch_loss /= len(dataset)
            # 记录的是本轮实际使用的学习率
            lr_used = optimizer.lr
            schedule.step(epoch_loss, optimizer)
            wall_ms = int(round((time.perf_counter() - started) * 1000)) if cfg.record_wall_time else 0
            log.append(EpochRecord(epoch=epoch, loss=epoch_loss, lr=lr_used, wall_ms=wall_ms))
            logger.info("[TRAIN] 第 %d 轮 损失 %.6f 学习率 %.3g", epoch, epoch_loss, lr_used)
    except NumericError:
        if checkpoint_path is not None:
            diag = diagnostic_path(checkpoint_path)
            save_checkpoint(diag, model.config, model.params)
            logger.error("❌ [TRAIN] 数值异常, 诊断检查点已写入 %s", diag)
        if log_path is not None:
            log.write(log_path)
        raise

    if log_path is not None:
        log.write(log_path)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, model.config, model.params)
    return TrainingResult(
        log=log,
        initial_loss=initial_loss,
        checkpoint_path=Path(checkpoint_path) if checkpoint_path is not None else None,
        log_path=Path(log_path) if log_path is not None else None,
    )
