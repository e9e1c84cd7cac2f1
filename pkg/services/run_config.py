"""JSON run configuration: profile, model dimensions, training recipe, synthetic spec, paths."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field, ValidationError, validator

from config import Config
from dataio.synthetic import SyntheticSpec
from errors import ConfigurationError
from model.models import PROFILE_DIMS, ModelConfig, Variant, parse_variant
from training.trainer import TrainConfig

logger = logging.getLogger("SSGRL.Config")

MODEL_OVERRIDES = ("variant", "seed")
TRAIN_OVERRIDES = ("epochs", "lr", "batch_size")


class ModelSection(BaseModel):
    """Model keys of a run file; dimensions left out come from the profile or the data."""

    C: Optional[int] = Field(None, ge=1)
    W: Optional[int] = Field(None, ge=1)
    H: Optional[int] = Field(None, ge=1)
    N: Optional[int] = Field(None, ge=1)
    d_s: Optional[int] = Field(None, ge=1)
    d1: Optional[int] = Field(None, ge=1)
    d2: Optional[int] = Field(None, ge=1)
    d_h: Optional[int] = Field(None, ge=1)
    d_o: Optional[int] = Field(None, ge=1)
    T: Optional[int] = Field(None, ge=0)
    variant: Variant = Variant.FULL
    seed: int = Field(0, ge=0)

    class Config:
        extra = "forbid"

    @validator("variant", pre=True)
    def _known_variant(cls, value):
        return parse_variant(value)


class PathsSection(BaseModel):
    data_dir: Optional[str] = None
    checkpoint: Optional[str] = None


class RunConfig(BaseModel):
    profile: str = Field(default_factory=lambda: Config.DEFAULT_PROFILE)
    model: ModelSection = Field(default_factory=ModelSection)
    train: TrainConfig = Field(default_factory=TrainConfig)
    synthetic: Optional[SyntheticSpec] = None
    paths: PathsSection = Field(default_factory=PathsSection)

    @validator("profile")
    def _known_profile(cls, value):
        value = str(value).strip().lower()
        if value not in PROFILE_DIMS:
            raise ValueError(f"unknown profile '{value}' (expected one of: {', '.join(PROFILE_DIMS)})")
        return value

    @validator("model")
    def _respect_profile(cls, section, values):
        profile = values.get("profile")
        if profile is None:
            return section
        for name, pinned in PROFILE_DIMS[profile].items():
            given = getattr(section, name)
            if given is not None and given != pinned:
                raise ValueError(f"profile '{profile}' pins {name}={pinned}, configuration sets {name}={given}")
        return section

    def model_config(
        self,
        C: Optional[int] = None,
        W: Optional[int] = None,
        H: Optional[int] = None,
        N: Optional[int] = None,
        d_s: Optional[int] = None,
    ) -> ModelConfig:
        """Profile dimensions plus data-derived C, W, H; declared values must agree with the data.

        ``N`` and ``d_s`` are the observed channel count and embedding width. They are checked
        against the profile here so a mismatch fails before any parameter is allocated.
        """
        values: Dict[str, Any] = dict(PROFILE_DIMS[self.profile])
        for name, observed in (("N", N), ("d_s", d_s)):
            if observed is not None and observed != values[name]:
                raise ConfigurationError(
                    f"profile '{self.profile}' expects {name}={values[name]} but the data has {name}={observed}"
                )
        for name, observed in (("C", C), ("W", W), ("H", H)):
            declared = getattr(self.model, name)
            if declared is not None and observed is not None and declared != observed:
                raise ConfigurationError(f"configuration sets {name}={declared} but the data has {name}={observed}")
            value = declared if declared is not None else observed
            if value is None:
                raise ConfigurationError(f"{name} is neither configured nor available from the data")
            values[name] = value
        values["variant"] = self.model.variant
        values["seed"] = self.model.seed
        return ModelConfig.create(**values)


def parse_run_config(raw: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("run configuration must be a JSON object")
    raw = json.loads(json.dumps(raw))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in MODEL_OVERRIDES:
            raw.setdefault("model", {})[key] = value
        elif key in TRAIN_OVERRIDES:
            raw.setdefault("train", {})[key] = value
        else:
            raise ConfigurationError(f"'{key}' cannot be overridden from the command line")
    try:
        return RunConfig(**raw)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid run configuration: {exc}") from None


def load_run_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read a run file (or start from defaults when ``path`` is None) and apply flag overrides."""
    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not valid JSON: {exc}") from None
    run = parse_run_config(raw, overrides)
    logger.info("⚙️ [CONFIG] 运行配置: profile=%s variant=%s seed=%d", run.profile, run.model.variant.value, run.model.seed)
    return run
