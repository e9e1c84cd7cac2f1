"""Configuration models for the recognition head."""
from __future__ import annotations

from enum import Enum
from typing import Any, Dict

from pydantic import BaseModel, Field, ValidationError, root_validator

from errors import ConfigurationError


class Variant(str, Enum):
    FULL = "full"
    NO_SD = "no_SD"
    NO_SD_CONCAT = "no_SD_concat"
    NO_SI = "no_SI"
    BASELINE = "baseline"


PROPAGATING_VARIANTS = (Variant.FULL, Variant.NO_SD, Variant.NO_SD_CONCAT)
DECOUPLING_VARIANTS = (Variant.FULL, Variant.NO_SI)

PROFILE_DIMS: Dict[str, Dict[str, int]] = {
    "paper": {"N": 2048, "d_s": 300, "d1": 1024, "d2": 1024, "d_h": 2048, "d_o": 2048, "T": 3},
    "toy": {"N": 8, "d_s": 5, "d1": 6, "d2": 6, "d_h": 8, "d_o": 8, "T": 2},
}


def parse_variant(value: Any) -> Variant:
    if isinstance(value, Variant):
        return value
    try:
        return Variant(str(value))
    except ValueError:
        known = ", ".join(variant.value for variant in Variant)
        raise ConfigurationError(f"unknown variant '{value}' (expected one of: {known})") from None


class ModelConfig(BaseModel):
    """Dimensions and switches of one model instance."""

    C: int = Field(..., ge=1)
    W: int = Field(..., ge=1)
    H: int = Field(..., ge=1)
    N: int = Field(..., ge=1)
    d_s: int = Field(..., ge=1)
    d1: int = Field(..., ge=1)
    d2: int = Field(..., ge=1)
    d_h: int = Field(..., ge=1)
    d_o: int = Field(..., ge=1)
    T: int = Field(3, ge=0)
    variant: Variant = Variant.FULL
    seed: int = Field(0, ge=0)

    class Config:
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def _hidden_matches_channels(cls, values):
        if values["d_h"] != values["N"]:
            raise ValueError(
                f"hidden dimension d_h={values['d_h']} must equal feature channels N={values['N']}"
            )
        return values

    @classmethod
    def create(cls, **values: Any) -> "ModelConfig":
        if "variant" in values:
            values["variant"] = parse_variant(values["variant"])
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid model configuration: {exc}") from None

    @classmethod
    def for_profile(cls, profile: str, **values: Any) -> "ModelConfig":
        if profile not in PROFILE_DIMS:
            raise ConfigurationError(f"unknown profile '{profile}'")
        merged = dict(PROFILE_DIMS[profile])
        merged.update(values)
        return cls.create(**merged)

    def with_updates(self, **values: Any) -> "ModelConfig":
        merged = self.dict()
        merged.update(values)
        return ModelConfig.create(**merged)
