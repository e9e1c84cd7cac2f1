"""Named parameter tensors of a model, in canonical order."""
from __future__ import annotations

import math
from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from engine import Parameter
from errors import ConfigurationError

from .models import DECOUPLING_VARIANTS, PROPAGATING_VARIANTS, ModelConfig, Variant

ParameterSpec = Tuple[str, Tuple[int, ...], int]

GATE_NAMES = ("W_z", "U_z", "W_r", "U_r", "W", "U")


def parameter_specs(config: ModelConfig) -> List[ParameterSpec]:
    """(name, shape, fan_in) for every parameter the configured variant uses."""
    C, N, d_s = config.C, config.N, config.d_s
    d1, d2, d_h, d_o = config.d1, config.d2, config.d_h, config.d_o
    specs: List[ParameterSpec] = []

    if config.variant in DECOUPLING_VARIANTS:
        specs += [
            ("decouple.U", (N, d1), N),
            ("decouple.V", (d_s, d1), d_s),
            ("decouple.P", (d1, d2), d1),
            ("decouple.b", (d2,), d1),
            ("decouple.W_a", (d2, 1), d2),
            ("decouple.b_a", (), d2),
        ]

    if config.variant == Variant.NO_SD_CONCAT:
        specs += [
            ("init.W", (N + d_s, d_h), N + d_s),
            ("init.b", (d_h,), N + d_s),
        ]

    if config.variant in PROPAGATING_VARIANTS:
        for gate in GATE_NAMES:
            if gate.startswith("W"):
                specs.append((f"propagate.{gate}", (2 * d_h, d_h), 2 * d_h))
            else:
                specs.append((f"propagate.{gate}", (d_h, d_h), d_h))
        specs += [
            ("output.W", (2 * d_h, d_o), 2 * d_h),
            ("output.b", (d_o,), 2 * d_h),
            ("heads.W", (C, d_o), d_o),
            ("heads.b", (C,), d_o),
        ]
    else:
        specs += [
            ("heads.W", (C, d_h), d_h),
            ("heads.b", (C,), d_h),
        ]
    return specs


class ParameterSet:
    def __init__(self, params: "OrderedDict[str, Parameter]"):
        self._params = params

    @classmethod
    def initialize(cls, config: ModelConfig, rng: Optional[np.random.Generator] = None) -> "ParameterSet":
        """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn in canonical order."""
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        params: "OrderedDict[str, Parameter]" = OrderedDict()
        for name, shape, fan_in in parameter_specs(config):
            bound = 1.0 / math.sqrt(fan_in)
            params[name] = Parameter(rng.uniform(-bound, bound, size=shape), name=name)
        return cls(params)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "ParameterSet":
        params: "OrderedDict[str, Parameter]" = OrderedDict()
        for name, shape, _ in parameter_specs(config):
            params[name] = Parameter(np.zeros(shape), name=name)
        return cls(params)

    def __getitem__(self, name: str) -> Parameter:
        try:
            return self._params[name]
        except KeyError:
            raise ConfigurationError(f"model has no parameter '{name}'") from None

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def values(self) -> List[Parameter]:
        return list(self._params.values())

    def items(self) -> List[Tuple[str, Parameter]]:
        return list(self._params.items())

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: param.shape for name, param in self._params.items()}

    def parameter_count(self) -> int:
        return sum(param.size for param in self._params.values())

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.zero_grad()

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self._params.items()}

    def restore(self, snapshot: Dict[str, np.ndarray]) -> None:
        for name, values in snapshot.items():
            self.assign(name, values)

    def assign(self, name: str, values) -> None:
        param = self[name]
        values = np.asarray(values, dtype=np.float64)
        if values.shape != param.shape:
            raise ConfigurationError(
                f"parameter '{name}' expects shape {param.shape}, got {values.shape}"
            )
        param.data[...] = values

    def check_layout(self, config: ModelConfig) -> None:
        expected = [(name, shape) for name, shape, _ in parameter_specs(config)]
        actual = [(name, param.shape) for name, param in self._params.items()]
        if expected != actual:
            raise ConfigurationError(
                f"parameter layout does not match variant '{config.variant.value}': "
                f"expected {expected}, got {actual}"
            )
