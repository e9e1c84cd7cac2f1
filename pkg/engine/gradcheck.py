"""Central finite-difference check of analytic gradients."""
from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, Sequence, Tuple

import numpy as np

from errors import InputError, NumericError

from .tensor import Parameter, Tensor, override_backward

logger = logging.getLogger("SSGRL.GradCheck")

LossFn = Callable[[], Tensor]

DENOMINATOR_FLOOR = 1e-8


@dataclass
class GradCheckReport:
    max_relative_error: float = 0.0
    worst_parameter: str = ""
    worst_index: Tuple[int, ...] = ()
    checked_entries: int = 0
    per_parameter: Dict[str, float] = field(default_factory=dict)

    def passed(self, tolerance: float) -> bool:
        return self.max_relative_error < tolerance


def relative_error(analytic: float, numeric: float) -> float:
    denominator = max(abs(analytic), abs(numeric), DENOMINATOR_FLOOR)
    return abs(analytic - numeric) / denominator


def _scalar_value(loss: Tensor) -> float:
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError(f"loss is not finite: {value}")
    return value


def grad_check_report(
    loss_fn: LossFn,
    params: Sequence[Parameter],
    step: float = 1e-5,
) -> GradCheckReport:
    if step <= 0:
        raise InputError(f"finite-difference step must be positive, got {step}")

    for param in params:
        param.zero_grad()
    loss = loss_fn()
    _scalar_value(loss)
    loss.backward()
    analytic = {
        id(param): (param.grad.copy() if param.grad is not None else np.zeros_like(param.data))
        for param in params
    }

    report = GradCheckReport()
    for position, param in enumerate(params):
        name = param.name or f"param[{position}]"
        worst = 0.0
        for index in np.ndindex(*param.data.shape):
            original = param.data[index]
            param.data[index] = original + step
            plus = _scalar_value(loss_fn())
            param.data[index] = original - step
            minus = _scalar_value(loss_fn())
            param.data[index] = original

            numeric = (plus - minus) / (2.0 * step)
            error = relative_error(float(analytic[id(param)][index]), numeric)
            report.checked_entries += 1
            worst = max(worst, error)
            if not report.worst_parameter or error > report.max_relative_error:
                report.max_relative_error = error
                report.worst_parameter = name
                report.worst_index = tuple(int(i) for i in index)
        report.per_parameter[name] = worst

    for param in params:
        param.zero_grad()
    logger.debug(
        "[GRADCHECK] %d 个元素, 最大误差 %.3e 位于 %s%s",
        report.checked_entries,
        report.max_relative_error,
        report.worst_parameter,
        list(report.worst_index),
    )
    return report


def grad_check(loss_fn: LossFn, params: Sequence[Parameter], step: float = 1e-5) -> float:
    """Worst relative error between analytic and central-difference gradients."""
    return grad_check_report(loss_fn, params, step).max_relative_error


def _wrong_tanh_backward(g, out, x):
    return (g * (1.0 + out * out),)


FAULTS = {"tanh": _wrong_tanh_backward}


@contextlib.contextmanager
def injected_fault(primitive: str = "tanh") -> Iterator[None]:
    if primitive not in FAULTS:
        raise InputError(f"no fault registered for primitive '{primitive}'")
    with override_backward(primitive, FAULTS[primitive]):
        yield
