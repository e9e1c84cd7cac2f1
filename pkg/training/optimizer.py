"""Adam with bias correction and a divide-by-ten plateau schedule."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from engine import Parameter
from errors import ConfigurationError, NumericError

logger = logging.getLogger("SSGRL.Optim")


@dataclass
class AdamState:
    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "AdamState":
        return AdamState(
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            step=self.step,
            m={name: value.copy() for name, value in self.m.items()},
            v={name: value.copy() for name, value in self.v.items()},
        )


def _slot_name(param: Parameter, position: int) -> str:
    return param.name or f"param[{position}]"


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[Optional[np.ndarray]],
    state: AdamState,
) -> AdamState:
    """One update of every parameter in place; a missing gradient counts as zero."""
    if len(params) != len(grads):
        raise ConfigurationError(f"{len(params)} parameters but {len(grads)} gradients")

    checked = []
    for position, (param, grad) in enumerate(zip(params, grads)):
        name = _slot_name(param, position)
        grad = np.zeros_like(param.data) if grad is None else np.asarray(grad, dtype=np.float64)
        if grad.shape != param.shape:
            raise ConfigurationError(f"gradient for '{name}' has shape {grad.shape}, parameter is {param.shape}")
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter '{name}'")
        checked.append((name, param, grad))

    state.step += 1
    beta1, beta2 = state.beta1, state.beta2
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, param, grad in checked:
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * (grad * grad)
        state.m[name] = m
        state.v[name] = v
        param.data -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return state


class Adam:
    def __init__(
        self,
        params: Iterable[Parameter],
        lr: float = 1e-5,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params: List[Parameter] = list(params)
        if lr <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {lr}")
        self.state = AdamState(lr=float(lr), beta1=float(betas[0]), beta2=float(betas[1]), eps=float(eps))

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = float(value)

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        adam_step(self.params, [param.grad for param in self.params], self.state)

    def state_dict(self) -> Dict[str, Any]:
        snapshot = self.state.copy()
        return {
            "step": snapshot.step,
            "lr": snapshot.lr,
            "betas": (snapshot.beta1, snapshot.beta2),
            "eps": snapshot.eps,
            "m": snapshot.m,
            "v": snapshot.v,
        }

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        shapes = {_slot_name(param, i): param.shape for i, param in enumerate(self.params)}
        for slot in ("m", "v"):
            for name, value in state[slot].items():
                if name not in shapes or value.shape != shapes[name]:
                    raise ConfigurationError(f"optimizer slot {slot}['{name}'] does not match any parameter")
        beta1, beta2 = state.get("betas", (self.state.beta1, self.state.beta2))
        self.state = AdamState(
            lr=float(state.get("lr", self.state.lr)),
            beta1=float(beta1),
            beta2=float(beta2),
            eps=float(state.get("eps", self.state.eps)),
            step=int(state["step"]),
            m={name: value.copy() for name, value in state["m"].items()},
            v={name: value.copy() for name, value in state["v"].items()},
        )


class PlateauDecay:
    """Divide the learning rate by ``divisor`` after ``patience`` epochs without relative improvement."""

    def __init__(self, patience: int = 5, threshold: float = 1e-4, divisor: float = 10.0):
        if patience < 1:
            raise ConfigurationError(f"plateau patience must be >= 1, got {patience}")
        self.patience = patience
        self.threshold = threshold
        self.divisor = divisor
        self.best: Optional[float] = None
        self.stale_epochs = 0

    def improved(self, loss: float) -> bool:
        return self.best is None or loss < self.best - self.threshold * abs(self.best)

    def step(self, loss: float, optimizer: Adam) -> bool:
        """Record one epoch's loss; returns True when the learning rate was cut."""
        if self.improved(loss):
            self.best = loss
            self.stale_epochs = 0
            return False
        self.stale_epochs += 1
        if self.stale_epochs < self.patience:
            return False
        previous = optimizer.lr
        optimizer.lr = previous / self.divisor
        self.stale_epochs = 0
        logger.info("📉 [TRAIN] 损失停滞于 %.6g, 学习率 %.3g -> %.3g", loss, previous, optimizer.lr)
        return True
