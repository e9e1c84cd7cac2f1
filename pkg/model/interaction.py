"""Gated propagation of per-category states over the co-occurrence graph."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from engine import Tensor, add, concat, matmul, mul, reshape, sigmoid, sub, take_rows, tanh, transpose
from errors import DimensionError, InputError

from .cooccurrence import CooccurrenceGraph
from .params import ParameterSet

logger = logging.getLogger("SSGRL.Interaction")


@dataclass
class PropagationParams:
    """GRU-style gate weights; W-matrices read the 2*d_h message, U-matrices the d_h state."""

    W_z: Tensor
    U_z: Tensor
    W_r: Tensor
    U_r: Tensor
    W: Tensor
    U: Tensor

    @classmethod
    def from_parameters(cls, params: ParameterSet) -> "PropagationParams":
        return cls(
            W_z=params["propagate.W_z"],
            U_z=params["propagate.U_z"],
            W_r=params["propagate.W_r"],
            U_r=params["propagate.U_r"],
            W=params["propagate.W"],
            U=params["propagate.U"],
        )

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[0]

    def validate(self) -> None:
        d_h = self.hidden_dim
        for name in ("W_z", "W_r", "W"):
            if getattr(self, name).shape != (2 * d_h, d_h):
                raise DimensionError(
                    f"propagation parameter {name} has shape {getattr(self, name).shape}, expected {(2 * d_h, d_h)}"
                )
        for name in ("U_z", "U_r", "U"):
            if getattr(self, name).shape != (d_h, d_h):
                raise DimensionError(
                    f"propagation parameter {name} has shape {getattr(self, name).shape}, expected {(d_h, d_h)}"
                )


@dataclass
class HiddenStateSet:
    t: int
    states: Tensor

    @property
    def num_nodes(self) -> int:
        return self.states.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.states.shape[1]

    def numpy(self) -> np.ndarray:
        return self.states.numpy()


def init_states(category_features, hidden_dim: int) -> HiddenStateSet:
    features = category_features if isinstance(category_features, Tensor) else Tensor(category_features)
    if features.ndim != 2 or features.shape[1] != hidden_dim:
        raise DimensionError(
            f"category features of shape {features.shape} cannot seed {hidden_dim}-dimensional states"
        )
    return HiddenStateSet(t=0, states=features)


def aggregate(states: HiddenStateSet, graph: CooccurrenceGraph) -> Tensor:
    """Row c is [sum_c' A[c][c'] h_c', sum_c' A[c'][c] h_c'] (outgoing then incoming edges)."""
    if graph.num_categories != states.num_nodes:
        raise DimensionError(
            f"graph has {graph.num_categories} categories but there are {states.num_nodes} node states"
        )
    adjacency = Tensor(graph.matrix)
    outgoing = matmul(adjacency, states.states)
    incoming = matmul(transpose(adjacency), states.states)
    return concat(outgoing, incoming, axis=1)


def gated_update(msg, h_prev, params: PropagationParams) -> Tensor:
    """One gated step. Accepts a single node (1-D) or a stack of nodes (2-D rows)."""
    msg = msg if isinstance(msg, Tensor) else Tensor(msg)
    h_prev = h_prev if isinstance(h_prev, Tensor) else Tensor(h_prev)
    d_h = params.hidden_dim
    if msg.ndim != h_prev.ndim or msg.ndim not in (1, 2):
        raise DimensionError(f"message {msg.shape} and state {h_prev.shape} must both be 1-D or both 2-D")

    single = msg.ndim == 1
    if single:
        msg = reshape(msg, (1, msg.shape[0]))
        h_prev = reshape(h_prev, (1, h_prev.shape[0]))
    if msg.shape[1] != 2 * d_h or h_prev.shape[1] != d_h or msg.shape[0] != h_prev.shape[0]:
        raise DimensionError(
            f"gated update needs messages of width {2 * d_h} and states of width {d_h}, "
            f"got {msg.shape} and {h_prev.shape}"
        )

    z = sigmoid(add(matmul(msg, params.W_z), matmul(h_prev, params.U_z)))
    r = sigmoid(add(matmul(msg, params.W_r), matmul(h_prev, params.U_r)))
    candidate = tanh(add(matmul(msg, params.W), matmul(mul(r, h_prev), params.U)))
    ones = Tensor(np.ones(z.shape))
    h = add(mul(sub(ones, z), h_prev), mul(z, candidate))

    if single:
        return reshape(h, (d_h,))
    return h


def _nodewise_update(msg: Tensor, h_prev: Tensor, params: PropagationParams, order: Sequence[int]) -> Tensor:
    order = list(order)
    if sorted(order) != list(range(h_prev.shape[0])):
        raise InputError(f"node order {order} is not a permutation of 0..{h_prev.shape[0] - 1}")
    rows = {}
    for node in order:
        rows[node] = gated_update(take_rows(msg, [node]), take_rows(h_prev, [node]), params)
    return concat(*(rows[node] for node in range(h_prev.shape[0])), axis=0)


def propagate(
    init: HiddenStateSet,
    graph: CooccurrenceGraph,
    params: PropagationParams,
    T: int,
    node_order: Optional[Sequence[int]] = None,
) -> HiddenStateSet:
    """Run T synchronous steps; every step reads only the previous snapshot."""
    if T < 0:
        raise InputError(f"propagation steps must be >= 0, got {T}")
    params.validate()
    if init.hidden_dim != params.hidden_dim:
        raise DimensionError(
            f"states have dimension {init.hidden_dim}, parameters expect {params.hidden_dim}"
        )

    current = init
    for _ in range(T):
        msg = aggregate(current, graph)
        if node_order is None:
            states = gated_update(msg, current.states, params)
        else:
            states = _nodewise_update(msg, current.states, params, node_order)
        current = HiddenStateSet(t=current.t + 1, states=states)
    logger.debug("[PROPAGATE] %d 个节点, 传播 %d 步", init.num_nodes, T)
    return current
