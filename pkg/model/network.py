"""Forward pass of the recognition head and its training objective.

Variants:
    full          decouple -> propagate -> output head -> per-category heads
    no_SD         every node starts from the spatially averaged feature map
    no_SD_concat  nodes start from an affine map of [averaged features, embedding]
    no_SI         decoupled features go straight to the heads (no propagation)
    baseline      averaged features go straight to the heads
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from engine import (
    Tensor,
    add,
    affine,
    concat,
    mean_rows,
    mul,
    reduce_sum,
    sigmoid,
    softplus,
    sub,
    tanh,
    tile_rows,
)
from errors import ConfigurationError, DimensionError, InputError, NumericError

from .cooccurrence import CooccurrenceGraph
from .decoupling import AttentionMap, DecouplingParams, EmbeddingTable, FeatureMap, decouple
from .interaction import PropagationParams, init_states, propagate
from .models import DECOUPLING_VARIANTS, PROPAGATING_VARIANTS, ModelConfig, Variant, parse_variant
from .params import ParameterSet

logger = logging.getLogger("SSGRL.Model")

PROBABILITY_FLOOR = 1e-12


@dataclass
class ForwardTrace:
    """Intermediate values of one forward pass, kept for inspection."""

    category_features: Optional[np.ndarray] = None
    initial_states: Optional[np.ndarray] = None
    final_states: Optional[np.ndarray] = None
    outputs: Optional[np.ndarray] = None
    attention: Optional[AttentionMap] = None
    scores: Optional[np.ndarray] = None
    probabilities: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        def listed(value):
            return None if value is None else value.tolist()

        return {
            "category_features": listed(self.category_features),
            "initial_states": listed(self.initial_states),
            "final_states": listed(self.final_states),
            "outputs": listed(self.outputs),
            "attention": None
            if self.attention is None
            else {
                "categories": list(self.attention.categories),
                "weights": self.attention.weights.tolist(),
            },
            "scores": listed(self.scores),
            "probabilities": listed(self.probabilities),
        }


@dataclass
class Prediction:
    scores: Tensor
    probabilities: np.ndarray
    trace: Optional[ForwardTrace] = field(default=None, repr=False)

    @property
    def logits(self) -> np.ndarray:
        return self.scores.numpy()


@dataclass
class ClassifierParams:
    """Optional shared output layer plus C unshared one-unit heads (row c of heads_W)."""

    heads_W: Tensor
    heads_b: Tensor
    output_W: Optional[Tensor] = None
    output_b: Optional[Tensor] = None

    @classmethod
    def from_parameters(cls, params: ParameterSet, variant: Variant) -> "ClassifierParams":
        if variant in PROPAGATING_VARIANTS:
            return cls(
                heads_W=params["heads.W"],
                heads_b=params["heads.b"],
                output_W=params["output.W"],
                output_b=params["output.b"],
            )
        return cls(heads_W=params["heads.W"], heads_b=params["heads.b"])

    def output(self, final_states: Tensor, initial_states: Tensor) -> Tensor:
        return tanh(affine(concat(final_states, initial_states, axis=1), self.output_W, self.output_b))

    def heads(self, inputs: Tensor) -> Tensor:
        """s_c = <heads_W[c], inputs[c]> + heads_b[c] for every category row."""
        if inputs.shape != self.heads_W.shape:
            raise DimensionError(f"head inputs {inputs.shape} do not match head weights {self.heads_W.shape}")
        return add(reduce_sum(mul(inputs, self.heads_W), axis=1), self.heads_b)


def _pooled_rows(fm: FeatureMap, num_categories: int) -> Tensor:
    return tile_rows(mean_rows(Tensor(fm.locations())), num_categories)


def validate_inputs(
    fm: FeatureMap,
    emb: EmbeddingTable,
    graph: Optional[CooccurrenceGraph],
    params: ParameterSet,
    cfg: ModelConfig,
) -> None:
    """Reject any inconsistency between inputs and configuration before computing anything."""
    if (fm.width, fm.height, fm.channels) != (cfg.W, cfg.H, cfg.N):
        raise ConfigurationError(
            f"feature map is {fm.width}x{fm.height}x{fm.channels}, configuration expects {cfg.W}x{cfg.H}x{cfg.N}"
        )
    if emb.size != cfg.C or emb.dim != cfg.d_s:
        raise ConfigurationError(
            f"embedding table is {emb.size}x{emb.dim}, configuration expects {cfg.C}x{cfg.d_s}"
        )
    if cfg.variant in PROPAGATING_VARIANTS:
        if graph is None:
            raise ConfigurationError(f"variant '{cfg.variant.value}' needs a co-occurrence graph")
        if graph.num_categories != cfg.C:
            raise ConfigurationError(f"graph has {graph.num_categories} categories, configuration expects {cfg.C}")
        if graph.categories != emb.categories:
            raise ConfigurationError("graph and embedding table list different categories")
    params.check_layout(cfg)


def forward(
    fm: FeatureMap,
    emb: EmbeddingTable,
    graph: Optional[CooccurrenceGraph],
    params: ParameterSet,
    cfg: ModelConfig,
    debug: bool = False,
) -> Prediction:
    validate_inputs(fm, emb, graph, params, cfg)
    variant = cfg.variant
    trace = ForwardTrace() if debug else None
    classifier = ClassifierParams.from_parameters(params, variant)

    features = None
    if variant in DECOUPLING_VARIANTS:
        features, attention = decouple(fm, emb, DecouplingParams.from_parameters(params))
        if trace is not None:
            trace.category_features = features.numpy()
            trace.attention = attention

    if variant in PROPAGATING_VARIANTS:
        if variant == Variant.FULL:
            seed_states = features
        elif variant == Variant.NO_SD:
            seed_states = _pooled_rows(fm, cfg.C)
        else:
            joint = concat(_pooled_rows(fm, cfg.C), Tensor(emb.vectors), axis=1)
            seed_states = affine(joint, params["init.W"], params["init.b"])
        initial = init_states(seed_states, cfg.d_h)
        final = propagate(initial, graph, PropagationParams.from_parameters(params), cfg.T)
        outputs = classifier.output(final.states, initial.states)
        scores = classifier.heads(outputs)
        if trace is not None:
            trace.initial_states = initial.numpy()
            trace.final_states = final.numpy()
            trace.outputs = outputs.numpy()
    elif variant == Variant.NO_SI:
        scores = classifier.heads(features)
    else:
        scores = classifier.heads(_pooled_rows(fm, cfg.C))

    probabilities = sigmoid(scores.detach()).numpy()
    if trace is not None:
        trace.scores = scores.numpy()
        trace.probabilities = probabilities.copy()
    return Prediction(scores=scores, probabilities=probabilities, trace=trace)


def forward_variant(
    variant,
    fm: FeatureMap,
    emb: EmbeddingTable,
    graph: Optional[CooccurrenceGraph],
    params: ParameterSet,
    cfg: ModelConfig,
    debug: bool = False,
) -> Prediction:
    return forward(fm, emb, graph, params, cfg.with_updates(variant=parse_variant(variant)), debug=debug)


def _label_array(labels, shape) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != tuple(shape):
        raise DimensionError(f"labels of shape {labels.shape} do not match scores of shape {tuple(shape)}")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise InputError("labels must be 0 or 1")
    return labels


def bce_loss(scores, labels) -> Tensor:
    """Summed binary cross-entropy from logits: sum(softplus(s) - y * s)."""
    scores = scores if isinstance(scores, Tensor) else Tensor(scores)
    y = _label_array(labels, scores.shape)
    if not np.all(np.isfinite(scores.data)):
        raise NumericError("scores contain non-finite values")
    return reduce_sum(sub(softplus(scores), mul(Tensor(y), scores)))


def bce_from_probabilities(probabilities, labels) -> float:
    """Same objective evaluated on probabilities, with the log argument clamped away from 0."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = _label_array(labels, p.shape)
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise NumericError("probabilities must be finite and inside [0, 1]")
    p = np.clip(p, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    return float(-np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


class SSGRLModel:
    """Parameters bound to the fixed inputs (embeddings, graph) they were built for."""

    def __init__(
        self,
        config: ModelConfig,
        embeddings: EmbeddingTable,
        graph: Optional[CooccurrenceGraph],
        params: Optional[ParameterSet] = None,
    ):
        self.config = config
        self.embeddings = embeddings
        self.graph = graph
        self.params = params if params is not None else ParameterSet.initialize(config)
        self.params.check_layout(config)
        logger.info(
            "🧠 [MODEL] variant=%s C=%d N=%d d_h=%d T=%d 参数量=%d",
            config.variant.value,
            config.C,
            config.N,
            config.d_h,
            config.T,
            self.params.parameter_count(),
        )

    @property
    def categories(self):
        return list(self.embeddings.categories)

    def forward(self, fm: FeatureMap, debug: bool = False) -> Prediction:
        return forward(fm, self.embeddings, self.graph, self.params, self.config, debug=debug)

    def loss(self, fm: FeatureMap, labels) -> Tensor:
        return bce_loss(self.forward(fm).scores, labels)

    def predict_proba(self, feature_maps) -> np.ndarray:
        rows = [self.forward(fm).probabilities for fm in feature_maps]
        if not rows:
            return np.zeros((0, self.config.C))
        return np.stack(rows)


def write_debug_dump(trace: ForwardTrace, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(trace.to_dict(), handle, indent=2)
        handle.write("\n")
    os.replace(tmp_path, path)
    return path
