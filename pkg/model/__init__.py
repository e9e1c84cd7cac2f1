"""Recognition head: decoupling, co-occurrence graph, propagation, classifier."""
from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .cooccurrence import AnnotationSet, CooccurrenceGraph, build_graph, load_graph, parse_graph, save_graph
from .decoupling import (
    AttentionMap,
    DecouplingParams,
    EmbeddingTable,
    FeatureMap,
    attention_coefficients,
    attention_logits,
    decouple,
    fuse,
    pool,
)
from .interaction import HiddenStateSet, PropagationParams, aggregate, gated_update, init_states, propagate
from .models import PROFILE_DIMS, ModelConfig, Variant, parse_variant
from .network import (
    ClassifierParams,
    ForwardTrace,
    Prediction,
    SSGRLModel,
    bce_from_probabilities,
    bce_loss,
    forward,
    forward_variant,
    validate_inputs,
    write_debug_dump,
)
from .params import ParameterSet, parameter_specs

__all__ = [
    "AnnotationSet",
    "AttentionMap",
    "ClassifierParams",
    "CooccurrenceGraph",
    "DecouplingParams",
    "EmbeddingTable",
    "FeatureMap",
    "ForwardTrace",
    "HiddenStateSet",
    "ModelConfig",
    "PROFILE_DIMS",
    "ParameterSet",
    "Prediction",
    "PropagationParams",
    "SSGRLModel",
    "Variant",
    "aggregate",
    "attention_coefficients",
    "attention_logits",
    "bce_from_probabilities",
    "bce_loss",
    "build_graph",
    "decode_checkpoint",
    "decouple",
    "encode_checkpoint",
    "forward",
    "forward_variant",
    "fuse",
    "gated_update",
    "init_states",
    "load_checkpoint",
    "load_graph",
    "parameter_specs",
    "parse_graph",
    "parse_variant",
    "pool",
    "propagate",
    "save_checkpoint",
    "save_graph",
    "validate_inputs",
    "write_debug_dump",
]
