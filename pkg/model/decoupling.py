"""Semantic-guided attention that pools one feature vector per category.

For every location the image feature is fused with the category embedding by
low-rank bilinear pooling, scored by a one-unit affine layer, normalized with a
softmax over all locations, and used to average the raw feature map.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from engine import Tensor, add, add_bias, matmul, mul, repeat_rows, reshape, softmax, tanh, tile_rows
from errors import DimensionError, InputError

from .params import ParameterSet


@dataclass
class FeatureMap:
    """W x H x N backbone activations; location (w, h) flattens to w * H + h."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or min(self.values.shape) < 1:
            raise DimensionError(f"feature map must be W x H x N with every extent >= 1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise InputError("feature map contains non-finite values")

    @property
    def width(self) -> int:
        return int(self.values.shape[0])

    @property
    def height(self) -> int:
        return int(self.values.shape[1])

    @property
    def channels(self) -> int:
        return int(self.values.shape[2])

    @property
    def num_locations(self) -> int:
        return self.width * self.height

    def locations(self) -> np.ndarray:
        return self.values.reshape(self.num_locations, self.channels)

    def location_index(self, w: int, h: int) -> int:
        return w * self.height + h


@dataclass
class EmbeddingTable:
    categories: List[str]
    vectors: np.ndarray

    def __post_init__(self):
        self.categories = list(self.categories)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.categories):
            raise DimensionError(
                f"{len(self.categories)} categories need a C x d_s table, got {self.vectors.shape}"
            )
        if len(set(self.categories)) != len(self.categories):
            raise InputError("category names must be unique")
        if not np.all(np.isfinite(self.vectors)):
            raise InputError("embedding table contains non-finite values")

    @property
    def size(self) -> int:
        return len(self.categories)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def index(self, name: str) -> int:
        return self.categories.index(name)

    def vector(self, name: str) -> np.ndarray:
        return self.vectors[self.index(name)]


@dataclass
class DecouplingParams:
    U: Tensor
    V: Tensor
    P: Tensor
    b: Tensor
    W_a: Tensor
    b_a: Tensor

    @classmethod
    def from_parameters(cls, params: ParameterSet) -> "DecouplingParams":
        return cls(
            U=params["decouple.U"],
            V=params["decouple.V"],
            P=params["decouple.P"],
            b=params["decouple.b"],
            W_a=params["decouple.W_a"],
            b_a=params["decouple.b_a"],
        )

    @property
    def channels(self) -> int:
        return self.U.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.V.shape[0]

    def validate(self) -> None:
        N, d1 = self.U.shape
        d_s = self.V.shape[0]
        d2 = self.P.shape[1]
        expected = {
            "U": (N, d1),
            "V": (d_s, d1),
            "P": (d1, d2),
            "b": (d2,),
            "W_a": (d2, 1),
            "b_a": (),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(f"decoupling parameter {name} has shape {actual}, expected {shape}")


@dataclass
class AttentionMap:
    """Normalized attention per category, stored as C x W x H."""

    categories: List[str]
    weights: np.ndarray

    def grid(self, category: Union[int, str]) -> np.ndarray:
        index = category if isinstance(category, int) else self.categories.index(category)
        return self.weights[index]

    def argmax_location(self, category: Union[int, str]) -> Tuple[int, int]:
        grid = self.grid(category)
        w, h = np.unravel_index(int(np.argmax(grid)), grid.shape)
        return int(w), int(h)

    def to_text(self, categories: Optional[Sequence[Union[int, str]]] = None) -> str:
        selected = list(range(len(self.categories))) if categories is None else list(categories)
        blocks = []
        for category in selected:
            index = category if isinstance(category, int) else self.categories.index(category)
            lines = [f"# category {self.categories[index]}"]
            # H rows of W values
            for row in self.weights[index].T:
                lines.append(" ".join(format(float(value), ".17g") for value in row))
            blocks.append("\n".join(lines))
        return "\n".join(blocks) + "\n"

    def save(self, path: Path, categories: Optional[Sequence[Union[int, str]]] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text(categories), encoding="utf-8", newline="\n")
        return path


def _check_vector(name: str, value: Tensor, length: int) -> Tensor:
    if value.shape != (length,):
        raise DimensionError(f"{name} must have shape ({length},), got {value.shape}")
    return value


def fuse(f_wh, x_c, params: DecouplingParams) -> Tensor:
    """Low-rank bilinear fusion of one location feature with one category embedding."""
    f_wh = _check_vector("f_wh", f_wh if isinstance(f_wh, Tensor) else Tensor(f_wh), params.channels)
    x_c = _check_vector("x_c", x_c if isinstance(x_c, Tensor) else Tensor(x_c), params.embedding_dim)
    joint = tanh(
        mul(
            matmul(reshape(f_wh, (1, params.channels)), params.U),
            matmul(reshape(x_c, (1, params.embedding_dim)), params.V),
        )
    )
    fused = add_bias(matmul(joint, params.P), params.b)
    return reshape(fused, (params.P.shape[1],))


def attention_logits(locations: Tensor, embeddings: Tensor, params: DecouplingParams) -> Tensor:
    """Unnormalized coefficients for K categories over L locations, as a K x L matrix."""
    num_locations = locations.shape[0]
    num_categories = embeddings.shape[0]
    projected_features = matmul(locations, params.U)
    projected_semantics = matmul(embeddings, params.V)
    # rows ordered category-major: row k * L + l pairs category k with location l
    joint = tanh(
        mul(
            tile_rows(projected_features, num_categories),
            repeat_rows(projected_semantics, num_locations),
        )
    )
    fused = add_bias(matmul(joint, params.P), params.b)
    scores = add(matmul(fused, params.W_a), params.b_a)
    return reshape(scores, (num_categories, num_locations))


def _check_inputs(fm: FeatureMap, embedding_dim: int, params: DecouplingParams) -> None:
    params.validate()
    if fm.channels != params.channels:
        raise DimensionError(f"feature map has {fm.channels} channels, parameters expect {params.channels}")
    if embedding_dim != params.embedding_dim:
        raise DimensionError(
            f"embeddings have dimension {embedding_dim}, parameters expect {params.embedding_dim}"
        )


def attention_coefficients(fm: FeatureMap, x_c, params: DecouplingParams) -> Tensor:
    """Softmax-normalized attention of one category over all W*H locations."""
    x_c = x_c if isinstance(x_c, Tensor) else Tensor(x_c)
    _check_vector("x_c", x_c, params.embedding_dim)
    _check_inputs(fm, params.embedding_dim, params)
    logits = attention_logits(Tensor(fm.locations()), reshape(x_c, (1, params.embedding_dim)), params)
    return reshape(softmax(logits, axis=1), (fm.num_locations,))


def pool(attention: Tensor, fm: FeatureMap) -> Tensor:
    """Attention-weighted average of the raw feature map: (C x L) weights -> C x N features."""
    attention = attention if isinstance(attention, Tensor) else Tensor(attention)
    if attention.ndim != 2 or attention.shape[1] != fm.num_locations:
        raise DimensionError(
            f"attention of shape {attention.shape} does not cover {fm.num_locations} locations"
        )
    return matmul(attention, Tensor(fm.locations()))


def decouple(fm: FeatureMap, emb: EmbeddingTable, params: DecouplingParams) -> Tuple[Tensor, AttentionMap]:
    if emb.size < 1:
        raise InputError("decoupling needs at least one category")
    _check_inputs(fm, emb.dim, params)
    logits = attention_logits(Tensor(fm.locations()), Tensor(emb.vectors), params)
    attention = softmax(logits, axis=1)
    features = pool(attention, fm)
    attention_map = AttentionMap(
        categories=list(emb.categories),
        weights=attention.data.reshape(emb.size, fm.width, fm.height).copy(),
    )
    return features, attention_map
