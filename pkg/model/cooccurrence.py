"""Label co-occurrence statistics and the graph file format."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionError, FormatError, InputError, ParseError

logger = logging.getLogger("SSGRL.Graph")

GRAPH_HEADER_PREFIX = "cooccurrence v1 C="


@dataclass
class AnnotationSet:
    """Per-sample label sets over a fixed category list."""

    categories: List[str]
    samples: List[Tuple[str, FrozenSet[int]]] = field(default_factory=list)

    def __post_init__(self):
        self.categories = list(self.categories)
        if len(set(self.categories)) != len(self.categories):
            raise InputError("category names must be unique")
        cleaned = []
        for sample_id, labels in self.samples:
            cleaned.append((str(sample_id), self._check_labels(sample_id, labels)))
        self.samples = cleaned

    @property
    def num_categories(self) -> int:
        return len(self.categories)

    def _check_labels(self, sample_id: str, labels: Iterable[int]) -> FrozenSet[int]:
        collapsed = frozenset(int(label) for label in labels)
        for label in collapsed:
            if label < 0 or label >= self.num_categories:
                raise InputError(
                    f"sample '{sample_id}' has label index {label}, expected 0..{self.num_categories - 1}"
                )
        return collapsed

    def add(self, sample_id: str, labels: Iterable[int]) -> None:
        self.samples.append((str(sample_id), self._check_labels(sample_id, labels)))

    def __len__(self) -> int:
        return len(self.samples)

    def label_matrix(self) -> np.ndarray:
        """M x C binary indicator matrix in sample order."""
        matrix = np.zeros((len(self.samples), self.num_categories), dtype=np.float64)
        for row, (_, labels) in enumerate(self.samples):
            for label in labels:
                matrix[row, label] = 1.0
        return matrix


@dataclass
class CooccurrenceGraph:
    categories: List[str]
    matrix: np.ndarray
    support: Optional[np.ndarray] = None

    def __post_init__(self):
        self.categories = list(self.categories)
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        C = len(self.categories)
        if self.matrix.shape != (C, C):
            raise DimensionError(f"{C} categories need a {C} x {C} adjacency, got {self.matrix.shape}")

    @property
    def num_categories(self) -> int:
        return len(self.categories)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CooccurrenceGraph):
            return NotImplemented
        return self.categories == other.categories and np.array_equal(self.matrix, other.matrix)

    def reordered(self, order: Sequence[int]) -> "CooccurrenceGraph":
        """Same graph with categories permuted into ``order``."""
        order = list(order)
        support = None if self.support is None else self.support[order]
        return CooccurrenceGraph(
            categories=[self.categories[index] for index in order],
            matrix=self.matrix[np.ix_(order, order)],
            support=support,
        )


def build_graph(ann: AnnotationSet) -> CooccurrenceGraph:
    """A[c][c'] = P(c' present | c present) estimated by counting."""
    if ann.num_categories < 1:
        raise InputError("annotation set has no categories")
    if len(ann) == 0:
        raise InputError("annotation set has no samples")

    labels = ann.label_matrix()
    counts = labels.T @ labels
    support = np.diag(counts).copy()
    matrix = np.zeros_like(counts)
    present = support > 0
    # zero-support rows stay zero; their columns are zero because the counts are
    matrix[present] = counts[present] / support[present, None]
    logger.info(
        "🕸️ [GRAPH] 构建 %dx%d 共现矩阵, 样本数 %d (%d 个类别没有正样本)",
        ann.num_categories,
        ann.num_categories,
        len(ann),
        int(np.sum(~present)),
    )
    return CooccurrenceGraph(categories=list(ann.categories), matrix=matrix, support=support)


def graph_to_text(graph: CooccurrenceGraph) -> str:
    lines = [f"{GRAPH_HEADER_PREFIX}{graph.num_categories}", ",".join(graph.categories)]
    for row in graph.matrix:
        lines.append(" ".join(format(float(value), ".17g") for value in row))
    return "\n".join(lines) + "\n"


def save_graph(graph: CooccurrenceGraph, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(graph_to_text(graph))
    os.replace(tmp_path, path)
    logger.info("💾 [GRAPH] 共现图已保存 %s", path)
    return path


def parse_graph(text: str) -> CooccurrenceGraph:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty graph file", line=1)

    header = lines[0]
    if not header.startswith(GRAPH_HEADER_PREFIX):
        raise ParseError(f"expected header '{GRAPH_HEADER_PREFIX}<int>', got '{header}'", line=1)
    try:
        C = int(header[len(GRAPH_HEADER_PREFIX):])
    except ValueError:
        raise ParseError(f"category count in header is not an integer: '{header}'", line=1) from None
    if C < 1:
        raise ParseError(f"category count must be >= 1, got {C}", line=1)

    if len(lines) < 2:
        raise ParseError("missing category names line", line=2)
    categories = lines[1].split(",")
    if len(categories) != C:
        raise FormatError(f"header declares C={C} but line 2 names {len(categories)} categories")

    rows = lines[2:]
    if len(rows) != C:
        raise FormatError(f"header declares C={C} but the file has {len(rows)} matrix rows")

    matrix = np.zeros((C, C), dtype=np.float64)
    for offset, raw in enumerate(rows):
        line_number = offset + 3
        tokens = raw.split()
        if len(tokens) != C:
            raise FormatError(f"line {line_number}: expected {C} values, got {len(tokens)}")
        try:
            matrix[offset] = [float(token) for token in tokens]
        except ValueError as exc:
            raise ParseError(f"not a decimal value ({exc})", line=line_number) from None
    return CooccurrenceGraph(categories=categories, matrix=matrix)


def load_graph(path: Path) -> CooccurrenceGraph:
    path = Path(path)
    graph = parse_graph(path.read_text(encoding="utf-8"))
    logger.info("📂 [GRAPH] 共现图已加载 %s (C=%d)", path, graph.num_categories)
    return graph
