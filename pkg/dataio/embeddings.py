"""Word-vector text files: one ``word v1 v2 ... v_d`` entry per line."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Sequence

import numpy as np

from errors import EmbeddingLookupError, FormatError, ParseError
from model.decoupling import EmbeddingTable

logger = logging.getLogger("SSGRL.Data")


def parse_embeddings(text: str) -> Dict[str, np.ndarray]:
    vectors: Dict[str, np.ndarray] = {}
    dim = None
    for line_number, raw in enumerate(text.split("\n"), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        word, values = tokens[0], tokens[1:]
        if not values:
            raise ParseError(f"word '{word}' has no vector components", line=line_number)
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise FormatError(f"line {line_number}: '{word}' has {len(values)} components, expected {dim}")
        try:
            vector = np.array([float(value) for value in values], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"not a decimal value ({exc})", line=line_number) from None
        # first occurrence wins, as in the public word-vector dumps
        vectors.setdefault(word, vector)
    return vectors


def load_embeddings(path: Path, categories: Sequence[str]) -> EmbeddingTable:
    """Embedding table for ``categories``, in that order."""
    path = Path(path)
    vectors = parse_embeddings(path.read_text(encoding="utf-8"))
    rows = []
    for name in categories:
        if name not in vectors:
            raise EmbeddingLookupError(name)
        rows.append(vectors[name])
    if not rows:
        return EmbeddingTable(categories=[], vectors=np.zeros((0, 0)))
    logger.info("📂 [DATA] 读取 %d 个词向量 (维度 %d), 文件 %s", len(rows), rows[0].shape[0], path)
    return EmbeddingTable(categories=list(categories), vectors=np.stack(rows))


def embeddings_to_text(table: EmbeddingTable) -> str:
    lines = []
    for name, vector in zip(table.categories, table.vectors):
        lines.append(" ".join([name] + [format(float(value), ".17g") for value in vector]))
    return "\n".join(lines) + "\n"


def save_embeddings(table: EmbeddingTable, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(embeddings_to_text(table), encoding="utf-8", newline="\n")
    return path
