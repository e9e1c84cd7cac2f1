"""Planted-pattern dataset that stands in for backbone feature maps.

Every category owns a random unit channel pattern and a home location. A sample
labelled with a category carries ``pattern_strength * pattern`` at that home on
top of Gaussian noise, so attention has a known place to look.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, root_validator
from tqdm import tqdm

from config import Config
from errors import ConfigurationError
from model.cooccurrence import AnnotationSet
from model.decoupling import EmbeddingTable, FeatureMap

from .annotations import DatasetManifest, ManifestEntry, save_annotations, save_manifest, write_categories
from .embeddings import save_embeddings
from .feature_maps import save_feature_map

logger = logging.getLogger("SSGRL.Data")

SPLITS = ("train", "test")


class SyntheticSpec(BaseModel):
    """Generator settings.

    ``label_density`` sets the independent per-category rate ``label_density / C``. A bias pair
    (a, b) then overwrites b whenever a is present, so b's marginal becomes
    ``rate * bias_probability + (1 - rate) * rate`` and the mean label count drifts away from
    ``label_density`` (upwards for the shipped settings). ``label_marginals`` gives the exact
    figures when no category sits in more than one pair.
    """

    C: int = Field(..., ge=1)
    W: int = Field(..., ge=1)
    H: int = Field(..., ge=1)
    N: int = Field(..., ge=1)
    d_s: int = Field(5, ge=1)
    train_samples: int = Field(64, ge=1)
    test_samples: int = Field(32, ge=1)
    label_density: float = 2.0
    pattern_strength: float = Field(3.0, ge=0.0)
    noise_sigma: float = Field(0.3, ge=0.0)
    bias_pairs: List[Tuple[int, int]] = Field(default_factory=list)
    bias_probability: float = Field(0.9, ge=0.0, le=1.0)
    seed: int = Field(0, ge=0)

    class Config:
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def _check_ranges(cls, values):
        C = values["C"]
        density = values["label_density"]
        if not 0.0 < density <= C:
            raise ValueError(f"label_density must be in (0, C={C}], got {density}")
        for a, b in values["bias_pairs"]:
            if not (0 <= a < C and 0 <= b < C) or a == b:
                raise ValueError(f"bias pair ({a}, {b}) must name two different categories below C={C}")
        return values

    @classmethod
    def create(cls, **values: Any) -> "SyntheticSpec":
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid synthetic spec: {exc}") from None

    def samples_in(self, split: str) -> int:
        return self.train_samples if split == "train" else self.test_samples

    def label_marginals(self) -> np.ndarray:
        """Per-category presence probability after the bias pairs are applied."""
        marginals = np.full(self.C, min(1.0, self.label_density / self.C))
        for a, b in self.bias_pairs:
            marginals[b] = marginals[a] * self.bias_probability + (1.0 - marginals[a]) * marginals[b]
        return marginals


def load_synthetic_spec(path: Path) -> SyntheticSpec:
    """Accepts a bare spec object or a run configuration with a ``synthetic`` section."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path} must hold a JSON object")
    if "synthetic" in raw:
        raw = raw["synthetic"] or {}
    return SyntheticSpec.create(**raw)


@dataclass
class SyntheticSample:
    sample_id: str
    feature_map: FeatureMap
    labels: FrozenSet[int]


@dataclass
class SyntheticDataset:
    spec: SyntheticSpec
    categories: List[str]
    embeddings: EmbeddingTable
    patterns: np.ndarray
    homes: List[Tuple[int, int]]
    splits: Dict[str, List[SyntheticSample]] = field(default_factory=dict)

    def annotations(self, split: str) -> AnnotationSet:
        return AnnotationSet(
            categories=list(self.categories),
            samples=[(sample.sample_id, sample.labels) for sample in self.splits[split]],
        )


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.where(norms > 0, norms, 1.0)


def _draw_labels(rng: np.random.Generator, spec: SyntheticSpec) -> FrozenSet[int]:
    rate = min(1.0, spec.label_density / spec.C)
    present = rng.random(spec.C) < rate
    for a, b in spec.bias_pairs:
        follow = rng.random() < spec.bias_probability
        if present[a]:
            present[b] = follow
    return frozenset(int(c) for c in np.flatnonzero(present))


def generate_synthetic(spec: SyntheticSpec) -> SyntheticDataset:
    """Deterministic in ``spec.seed``: one generator, fixed draw order."""
    rng = np.random.default_rng(spec.seed)
    categories = [f"cat{c:02d}" for c in range(spec.C)]
    patterns = _unit_rows(rng.standard_normal((spec.C, spec.N)))
    locations = spec.W * spec.H
    if spec.C <= locations:
        flat_homes = rng.permutation(locations)[: spec.C]
    else:
        flat_homes = rng.integers(0, locations, size=spec.C)
    homes = [(int(index) // spec.H, int(index) % spec.H) for index in flat_homes]
    embeddings = EmbeddingTable(categories=categories, vectors=_unit_rows(rng.standard_normal((spec.C, spec.d_s))))

    dataset = SyntheticDataset(
        spec=spec, categories=categories, embeddings=embeddings, patterns=patterns, homes=homes
    )
    for split in SPLITS:
        samples = []
        for i in range(spec.samples_in(split)):
            labels = _draw_labels(rng, spec)
            values = spec.noise_sigma * rng.standard_normal((spec.W, spec.H, spec.N))
            for c in sorted(labels):
                w, h = homes[c]
                values[w, h] += spec.pattern_strength * patterns[c]
            samples.append(SyntheticSample(f"{split}_{i:04d}", FeatureMap(values), labels))
        dataset.splits[split] = samples
    logger.info(
        "🧪 [DATA] 合成数据已生成: C=%d W=%d H=%d N=%d train=%d test=%d seed=%d",
        spec.C,
        spec.W,
        spec.H,
        spec.N,
        spec.train_samples,
        spec.test_samples,
        spec.seed,
    )
    return dataset


def write_dataset(dataset: SyntheticDataset, out_dir: Path, show_progress: Optional[bool] = None) -> Dict[str, Any]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    show_progress = Config.SHOW_PROGRESS if show_progress is None else show_progress

    write_categories(dataset.categories, out_dir / "categories.txt")
    save_embeddings(dataset.embeddings, out_dir / "embeddings.txt")
    feature_count = 0
    for split in SPLITS:
        samples = dataset.splits[split]
        manifest = DatasetManifest(split=split, categories=list(dataset.categories))
        for sample in tqdm(samples, desc=f"write {split}", disable=not show_progress):
            relative = f"features/{sample.sample_id}.fmap"
            save_feature_map(sample.feature_map, out_dir / relative)
            manifest.entries.append(ManifestEntry(sample.sample_id, relative, sample.labels))
            feature_count += 1
        save_annotations(dataset.annotations(split), out_dir / f"annotations_{split}.tsv")
        save_manifest(manifest, out_dir / f"manifest_{split}.tsv")

    spec_payload = dataset.spec.dict()
    spec_payload["bias_pairs"] = [list(pair) for pair in dataset.spec.bias_pairs]
    (out_dir / "synthetic_spec.json").write_text(
        json.dumps(spec_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )
    planted = {
        "homes": {name: list(home) for name, home in zip(dataset.categories, dataset.homes)},
        "patterns": {name: [float(v) for v in row] for name, row in zip(dataset.categories, dataset.patterns)},
    }
    (out_dir / "planted.json").write_text(
        json.dumps(planted, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )

    summary = {
        "categories": len(dataset.categories),
        "embedding_dim": dataset.embeddings.dim,
        "feature_maps": feature_count,
        "train_samples": len(dataset.splits["train"]),
        "test_samples": len(dataset.splits["test"]),
        "expected_labels": float(np.sum(dataset.spec.label_marginals())),
        "mean_labels": float(
            np.mean([len(s.labels) for split in SPLITS for s in dataset.splits[split]])
        ),
    }
    logger.info("💾 [DATA] 数据集已写入 %s: %s", out_dir, summary)
    return summary
