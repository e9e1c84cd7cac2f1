"""Access to a dataset directory written by the generator (or laid out the same way)."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from config import Config
from errors import InputError
from model.cooccurrence import AnnotationSet
from model.decoupling import EmbeddingTable, FeatureMap

from .annotations import DatasetManifest, load_annotations, load_manifest, read_categories
from .embeddings import load_embeddings
from .feature_maps import load_feature_map

logger = logging.getLogger("SSGRL.Data")


@dataclass
class Sample:
    sample_id: str
    feature_map: FeatureMap
    labels: np.ndarray


class DatasetDirectory:
    """
    Layout:
        categories.txt
        embeddings.txt
        annotations_<split>.tsv
        manifest_<split>.tsv
        features/<sample-id>.fmap
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"dataset directory {self.root} does not exist")
        self._categories: Optional[List[str]] = None

    def categories(self) -> List[str]:
        if self._categories is None:
            self._categories = read_categories(self.root / "categories.txt")
        return list(self._categories)

    def embeddings(self) -> EmbeddingTable:
        return load_embeddings(self.root / "embeddings.txt", self.categories())

    def annotations(self, split: str) -> AnnotationSet:
        return load_annotations(self.root / f"annotations_{split}.tsv", self.categories())

    def manifest(self, split: str) -> DatasetManifest:
        return load_manifest(self.root / f"manifest_{split}.tsv", self.categories(), split, root=self.root)

    def load_split(self, split: str, workers: Optional[int] = None) -> List[Sample]:
        """Samples in manifest order; feature maps are read on a thread pool."""
        manifest = self.manifest(split)
        if not manifest.entries:
            raise InputError(f"split '{split}' in {self.root} has no samples")
        workers = Config.LOADER_WORKERS if workers is None else workers
        paths = [self.root / entry.feature_path for entry in manifest.entries]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="fmap") as pool:
                feature_maps = list(pool.map(load_feature_map, paths))
        else:
            feature_maps = [load_feature_map(path) for path in paths]

        C = len(manifest.categories)
        samples = []
        for entry, fm in zip(manifest.entries, feature_maps):
            labels = np.zeros(C, dtype=np.float64)
            labels[sorted(entry.labels)] = 1.0
            samples.append(Sample(sample_id=entry.sample_id, feature_map=fm, labels=labels))
        logger.info("📂 [DATA] 已加载 %d 个 %s 样本, 目录 %s (workers=%d)", len(samples), split, self.root, workers)
        return samples

    def load_sample(self, split: str, sample_id: str) -> Sample:
        entry = self.manifest(split).find(sample_id)
        labels = np.zeros(len(self.categories()), dtype=np.float64)
        labels[sorted(entry.labels)] = 1.0
        return Sample(sample_id=sample_id, feature_map=load_feature_map(self.root / entry.feature_path), labels=labels)
