"""Category lists, annotation files and split manifests.

annotations_<split>.tsv   sample-id<TAB>name,name,...
manifest_<split>.tsv      sample-id<TAB>feature-path<TAB>name,name,...
categories.txt            one category name per line
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Sequence

from errors import InputError, ParseError
from model.cooccurrence import AnnotationSet

logger = logging.getLogger("SSGRL.Data")


def read_categories(path: Path) -> List[str]:
    path = Path(path)
    names = [line.strip() for line in path.read_text(encoding="utf-8").split("\n")]
    names = [name for name in names if name]
    if len(set(names)) != len(names):
        raise InputError(f"{path} lists a category more than once")
    return names


def write_categories(categories: Sequence[str], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{name}\n" for name in categories), encoding="utf-8", newline="\n")
    return path


def resolve_labels(field_text: str, categories: Sequence[str], line_number: Optional[int] = None) -> FrozenSet[int]:
    """Comma-separated category names; a bare integer is accepted as an index."""
    index = {name: position for position, name in enumerate(categories)}
    where = f"line {line_number}: " if line_number else ""
    labels = set()
    for token in field_text.split(","):
        token = token.strip()
        if not token:
            continue
        if token in index:
            labels.add(index[token])
            continue
        try:
            position = int(token)
        except ValueError:
            raise InputError(f"{where}unknown category '{token}'") from None
        if position < 0 or position >= len(categories):
            raise InputError(f"{where}label index {position} outside 0..{len(categories) - 1}")
        labels.add(position)
    return frozenset(labels)


def _format_labels(labels: Iterable[int], categories: Sequence[str]) -> str:
    return ",".join(categories[label] for label in sorted(labels))


def parse_annotations(text: str, categories: Sequence[str]) -> AnnotationSet:
    ann = AnnotationSet(categories=list(categories))
    seen = set()
    for line_number, raw in enumerate(text.split("\n"), start=1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 'sample-id<TAB>labels', got {len(parts)} fields", line=line_number)
        sample_id = parts[0].strip()
        if not sample_id:
            raise ParseError("empty sample id", line=line_number)
        if sample_id in seen:
            raise InputError(f"line {line_number}: duplicate sample id '{sample_id}'")
        seen.add(sample_id)
        ann.add(sample_id, resolve_labels(parts[1], categories, line_number))
    return ann


def load_annotations(path: Path, categories: Sequence[str]) -> AnnotationSet:
    path = Path(path)
    ann = parse_annotations(path.read_text(encoding="utf-8"), categories)
    logger.info("📂 [DATA] 读取 %d 条标注, 文件 %s", len(ann), path)
    return ann


def save_annotations(ann: AnnotationSet, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{sample_id}\t{_format_labels(labels, ann.categories)}\n" for sample_id, labels in ann.samples]
    path.write_text("".join(lines), encoding="utf-8", newline="\n")
    return path


@dataclass
class ManifestEntry:
    sample_id: str
    feature_path: str
    labels: FrozenSet[int]


@dataclass
class DatasetManifest:
    split: str
    categories: List[str]
    entries: List[ManifestEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def find(self, sample_id: str) -> ManifestEntry:
        for entry in self.entries:
            if entry.sample_id == sample_id:
                return entry
        raise InputError(f"sample '{sample_id}' is not in split '{self.split}'")

    def annotations(self) -> AnnotationSet:
        return AnnotationSet(
            categories=list(self.categories),
            samples=[(entry.sample_id, entry.labels) for entry in self.entries],
        )


def load_manifest(path: Path, categories: Sequence[str], split: str, root: Optional[Path] = None) -> DatasetManifest:
    """Parse a manifest; feature paths are resolved against ``root`` and must exist."""
    path = Path(path)
    root = Path(root) if root is not None else path.parent
    manifest = DatasetManifest(split=split, categories=list(categories))
    seen = set()
    for line_number, raw in enumerate(path.read_text(encoding="utf-8").split("\n"), start=1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise ParseError(
                f"expected 'sample-id<TAB>feature-path<TAB>labels', got {len(parts)} fields", line=line_number
            )
        sample_id, feature_path, label_text = parts
        if sample_id in seen:
            raise InputError(f"line {line_number}: duplicate sample id '{sample_id}'")
        seen.add(sample_id)
        if not (root / feature_path).is_file():
            raise InputError(f"line {line_number}: feature map '{feature_path}' not found under {root}")
        manifest.entries.append(
            ManifestEntry(
                sample_id=sample_id,
                feature_path=feature_path,
                labels=resolve_labels(label_text, categories, line_number),
            )
        )
    logger.info("📂 [DATA] 清单 %s: %d 个样本", split, len(manifest))
    return manifest


def save_manifest(manifest: DatasetManifest, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{entry.sample_id}\t{entry.feature_path}\t{_format_labels(entry.labels, manifest.categories)}\n"
        for entry in manifest.entries
    ]
    path.write_text("".join(lines), encoding="utf-8", newline="\n")
    return path
