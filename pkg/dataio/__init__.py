from .annotations import (
    DatasetManifest,
    ManifestEntry,
    load_annotations,
    load_manifest,
    parse_annotations,
    read_categories,
    resolve_labels,
    save_annotations,
    save_manifest,
    write_categories,
)
from .dataset import DatasetDirectory, Sample
from .embeddings import load_embeddings, parse_embeddings, save_embeddings
from .feature_maps import decode_feature_map, encode_feature_map, load_feature_map, save_feature_map
from .synthetic import SyntheticDataset, SyntheticSpec, generate_synthetic, load_synthetic_spec, write_dataset

__all__ = [
    "DatasetDirectory",
    "DatasetManifest",
    "ManifestEntry",
    "Sample",
    "SyntheticDataset",
    "SyntheticSpec",
    "decode_feature_map",
    "encode_feature_map",
    "generate_synthetic",
    "load_annotations",
    "load_embeddings",
    "load_feature_map",
    "load_manifest",
    "load_synthetic_spec",
    "parse_annotations",
    "parse_embeddings",
    "read_categories",
    "resolve_labels",
    "save_annotations",
    "save_embeddings",
    "save_feature_map",
    "save_manifest",
    "write_categories",
    "write_dataset",
]
