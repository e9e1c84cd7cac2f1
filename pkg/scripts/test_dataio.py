"""File formats and the synthetic planted-pattern generator."""
from __future__ import annotations

import json
import math
import struct
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from dataio import (  # noqa: E402
    DatasetDirectory,
    SyntheticSpec,
    decode_feature_map,
    encode_feature_map,
    generate_synthetic,
    load_embeddings,
    load_feature_map,
    load_manifest,
    load_synthetic_spec,
    parse_annotations,
    parse_embeddings,
    read_categories,
    resolve_labels,
    save_embeddings,
    save_feature_map,
    write_dataset,
)
from errors import ConfigurationError, EmbeddingLookupError, FormatError, InputError, ParseError  # noqa: E402
from model import EmbeddingTable, FeatureMap, build_graph  # noqa: E402


def small_spec(**values) -> SyntheticSpec:
    merged = dict(C=4, W=3, H=3, N=8, train_samples=12, test_samples=6, seed=5)
    merged.update(values)
    return SyntheticSpec.create(**merged)


class FeatureMapFileTests(unittest.TestCase):
    def fixture(self) -> bytes:
        return b"FMAP1" + struct.pack("<3I", 2, 2, 3) + struct.pack("<12f", *[float(i) for i in range(12)])

    def test_known_bytes(self):
        fm = decode_feature_map(self.fixture())
        self.assertEqual((fm.width, fm.height, fm.channels), (2, 2, 3))
        self.assertEqual(fm.values.reshape(-1).tolist(), [float(i) for i in range(12)])
        self.assertEqual(fm.values[1, 0].tolist(), [6.0, 7.0, 8.0])
        self.assertEqual(encode_feature_map(fm), self.fixture())

    def test_truncated_payload(self):
        with self.assertRaises(FormatError) as ctx:
            decode_feature_map(self.fixture()[:-2])
        self.assertEqual(ctx.exception.offset, len(self.fixture()) - 2)

    def test_bad_magic_and_trailing_bytes(self):
        with self.assertRaises(FormatError) as ctx:
            decode_feature_map(b"FMAP2" + self.fixture()[5:])
        self.assertEqual(ctx.exception.offset, 0)
        with self.assertRaises(FormatError):
            decode_feature_map(self.fixture() + b"\x00")
        with self.assertRaises(FormatError):
            decode_feature_map(b"FMAP1\x02\x00")

    def test_save_and_load(self):
        values = np.random.default_rng(0).standard_normal((3, 2, 4)).astype(np.float32).astype(np.float64)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_feature_map(FeatureMap(values), Path(tmp) / "features" / "x.fmap")
            np.testing.assert_array_equal(load_feature_map(path).values, values)


class EmbeddingFileTests(unittest.TestCase):
    def test_lookup_in_category_order(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "embeddings.txt"
            path.write_text("dog 1 2 3\ncat 4 5 6\n", encoding="utf-8")
            table = load_embeddings(path, ["cat", "dog"])
            np.testing.assert_array_equal(table.vectors, [[4, 5, 6], [1, 2, 3]])
            with self.assertRaises(EmbeddingLookupError) as ctx:
                load_embeddings(path, ["cat", "zebra"])
        self.assertIn("zebra", str(ctx.exception))

    def test_ragged_rows(self):
        with self.assertRaises(FormatError):
            parse_embeddings("a 1 2\nb 1 2 3\n")

    def test_bad_values(self):
        with self.assertRaises(ParseError) as ctx:
            parse_embeddings("a 1 2\nb 1 two\n")
        self.assertEqual(ctx.exception.line, 2)
        with self.assertRaises(ParseError):
            parse_embeddings("lonely\n")

    def test_first_occurrence_wins(self):
        vectors = parse_embeddings("a 1 2\na 3 4\n\n")
        self.assertEqual(vectors["a"].tolist(), [1.0, 2.0])

    def test_round_trip_is_exact(self):
        table = EmbeddingTable(["x", "y", "z"], np.random.default_rng(1).standard_normal((3, 7)))
        with tempfile.TemporaryDirectory() as tmp:
            path = save_embeddings(table, Path(tmp) / "emb.txt")
            loaded = load_embeddings(path, table.categories)
        np.testing.assert_array_equal(loaded.vectors, table.vectors)


class AnnotationFileTests(unittest.TestCase):
    categories = ["person", "dog", "frisbee"]

    def test_names_and_index_fallback(self):
        self.assertEqual(resolve_labels("dog, person", self.categories), frozenset({0, 1}))
        self.assertEqual(resolve_labels("2,dog", self.categories), frozenset({1, 2}))
        self.assertEqual(resolve_labels("", self.categories), frozenset())
        with self.assertRaises(InputError):
            resolve_labels("cat", self.categories)
        with self.assertRaises(InputError):
            resolve_labels("3", self.categories)

    def test_parse_feeds_graph(self):
        text = "a\tperson,dog\nb\tperson\nc\tperson,dog,frisbee\nd\t\n"
        ann = parse_annotations(text, self.categories)
        self.assertEqual(len(ann), 4)
        self.assertEqual(build_graph(ann).matrix[0][1], 2 / 3)

    def test_malformed_lines(self):
        with self.assertRaises(ParseError) as ctx:
            parse_annotations("a\tperson\nb person\n", self.categories)
        self.assertEqual(ctx.exception.line, 2)
        with self.assertRaises(InputError):
            parse_annotations("a\tperson\na\tdog\n", self.categories)

    def test_manifest_checks_feature_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            save_feature_map(FeatureMap(np.ones((1, 1, 2))), root / "features" / "a.fmap")
            manifest_path = root / "manifest_test.tsv"
            manifest_path.write_text("a\tfeatures/a.fmap\tdog\n", encoding="utf-8")
            manifest = load_manifest(manifest_path, self.categories, "test")
            self.assertEqual(manifest.find("a").labels, frozenset({1}))
            with self.assertRaises(InputError):
                manifest.find("b")
            manifest_path.write_text("a\tfeatures/missing.fmap\tdog\n", encoding="utf-8")
            with self.assertRaises(InputError):
                load_manifest(manifest_path, self.categories, "test")


class SyntheticSpecTests(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(ConfigurationError):
            small_spec(label_density=0.0)
        with self.assertRaises(ConfigurationError):
            small_spec(label_density=5.0)
        with self.assertRaises(ConfigurationError):
            small_spec(bias_pairs=[[1, 1]])
        with self.assertRaises(ConfigurationError):
            small_spec(bias_pairs=[[0, 4]])

    def test_loads_from_run_configuration(self):
        spec = load_synthetic_spec(PROJECT_ROOT / "configs" / "synthetic_toy.json")
        self.assertEqual((spec.C, spec.W, spec.H, spec.N), (6, 4, 4, 8))
        self.assertEqual((spec.train_samples, spec.test_samples), (64, 32))
        self.assertEqual(spec.bias_pairs, [(0, 1)])
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bare.json"
            path.write_text(json.dumps({"C": 2, "W": 1, "H": 1, "N": 3}), encoding="utf-8")
            self.assertEqual(load_synthetic_spec(path).C, 2)


class SyntheticGeneratorTests(unittest.TestCase):
    def test_same_seed_gives_identical_files(self):
        dataset = generate_synthetic(small_spec())
        with tempfile.TemporaryDirectory() as tmp:
            first, second = Path(tmp) / "one", Path(tmp) / "two"
            summary = write_dataset(dataset, first)
            write_dataset(generate_synthetic(small_spec()), second)
            files = sorted(path.relative_to(first) for path in first.rglob("*") if path.is_file())
            self.assertEqual(files, sorted(path.relative_to(second) for path in second.rglob("*") if path.is_file()))
            for relative in files:
                self.assertEqual((first / relative).read_bytes(), (second / relative).read_bytes(), str(relative))
            self.assertEqual(len(read_categories(first / "categories.txt")), 4)
            self.assertEqual(len(list((first / "features").glob("*.fmap"))), 18)
        self.assertEqual(summary["feature_maps"], 18)
        self.assertEqual(summary["categories"], 4)

    def test_different_seed_differs(self):
        a = generate_synthetic(small_spec(seed=1)).splits["train"][0].feature_map.values
        b = generate_synthetic(small_spec(seed=2)).splits["train"][0].feature_map.values
        self.assertFalse(np.array_equal(a, b))

    def test_planted_pattern_peaks_at_home(self):
        dataset = generate_synthetic(small_spec(train_samples=200))
        self.assertEqual(len(set(dataset.homes)), 4)
        checked = 0
        for sample in dataset.splits["train"]:
            if len(sample.labels) != 1:
                continue
            (c,) = tuple(sample.labels)
            response = np.einsum("whn,n->wh", sample.feature_map.values, dataset.patterns[c])
            location = np.unravel_index(int(np.argmax(response)), response.shape)
            self.assertEqual(tuple(int(v) for v in location), dataset.homes[c])
            checked += 1
        self.assertGreater(checked, 10)

    def test_label_marginals(self):
        spec = small_spec(C=6, train_samples=3000, test_samples=1, label_density=2.0)
        labels = np.stack([
            np.isin(np.arange(6), sorted(sample.labels)) for sample in generate_synthetic(spec).splits["train"]
        ])
        rate = 2.0 / 6.0
        sigma = math.sqrt(rate * (1.0 - rate) / 3000)
        for c in range(6):
            self.assertLess(abs(labels[:, c].mean() - rate), 4 * sigma, f"category {c}")

    def test_bias_pair_shows_in_graph(self):
        spec = small_spec(C=6, train_samples=3000, test_samples=1, bias_pairs=[[0, 1]], bias_probability=0.9)
        dataset = generate_synthetic(spec)
        graph = build_graph(dataset.annotations("train"))
        support = graph.support[0]
        sigma = math.sqrt(0.9 * 0.1 / support)
        self.assertLess(abs(graph.matrix[0][1] - 0.9), 4 * sigma)
        self.assertLess(graph.matrix[0][2], 0.6)

    def test_bias_pair_raises_partner_marginal(self):
        spec = small_spec(C=6, train_samples=3000, test_samples=1, bias_pairs=[[0, 1]], bias_probability=0.9)
        rate = 2.0 / 6.0
        partner = rate * 0.9 + (1.0 - rate) * rate
        np.testing.assert_allclose(spec.label_marginals(), [rate, partner, rate, rate, rate, rate])
        self.assertGreater(spec.label_marginals().sum(), spec.label_density)
        labels = generate_synthetic(spec).annotations("train").label_matrix()
        sigma = math.sqrt(partner * (1.0 - partner) / 3000)
        self.assertLess(abs(labels[:, 1].mean() - partner), 4 * sigma)
        self.assertAlmostEqual(small_spec(C=6).label_marginals().sum(), 2.0, places=12)


class DatasetDirectoryTests(unittest.TestCase):
    def test_split_loading_is_order_preserving(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_dataset(generate_synthetic(small_spec()), Path(tmp))
            dataset = DatasetDirectory(Path(tmp))
            serial = dataset.load_split("train", workers=1)
            threaded = dataset.load_split("train", workers=3)
            self.assertEqual([s.sample_id for s in serial], [f"train_{i:04d}" for i in range(12)])
            self.assertEqual([s.sample_id for s in threaded], [s.sample_id for s in serial])
            for a, b in zip(serial, threaded):
                np.testing.assert_array_equal(a.feature_map.values, b.feature_map.values)
                np.testing.assert_array_equal(a.labels, b.labels)
            single = dataset.load_sample("test", "test_0002")
            self.assertEqual(single.labels.shape, (4,))
            self.assertEqual(dataset.embeddings().dim, 5)
            with self.assertRaises(InputError):
                dataset.load_sample("test", "train_0000")

    def test_missing_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(FileNotFoundError):
                DatasetDirectory(Path(tmp) / "nope")


if __name__ == "__main__":
    unittest.main()
