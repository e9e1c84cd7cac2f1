"""Co-occurrence graph: counting, zero-support handling, graph file format."""
from __future__ import annotations

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from errors import FormatError, InputError, ParseError  # noqa: E402
from model import AnnotationSet, CooccurrenceGraph, build_graph, load_graph, parse_graph, save_graph  # noqa: E402
from model.cooccurrence import graph_to_text  # noqa: E402


def hand_example() -> AnnotationSet:
    return AnnotationSet(
        categories=["person", "dog", "frisbee"],
        samples=[("a", [0, 1]), ("b", [0]), ("c", [0, 1, 2])],
    )


def naive_graph(label_sets, C):
    matrix = np.zeros((C, C))
    for c in range(C):
        support = sum(1 for labels in label_sets if c in labels)
        if support == 0:
            continue
        for other in range(C):
            both = sum(1 for labels in label_sets if c in labels and other in labels)
            matrix[c, other] = both / support
    return matrix


class BuildGraphTests(unittest.TestCase):
    def test_hand_counted_example(self):
        A = build_graph(hand_example()).matrix
        self.assertEqual(A[0][1], 2 / 3)
        self.assertEqual(A[1][0], 1.0)
        self.assertEqual(A[0][2], 1 / 3)
        self.assertEqual(A[2][0], 1.0)
        self.assertEqual(A[1][2], 1 / 2)
        self.assertEqual(A[2][1], 1.0)
        np.testing.assert_array_equal(np.diag(A), [1.0, 1.0, 1.0])

    def test_all_labels_in_one_sample(self):
        ann = AnnotationSet(categories=list("abcd"), samples=[("x", range(4))])
        np.testing.assert_array_equal(build_graph(ann).matrix, np.ones((4, 4)))

    def test_disjoint_singletons(self):
        ann = AnnotationSet(categories=list("abc"), samples=[("x", [0]), ("y", [1]), ("z", [2]), ("w", [1])])
        np.testing.assert_array_equal(build_graph(ann).matrix, np.eye(3))

    def test_matches_naive_counting(self):
        rng = np.random.default_rng(0)
        for trial in range(100):
            C = int(rng.integers(1, 11))
            M = int(rng.integers(1, 51))
            label_sets = [set(np.flatnonzero(rng.random(C) < 0.3).tolist()) for _ in range(M)]
            ann = AnnotationSet(categories=[f"c{i}" for i in range(C)],
                                samples=[(f"s{i}", labels) for i, labels in enumerate(label_sets)])
            graph = build_graph(ann)
            with self.subTest(trial=trial):
                np.testing.assert_array_equal(graph.matrix, naive_graph(label_sets, C))
                self.assertTrue(np.all((graph.matrix >= 0.0) & (graph.matrix <= 1.0)))

    def test_zero_support_category_is_isolated(self):
        ann = AnnotationSet(categories=list("abc"), samples=[("x", [0, 1]), ("y", [1])])
        graph = build_graph(ann)
        np.testing.assert_array_equal(graph.matrix[2], np.zeros(3))
        np.testing.assert_array_equal(graph.matrix[:, 2], np.zeros(3))
        np.testing.assert_array_equal(graph.support, [1.0, 2.0, 0.0])
        self.assertTrue(np.all(np.isfinite(graph.matrix)))

    def test_asymmetric_unless_supports_match(self):
        asymmetric = build_graph(hand_example()).matrix
        self.assertFalse(np.array_equal(asymmetric, asymmetric.T))
        ann = AnnotationSet(categories=list("ab"), samples=[("x", [0, 1]), ("y", [0, 1]), ("z", [])])
        symmetric = build_graph(ann).matrix
        np.testing.assert_array_equal(symmetric, symmetric.T)

    def test_empty_label_sample_changes_nothing(self):
        ann = hand_example()
        before = build_graph(ann)
        ann.add("blank", [])
        self.assertEqual(build_graph(ann), before)

    def test_duplicate_labels_collapse(self):
        ann = AnnotationSet(categories=list("ab"), samples=[("x", [0, 0, 1]), ("y", [0])])
        self.assertEqual(ann.samples[0][1], frozenset({0, 1}))
        self.assertEqual(build_graph(ann).matrix[0][1], 0.5)

    def test_invalid_annotations(self):
        with self.assertRaises(InputError):
            build_graph(AnnotationSet(categories=list("ab"), samples=[]))
        with self.assertRaises(InputError):
            AnnotationSet(categories=list("ab"), samples=[("x", [2])])

    def test_reordered_permutes_rows_and_columns(self):
        graph = build_graph(hand_example())
        moved = graph.reordered([2, 0, 1])
        self.assertEqual(moved.categories, ["frisbee", "person", "dog"])
        self.assertEqual(moved.matrix[1][2], graph.matrix[0][1])


class GraphFileTests(unittest.TestCase):
    def test_round_trip(self):
        graph = build_graph(hand_example())
        with tempfile.TemporaryDirectory() as tmp:
            path = save_graph(graph, Path(tmp) / "graph.txt")
            loaded = load_graph(path)
            self.assertEqual(loaded, graph)
            self.assertEqual(loaded.matrix[0][1], 2 / 3)
            self.assertFalse((Path(tmp) / "graph.txt.tmp").exists())

    def test_layout(self):
        text = graph_to_text(build_graph(hand_example()))
        lines = text.split("\n")
        self.assertEqual(lines[0], "cooccurrence v1 C=3")
        self.assertEqual(lines[1], "person,dog,frisbee")
        self.assertEqual(lines[2], "1 0.66666666666666663 0.33333333333333331")
        self.assertTrue(text.endswith("\n"))
        self.assertNotIn("\r", text)

    def test_empty_file(self):
        with self.assertRaises(ParseError) as ctx:
            parse_graph("")
        self.assertIn("line 1", str(ctx.exception))

    def test_header_without_body(self):
        with self.assertRaises(ParseError) as ctx:
            parse_graph("cooccurrence v1 C=2\n")
        self.assertIn("line 2", str(ctx.exception))

    def test_bad_header(self):
        with self.assertRaises(ParseError):
            parse_graph("adjacency C=2\na,b\n1 0\n0 1\n")
        with self.assertRaises(ParseError):
            parse_graph("cooccurrence v1 C=two\na,b\n1 0\n0 1\n")

    def test_row_count_mismatch(self):
        with self.assertRaises(FormatError):
            parse_graph("cooccurrence v1 C=2\na,b\n1 0\n0 1\n1 1\n")

    def test_name_count_mismatch(self):
        with self.assertRaises(FormatError):
            parse_graph("cooccurrence v1 C=2\na,b,c\n1 0\n0 1\n")

    def test_bad_decimal_names_line(self):
        with self.assertRaises(ParseError) as ctx:
            parse_graph("cooccurrence v1 C=2\na,b\n1 0\n0 x\n")
        self.assertIn("line 4", str(ctx.exception))

    def test_loaded_graph_has_no_support(self):
        graph = parse_graph("cooccurrence v1 C=1\nsolo\n1\n")
        self.assertIsInstance(graph, CooccurrenceGraph)
        self.assertIsNone(graph.support)
        self.assertEqual(graph.categories, ["solo"])


if __name__ == "__main__":
    unittest.main()
