"""Gated propagation over the co-occurrence graph."""
from __future__ import annotations

import sys
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from engine import Parameter, Tensor, grad_check, mul, reduce_sum  # noqa: E402
from errors import DimensionError, InputError  # noqa: E402
from model import CooccurrenceGraph, HiddenStateSet, PropagationParams, aggregate, gated_update, init_states, propagate  # noqa: E402


def make_params(rng, d_h=4, zero=False, scale=0.5) -> PropagationParams:
    def draw(shape, name):
        return Parameter(np.zeros(shape) if zero else rng.standard_normal(shape) * scale, name=name)

    return PropagationParams(
        W_z=draw((2 * d_h, d_h), "W_z"),
        U_z=draw((d_h, d_h), "U_z"),
        W_r=draw((2 * d_h, d_h), "W_r"),
        U_r=draw((d_h, d_h), "U_r"),
        W=draw((2 * d_h, d_h), "W"),
        U=draw((d_h, d_h), "U"),
    )


def make_graph(matrix) -> CooccurrenceGraph:
    matrix = np.asarray(matrix, dtype=np.float64)
    return CooccurrenceGraph([f"c{i}" for i in range(matrix.shape[0])], matrix)


def states(values) -> HiddenStateSet:
    return HiddenStateSet(t=0, states=Tensor(values))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class InitStatesTests(unittest.TestCase):
    def test_copies_features(self):
        features = np.random.default_rng(0).standard_normal((3, 4))
        init = init_states(features, 4)
        self.assertEqual(init.t, 0)
        np.testing.assert_array_equal(init.numpy(), features)
        np.testing.assert_array_equal(init_states(np.zeros((2, 4)), 4).numpy(), np.zeros((2, 4)))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            init_states(np.zeros((3, 5)), 4)


class AggregateTests(unittest.TestCase):
    def test_hand_evaluated_two_nodes(self):
        msg = aggregate(states([[2.0], [4.0]]), make_graph([[1.0, 0.5], [1.0, 1.0]]))
        np.testing.assert_array_equal(msg.data, [[4.0, 6.0], [6.0, 5.0]])

    def test_identity_and_empty_adjacency(self):
        h = np.random.default_rng(1).standard_normal((3, 2))
        np.testing.assert_array_equal(aggregate(states(h), make_graph(np.eye(3))).data, np.hstack([h, h]))
        np.testing.assert_array_equal(aggregate(states(h), make_graph(np.zeros((3, 3)))).data, np.zeros((3, 4)))

    def test_graph_size_mismatch(self):
        with self.assertRaises(DimensionError):
            aggregate(states(np.ones((2, 3))), make_graph(np.eye(3)))


class GatedUpdateTests(unittest.TestCase):
    def test_zero_params_halve_state(self):
        params = make_params(None, zero=True)
        h_prev = np.array([1.0, -3.0, 0.25, 8.0])
        out = gated_update(np.arange(8.0), h_prev, params)
        np.testing.assert_array_equal(out.data, 0.5 * h_prev)
        np.testing.assert_array_equal(gated_update(np.ones(8), np.zeros(4), params).data, np.zeros(4))

    def test_matches_reference_equations(self):
        rng = np.random.default_rng(2)
        params = make_params(rng)
        msg, h_prev = rng.standard_normal(8), rng.standard_normal(4)
        z = _sigmoid(msg @ params.W_z.data + h_prev @ params.U_z.data)
        r = _sigmoid(msg @ params.W_r.data + h_prev @ params.U_r.data)
        candidate = np.tanh(msg @ params.W.data + (r * h_prev) @ params.U.data)
        expected = (1.0 - z) * h_prev + z * candidate
        np.testing.assert_allclose(gated_update(msg, h_prev, params).data, expected, rtol=1e-13, atol=1e-14)

    def test_convexity_of_update_gate(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            params = make_params(rng, scale=1.5)
            msg, h_prev = rng.standard_normal((3, 8)) * 2.0, rng.standard_normal((3, 4)) * 2.0
            r = _sigmoid(msg @ params.W_r.data + h_prev @ params.U_r.data)
            candidate = np.tanh(msg @ params.W.data + (r * h_prev) @ params.U.data)
            h = gated_update(msg, h_prev, params).data
            with self.subTest(seed=seed):
                self.assertTrue(np.all(h >= np.minimum(h_prev, candidate) - 1e-12))
                self.assertTrue(np.all(h <= np.maximum(h_prev, candidate) + 1e-12))

    def test_gradient_of_all_gates(self):
        rng = np.random.default_rng(3)
        params = make_params(rng)
        msg, h_prev = Tensor(rng.standard_normal((2, 8))), Tensor(rng.standard_normal((2, 4)))
        weights = Tensor(rng.standard_normal((2, 4)))
        gates = [params.W_z, params.U_z, params.W_r, params.U_r, params.W, params.U]
        error = grad_check(lambda: reduce_sum(mul(gated_update(msg, h_prev, params), weights)), gates)
        self.assertLess(error, 1e-6)

    def test_shape_checks(self):
        params = make_params(None, zero=True)
        with self.assertRaises(DimensionError):
            gated_update(np.ones(6), np.ones(4), params)
        with self.assertRaises(DimensionError):
            gated_update(np.ones((2, 8)), np.ones(4), params)


class PropagateTests(unittest.TestCase):
    def test_zero_steps_return_init(self):
        init = states(np.ones((2, 4)))
        out = propagate(init, make_graph(np.eye(2)), make_params(np.random.default_rng(4)), T=0)
        self.assertIs(out, init)

    def test_zero_params_three_steps(self):
        h0 = np.random.default_rng(5).standard_normal((3, 4))
        graph = make_graph(np.random.default_rng(6).random((3, 3)))
        out = propagate(states(h0), graph, make_params(None, zero=True), T=3)
        self.assertEqual(out.t, 3)
        np.testing.assert_array_equal(out.numpy(), h0 / 8.0)

    def test_empty_graph_norm_halves(self):
        h0 = np.random.default_rng(7).standard_normal((2, 4))
        current = states(h0)
        params = make_params(None, zero=True)
        for t in range(1, 5):
            current = propagate(current, make_graph(np.zeros((2, 2))), params, T=1)
            self.assertEqual(np.linalg.norm(current.numpy()), 2.0 ** -t * np.linalg.norm(h0))

    def test_isolated_node_ignores_the_others(self):
        rng = np.random.default_rng(8)
        params = make_params(rng)
        graph = make_graph([[1.0, 0.5, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        h0 = rng.standard_normal((3, 4))
        perturbed = h0.copy()
        perturbed[:2] += rng.standard_normal((2, 4))
        first = propagate(states(h0), graph, params, T=3).numpy()
        second = propagate(states(perturbed), graph, params, T=3).numpy()
        np.testing.assert_array_equal(first[2], second[2])
        self.assertFalse(np.array_equal(first[0], second[0]))

        zero = make_params(None, zero=True)
        halved = propagate(states(perturbed), graph, zero, T=2).numpy()
        np.testing.assert_array_equal(halved[2], h0[2] / 4.0)

    def test_node_order_does_not_matter(self):
        rng = np.random.default_rng(9)
        params = make_params(rng)
        graph = make_graph(rng.random((4, 4)))
        h0 = rng.standard_normal((4, 4))
        forward = propagate(states(h0), graph, params, T=3, node_order=[0, 1, 2, 3]).numpy()
        backward = propagate(states(h0), graph, params, T=3, node_order=[3, 2, 1, 0]).numpy()
        np.testing.assert_array_equal(forward, backward)
        batched = propagate(states(h0), graph, params, T=3).numpy()
        np.testing.assert_allclose(batched, forward, rtol=1e-13, atol=1e-14)

    def test_invalid_arguments(self):
        init = states(np.ones((2, 4)))
        params = make_params(None, zero=True)
        with self.assertRaises(InputError):
            propagate(init, make_graph(np.eye(2)), params, T=-1)
        with self.assertRaises(InputError):
            propagate(init, make_graph(np.eye(2)), params, T=1, node_order=[0, 0])
        with self.assertRaises(DimensionError):
            propagate(states(np.ones((2, 3))), make_graph(np.eye(2)), params, T=1)

    def test_gradient_through_two_steps(self):
        rng = np.random.default_rng(10)
        params = make_params(rng)
        graph = make_graph(rng.random((3, 3)))
        h0 = Parameter(rng.standard_normal((3, 4)), name="h0")
        weights = Tensor(rng.standard_normal((3, 4)))
        gates = [params.W_z, params.U_z, params.W_r, params.U_r, params.W, params.U, h0]
        error = grad_check(
            lambda: reduce_sum(mul(propagate(HiddenStateSet(0, h0), graph, params, T=2).states, weights)),
            gates,
        )
        self.assertLess(error, 1e-4)


if __name__ == "__main__":
    unittest.main()
