"""Adam update rule and the plateau learning-rate schedule."""
from __future__ import annotations

import sys
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from engine import Parameter, mul  # noqa: E402
from errors import ConfigurationError, NumericError  # noqa: E402
from training import Adam, AdamState, PlateauDecay, adam_step  # noqa: E402


class AdamStepTests(unittest.TestCase):
    def test_zero_gradient_leaves_parameters(self):
        theta = Parameter(np.array([1.5, -2.0]), name="theta")
        adam_step([theta], [np.zeros(2)], AdamState(lr=0.1))
        np.testing.assert_array_equal(theta.data, [1.5, -2.0])

    def test_missing_gradient_counts_as_zero(self):
        theta = Parameter(np.array([0.25]), name="theta")
        state = adam_step([theta], [None], AdamState(lr=0.1))
        np.testing.assert_array_equal(theta.data, [0.25])
        self.assertEqual(state.step, 1)

    def test_hand_evaluated_first_step(self):
        theta = Parameter(1.0, name="theta")
        state = adam_step([theta], [np.array(1.0)], AdamState(lr=0.1))
        self.assertAlmostEqual(float(theta.data), 1.0 - 0.1 / (1.0 + 1e-8), places=15)
        self.assertAlmostEqual(float(state.m["theta"]) / 0.1, 1.0, places=12)
        self.assertAlmostEqual(float(state.v["theta"]) / 0.001, 1.0, places=12)

    def test_repeated_gradient_keeps_step_size(self):
        theta = Parameter(0.0, name="theta")
        state = AdamState(lr=0.01)
        adam_step([theta], [np.array(2.0)], state)
        first = float(theta.data)
        adam_step([theta], [np.array(2.0)], state)
        self.assertAlmostEqual(first, -0.01, places=9)
        self.assertAlmostEqual(float(theta.data) - first, -0.01, places=9)

    def test_moments_stay_finite_and_second_moment_non_negative(self):
        rng = np.random.default_rng(13)
        params = [Parameter(rng.standard_normal((3, 2)), name="a"), Parameter(rng.standard_normal(4), name="b")]
        state = AdamState(lr=1e-3)
        for step in range(300):
            scale = 10.0 ** rng.uniform(-6, 6)
            grads = [scale * rng.standard_normal(param.shape) for param in params]
            adam_step(params, grads, state)
            for name in ("a", "b"):
                with self.subTest(step=step, slot=name):
                    self.assertTrue(np.all(np.isfinite(state.m[name])))
                    self.assertTrue(np.all(np.isfinite(state.v[name])))
                    self.assertTrue(np.all(state.v[name] >= 0.0))
        self.assertTrue(all(np.all(np.isfinite(param.data)) for param in params))

    def test_non_finite_gradient_names_parameter(self):
        theta = Parameter(np.zeros(3), name="heads.W")
        with self.assertRaises(NumericError) as ctx:
            adam_step([theta], [np.array([0.0, np.inf, 0.0])], AdamState())
        self.assertIn("heads.W", str(ctx.exception))
        np.testing.assert_array_equal(theta.data, np.zeros(3))

    def test_gradient_shape_mismatch(self):
        theta = Parameter(np.zeros(3), name="theta")
        with self.assertRaises(ConfigurationError):
            adam_step([theta], [np.zeros(2)], AdamState())


class AdamOptimizerTests(unittest.TestCase):
    def test_descends_on_square(self):
        theta = Parameter(3.0, name="theta")
        optimizer = Adam([theta], lr=0.1)

        optimizer.zero_grad()
        mul(theta, theta).backward()
        optimizer.step()
        self.assertAlmostEqual(float(theta.data), 2.9, places=7)

        for _ in range(299):
            optimizer.zero_grad()
            mul(theta, theta).backward()
            optimizer.step()
        self.assertLess(abs(float(theta.data)), 0.5)
        self.assertEqual(optimizer.state.step, 300)

    def test_state_dict_round_trip(self):
        rng = np.random.default_rng(0)
        first = Parameter(rng.standard_normal((2, 2)), name="a")
        optimizer = Adam([first], lr=0.05)
        for _ in range(3):
            optimizer.zero_grad()
            mul(first, first).backward(np.ones((2, 2)))
            optimizer.step()

        second = Parameter(first.data.copy(), name="a")
        clone = Adam([second], lr=1.0)
        clone.load_state_dict(optimizer.state_dict())
        self.assertEqual(clone.lr, 0.05)
        self.assertEqual(clone.state.step, 3)
        grad = np.full((2, 2), 0.3)
        adam_step([first], [grad], optimizer.state)
        adam_step([second], [grad], clone.state)
        np.testing.assert_array_equal(first.data, second.data)

    def test_rejects_bad_settings(self):
        with self.assertRaises(ConfigurationError):
            Adam([Parameter(0.0, name="x")], lr=0.0)
        optimizer = Adam([Parameter(np.zeros(2), name="x")])
        with self.assertRaises(ConfigurationError):
            optimizer.load_state_dict({"step": 1, "m": {"x": np.zeros(3)}, "v": {}})


class PlateauDecayTests(unittest.TestCase):
    def test_constant_loss_cuts_after_patience(self):
        optimizer = Adam([Parameter(0.0, name="x")], lr=1e-3)
        schedule = PlateauDecay(patience=5, threshold=1e-4)
        cuts = [epoch for epoch in range(1, 13) if schedule.step(1.0, optimizer)]
        self.assertEqual(cuts, [6, 11])
        self.assertAlmostEqual(optimizer.lr, 1e-5, places=18)

    def test_relative_threshold(self):
        optimizer = Adam([Parameter(0.0, name="x")], lr=1.0)
        schedule = PlateauDecay(patience=1, threshold=0.1)
        self.assertFalse(schedule.step(10.0, optimizer))
        # 9.5 is not below 10 - 0.1 * 10
        self.assertTrue(schedule.step(9.5, optimizer))
        self.assertEqual(optimizer.lr, 0.1)
        self.assertFalse(schedule.step(8.0, optimizer))
        self.assertEqual(schedule.best, 8.0)

    def test_improvement_resets_counter(self):
        optimizer = Adam([Parameter(0.0, name="x")], lr=1.0)
        schedule = PlateauDecay(patience=3)
        for loss in (5.0, 5.0, 5.0, 4.0, 4.0, 4.0):
            self.assertFalse(schedule.step(loss, optimizer))
        self.assertTrue(schedule.step(4.0, optimizer))

    def test_patience_must_be_positive(self):
        with self.assertRaises(ConfigurationError):
            PlateauDecay(patience=0)


if __name__ == "__main__":
    unittest.main()
