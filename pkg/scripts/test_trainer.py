"""Training loop: log format, determinism, zero epochs, numeric failure handling."""
from __future__ import annotations

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from dataio import Sample  # noqa: E402
from errors import ConfigurationError, InputError, NumericError, ParseError  # noqa: E402
from model import ModelConfig, ParameterSet, SSGRLModel, Variant, load_checkpoint  # noqa: E402
from model.decoupling import FeatureMap  # noqa: E402
from model.diagnostics import random_instance  # noqa: E402
from training import EpochRecord, TrainConfig, TrainingLog, diagnostic_path, mean_loss, train  # noqa: E402


def toy_setup(variant=Variant.FULL, samples=6, seed=0):
    config = ModelConfig.for_profile("toy", C=4, W=2, H=2, variant=variant, seed=seed)
    instance = random_instance(config, seed=seed)
    rng = np.random.default_rng(seed + 100)
    dataset = [
        Sample(
            sample_id=f"s{i}",
            feature_map=FeatureMap(rng.standard_normal((2, 2, 8))),
            labels=(rng.random(4) < 0.5).astype(np.float64),
        )
        for i in range(samples)
    ]
    model = SSGRLModel(config, instance.embeddings, instance.graph, ParameterSet.initialize(config))
    return model, dataset


def quiet_config(**values) -> TrainConfig:
    merged = {"epochs": 3, "batch_size": 4, "lr": 1e-2, "record_wall_time": False}
    merged.update(values)
    return TrainConfig.create(**merged)


class TrainConfigTests(unittest.TestCase):
    def test_defaults_follow_recipe(self):
        cfg = TrainConfig()
        self.assertEqual((cfg.lr, cfg.beta1, cfg.beta2, cfg.eps), (1e-5, 0.9, 0.999, 1e-8))
        self.assertEqual((cfg.plateau_patience, cfg.epochs, cfg.batch_size), (5, 200, 4))

    def test_invalid_values(self):
        with self.assertRaises(ConfigurationError):
            TrainConfig.create(lr=0.0)
        with self.assertRaises(ConfigurationError):
            TrainConfig.create(batch_size=0)


class TrainingLogTests(unittest.TestCase):
    def test_line_format_and_round_trip(self):
        record = EpochRecord(epoch=3, loss=0.1, lr=1e-3, wall_ms=0)
        self.assertEqual(record.to_line(), "3\t0.10000000000000001\t0.001\t0")
        log = TrainingLog([record, EpochRecord(4, 0.05, 1e-4, 12)])
        with tempfile.TemporaryDirectory() as tmp:
            path = log.write(Path(tmp) / "train.log")
            self.assertEqual(TrainingLog.read(path).records, log.records)

    def test_malformed_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.log"
            path.write_text("1\t0.5\t0.001\t0\n2\t0.4\n", encoding="utf-8")
            with self.assertRaises(ParseError) as ctx:
                TrainingLog.read(path)
        self.assertEqual(ctx.exception.line, 2)


class TrainTests(unittest.TestCase):
    def test_zero_epochs_keep_initialization(self):
        model, dataset = toy_setup()
        before = model.params.snapshot()
        with tempfile.TemporaryDirectory() as tmp:
            result = train(dataset, model, quiet_config(epochs=0), checkpoint_path=Path(tmp) / "m.ckpt")
            _, saved = load_checkpoint(result.checkpoint_path)
        self.assertEqual(len(result.log), 0)
        self.assertEqual(result.final_loss, result.initial_loss)
        for name, values in before.items():
            np.testing.assert_array_equal(model.params[name].data, values)
            np.testing.assert_array_equal(saved[name].data, values)

    def test_loss_decreases_and_log_is_complete(self):
        model, dataset = toy_setup()
        result = train(dataset, model, quiet_config(epochs=20))
        self.assertEqual([record.epoch for record in result.log.records], list(range(1, 21)))
        self.assertLess(result.final_loss, result.initial_loss)
        self.assertTrue(all(record.wall_ms == 0 for record in result.log.records))
        self.assertGreater(mean_loss(model, dataset), 0.0)

    def test_same_seed_is_bit_identical(self):
        outputs = []
        with tempfile.TemporaryDirectory() as tmp:
            for run in range(2):
                model, dataset = toy_setup(seed=3)
                ckpt = Path(tmp) / f"run{run}.ckpt"
                log = Path(tmp) / f"run{run}.log"
                train(dataset, model, quiet_config(epochs=4, shuffle_seed=9), checkpoint_path=ckpt, log_path=log)
                outputs.append((ckpt.read_bytes(), log.read_text(encoding="utf-8")))
        self.assertEqual(outputs[0], outputs[1])
        self.assertEqual(len(outputs[0][1].splitlines()), 4)

    def test_every_variant_trains_one_epoch(self):
        for variant in Variant:
            model, dataset = toy_setup(variant=variant, samples=4)
            with self.subTest(variant=variant.value):
                result = train(dataset, model, quiet_config(epochs=1))
                self.assertEqual(len(result.log), 1)
                self.assertTrue(np.isfinite(result.final_loss))

    def test_numeric_failure_writes_diagnostic_checkpoint(self):
        model, dataset = toy_setup(samples=8)
        with tempfile.TemporaryDirectory() as tmp:
            ckpt = Path(tmp) / "blowup.ckpt"
            log = Path(tmp) / "blowup.log"
            with self.assertRaises(NumericError):
                train(dataset, model, quiet_config(epochs=3, lr=1e300), checkpoint_path=ckpt, log_path=log)
            self.assertTrue(diagnostic_path(ckpt).exists())
            self.assertFalse(ckpt.exists())
            self.assertTrue(log.exists())

    def test_rejects_bad_datasets(self):
        model, dataset = toy_setup()
        with self.assertRaises(InputError):
            train([], model, quiet_config())
        dataset[0].labels = np.zeros(3)
        with self.assertRaises(ConfigurationError):
            train(dataset, model, quiet_config())


if __name__ == "__main__":
    unittest.main()
