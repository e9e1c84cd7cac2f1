"""Operations behind the command-line surface."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from config import Config
from dataio import DatasetDirectory, generate_synthetic, load_synthetic_spec, read_categories, write_dataset
from dataio.annotations import parse_annotations
from engine import injected_fault
from errors import CheckFailure, ConfigurationError, InputError
from evaluation import EvalReport, evaluate, write_report
from model import (
    CooccurrenceGraph,
    ModelConfig,
    SSGRLModel,
    Variant,
    build_graph,
    load_checkpoint,
    load_graph,
    save_graph,
    write_debug_dump,
)
from model.diagnostics import SHIFT_INVARIANT_ATOL, end_to_end_check
from model.models import PROPAGATING_VARIANTS
from training import TrainingResult, train

from .run_config import RunConfig, load_run_config

logger = logging.getLogger("SSGRL.Pipeline")


def _first_appearance_categories(text: str) -> List[str]:
    names: List[str] = []
    for raw in text.split("\n"):
        parts = raw.split("\t")
        if len(parts) != 2:
            continue
        for token in parts[1].split(","):
            token = token.strip()
            if token and token not in names:
                names.append(token)
    return names


class PipelineService:
    def __init__(self, workers: Optional[int] = None):
        self.workers = Config.LOADER_WORKERS if workers is None else workers

    def generate(self, spec_path: Path, out_dir: Path) -> Dict[str, Any]:
        spec = load_synthetic_spec(spec_path)
        dataset = generate_synthetic(spec)
        return write_dataset(dataset, out_dir)

    def build_graph(
        self,
        annotations_path: Path,
        out_path: Path,
        categories_path: Optional[Path] = None,
    ) -> CooccurrenceGraph:
        """Categories come from ``categories_path``, a sibling categories.txt, or first appearance."""
        annotations_path = Path(annotations_path)
        text = annotations_path.read_text(encoding="utf-8")
        if categories_path is None and (annotations_path.parent / "categories.txt").is_file():
            categories_path = annotations_path.parent / "categories.txt"
        categories = read_categories(categories_path) if categories_path else _first_appearance_categories(text)
        if not categories:
            raise InputError(f"{annotations_path} has no labelled samples")
        graph = build_graph(parse_annotations(text, categories))
        save_graph(graph, out_path)
        return graph

    def _graph_for(self, dataset: DatasetDirectory, graph_path: Optional[Path]) -> CooccurrenceGraph:
        if graph_path is not None:
            return load_graph(graph_path)
        return build_graph(dataset.annotations("train"))

    def train(
        self,
        config_path: Optional[Path],
        data_dir: Optional[Path],
        out_path: Optional[Path],
        overrides: Optional[Dict[str, Any]] = None,
    ) -> TrainingResult:
        """Missing paths fall back to the run file's ``paths`` section, then to Config.DATA_DIR / Config.RUNS_DIR."""
        run = load_run_config(config_path, overrides)
        data_dir = data_dir or run.paths.data_dir
        out_path = out_path or run.paths.checkpoint
        if data_dir is None or out_path is None:
            Config.ensure_dirs()
            data_dir = data_dir or Config.DATA_DIR
            out_path = out_path or Config.RUNS_DIR / f"{run.model.variant.value}.ckpt"
        dataset = DatasetDirectory(data_dir)
        embeddings = dataset.embeddings()
        samples = dataset.load_split("train", workers=self.workers)
        first = samples[0].feature_map
        model_config = run.model_config(
            C=len(embeddings.categories), W=first.width, H=first.height, N=first.channels, d_s=embeddings.dim
        )
        graph = build_graph(dataset.annotations("train"))
        model = SSGRLModel(model_config, embeddings, graph)

        out_path = Path(out_path)
        log_path = out_path.with_name(out_path.name + ".log")
        return train(samples, model, run.train, checkpoint_path=out_path, log_path=log_path)

    def _load_model(
        self, checkpoint_path: Path, dataset: DatasetDirectory, graph_path: Optional[Path]
    ) -> SSGRLModel:
        config, params = load_checkpoint(checkpoint_path)
        categories = dataset.categories()
        if len(categories) != config.C:
            raise ConfigurationError(
                f"checkpoint was trained for C={config.C} categories, dataset has {len(categories)}"
            )
        graph = self._graph_for(dataset, graph_path) if config.variant in PROPAGATING_VARIANTS else None
        return SSGRLModel(config, dataset.embeddings(), graph, params)

    def evaluate(
        self,
        checkpoint_path: Path,
        data_dir: Path,
        report_path: Optional[Path] = None,
        split: str = "test",
        graph_path: Optional[Path] = None,
    ) -> EvalReport:
        dataset = DatasetDirectory(data_dir)
        model = self._load_model(checkpoint_path, dataset, graph_path)
        samples = dataset.load_split(split, workers=self.workers)
        probabilities = model.predict_proba([sample.feature_map for sample in samples])
        labels = np.stack([sample.labels for sample in samples])
        report = evaluate(probabilities, labels, model.categories)
        if report_path is not None:
            write_report(report, report_path)
            logger.info("💾 [EVAL] 评测报告已写入 %s", report_path)
        return report

    def inspect(
        self,
        checkpoint_path: Path,
        data_dir: Path,
        sample_id: str,
        out_dir: Path,
        split: str = "test",
        graph_path: Optional[Path] = None,
        top_k: int = 3,
    ) -> Dict[str, Any]:
        """Attention grids of the most confident categories plus the predicted distribution."""
        dataset = DatasetDirectory(data_dir)
        model = self._load_model(checkpoint_path, dataset, graph_path)
        sample = dataset.load_sample(split, sample_id)
        prediction = model.forward(sample.feature_map, debug=True)
        trace = prediction.trace
        if trace.attention is None:
            raise ConfigurationError(f"variant '{model.config.variant.value}' does not compute attention maps")

        order = np.argsort(-prediction.probabilities, kind="stable")[:top_k]
        top = [model.categories[int(index)] for index in order]
        out_dir = Path(out_dir)
        attention_path = trace.attention.save(out_dir / f"{sample_id}.attention.txt", categories=top)

        distribution_path = out_dir / f"{sample_id}.probabilities.tsv"
        lines = [f"{name}\t{probability:.17g}\n" for name, probability in zip(model.categories, prediction.probabilities)]
        distribution_path.write_text("".join(lines), encoding="utf-8")
        trace_path = write_debug_dump(trace, out_dir / f"{sample_id}.trace.json")

        peaks = {name: list(trace.attention.argmax_location(name)) for name in top}
        logger.info("🔍 [INSPECT] %s: 置信度最高的类别 %s, 注意力峰值位置 %s", sample_id, top, peaks)
        return {
            "sample": sample_id,
            "top_categories": top,
            "attention_peaks": peaks,
            "attention_file": str(attention_path),
            "distribution_file": str(distribution_path),
            "trace_file": str(trace_path),
        }

    def gradcheck(
        self,
        config_path: Optional[Path] = None,
        inject_fault: bool = False,
        tolerance: Optional[float] = None,
    ) -> float:
        """Worst relative error over every variant; raises CheckFailure above ``tolerance``."""
        tolerance = Config.GRADCHECK_TOLERANCE if tolerance is None else tolerance
        run: RunConfig = load_run_config(config_path)
        if run.profile != "toy":
            raise ConfigurationError(f"gradcheck runs on the toy profile only, configuration uses '{run.profile}'")
        section = run.model
        model_config: ModelConfig = run.model_config(
            C=section.C or 4, W=section.W or 2, H=section.H or 2
        )

        if inject_fault:
            with injected_fault("tanh"):
                results = end_to_end_check(model_config, tuple(Variant), step=Config.GRADCHECK_STEP)
        else:
            results = end_to_end_check(model_config, tuple(Variant), step=Config.GRADCHECK_STEP)

        worst = max(report.max_relative_error for report, _ in results.values())
        residual = max(value for _, value in results.values())
        failed = [variant.value for variant, (report, _) in results.items() if not report.passed(tolerance)]
        if failed:
            raise CheckFailure(
                f"gradient check failed for {', '.join(failed)}: worst relative error {worst:.3e} >= {tolerance:g}"
            )
        if residual > SHIFT_INVARIANT_ATOL:
            raise CheckFailure(f"shift-invariant parameters carry gradient {residual:.3e}")
        return worst
