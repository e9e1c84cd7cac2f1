"""Command-line entry point.

    python main.py gen --spec configs/synthetic_toy.json --out data/toy
    python main.py build-graph --ann data/toy/annotations_train.tsv --out data/toy/graph.txt
    python main.py train --config configs/synthetic_toy.json --data data/toy --out runs/toy.ckpt
    python main.py eval --ckpt runs/toy.ckpt --data data/toy --report runs/toy_report.txt
    python main.py inspect --ckpt runs/toy.ckpt --data data/toy --sample test_0000 --out runs/inspect
    python main.py gradcheck --config configs/toy.json

Exit codes: 0 success, 1 failed check, 2 usage or validation error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import Config
from errors import (
    CheckFailure,
    ConfigurationError,
    DimensionError,
    EmbeddingLookupError,
    FormatError,
    InputError,
    NumericError,
    ParseError,
)
from services.pipeline_service import PipelineService

logger = logging.getLogger("SSGRL.CLI")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

USAGE_ERRORS = (
    ConfigurationError,
    InputError,
    ParseError,
    FormatError,
    EmbeddingLookupError,
    DimensionError,
    FileNotFoundError,
    NotADirectoryError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssgrl", description="Multi-label recognition head toolkit")
    parser.add_argument("--workers", type=int, default=None, help="feature-map loader threads")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a synthetic planted-pattern dataset")
    gen.add_argument("--spec", type=Path, required=True)
    gen.add_argument("--out", type=Path, required=True)

    graph = commands.add_parser("build-graph", help="build the label co-occurrence graph")
    graph.add_argument("--ann", type=Path, required=True)
    graph.add_argument("--out", type=Path, required=True)
    graph.add_argument("--categories", type=Path, default=None)

    train = commands.add_parser("train", help="train a model on a dataset directory")
    train.add_argument("--config", type=Path, default=None)
    train.add_argument("--data", type=Path, default=None)
    train.add_argument("--out", type=Path, default=None)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--variant", type=str, default=None)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--batch-size", dest="batch_size", type=int, default=None)

    evaluate = commands.add_parser("eval", help="evaluate a checkpoint on a split")
    evaluate.add_argument("--ckpt", type=Path, required=True)
    evaluate.add_argument("--data", type=Path, required=True)
    evaluate.add_argument("--report", type=Path, required=True)
    evaluate.add_argument("--split", default="test")
    evaluate.add_argument("--graph", type=Path, default=None)

    inspect = commands.add_parser("inspect", help="export attention grids for one sample")
    inspect.add_argument("--ckpt", type=Path, required=True)
    inspect.add_argument("--data", type=Path, required=True)
    inspect.add_argument("--sample", required=True)
    inspect.add_argument("--out", type=Path, required=True)
    inspect.add_argument("--split", default="test")
    inspect.add_argument("--graph", type=Path, default=None)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference check of every gradient")
    gradcheck.add_argument("--config", type=Path, default=None)
    gradcheck.add_argument("--inject-fault", dest="inject_fault", action="store_true")
    return parser


def run(args: argparse.Namespace) -> int:
    service = PipelineService(workers=args.workers)

    if args.command == "gen":
        summary = service.generate(args.spec, args.out)
        print(json.dumps(summary, indent=2, sort_keys=True))
    elif args.command == "build-graph":
        graph = service.build_graph(args.ann, args.out, args.categories)
        print(f"graph: C={graph.num_categories} -> {args.out}")
    elif args.command == "train":
        overrides = {
            "epochs": args.epochs,
            "lr": args.lr,
            "variant": args.variant,
            "seed": args.seed,
            "batch_size": args.batch_size,
        }
        result = service.train(args.config, args.data, args.out, overrides)
        print(
            f"trained {len(result.log)} epochs: loss {result.initial_loss:.6f} -> {result.final_loss:.6f}; "
            f"checkpoint {result.checkpoint_path}, log {result.log_path}"
        )
    elif args.command == "eval":
        report = service.evaluate(args.ckpt, args.data, args.report, split=args.split, graph_path=args.graph)
        print(f"mAP: {report.mAP:.6f} -> {args.report}")
    elif args.command == "inspect":
        summary = service.inspect(
            args.ckpt, args.data, args.sample, args.out, split=args.split, graph_path=args.graph
        )
        print(json.dumps(summary, indent=2, sort_keys=True))
    elif args.command == "gradcheck":
        worst = service.gradcheck(args.config, inject_fault=args.inject_fault)
        print(f"worst relative error: {worst:.3e}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    Config.setup_logging()
    try:
        return run(args)
    except CheckFailure as exc:
        logger.error("❌ [CHECK] 检查未通过: %s", exc)
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except NumericError as exc:
        logger.error("❌ [NUMERIC] 数值错误: %s", exc)
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except USAGE_ERRORS as exc:
        logger.error("⚠️ [USAGE] 参数或输入错误: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
