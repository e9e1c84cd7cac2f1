"""Multi-label metrics: label assignment rules, overall/per-class P/R/F1, AP and mAP.

Conventions:
    - a rate whose denominator is zero is 0, and F1 of (0, 0) is 0
    - categories without ground-truth positives are left out of mAP and of CP/CR
    - score ties rank the lower sample index first
"""
from __future__ import annotations

import logging
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from errors import DimensionError, InputError

logger = logging.getLogger("SSGRL.Eval")

TOP_K = 3
THRESHOLD = 0.5


class Setting(str, Enum):
    TOP3 = "top3"
    THRESHOLD = "threshold"


def _as_matrix(name: str, values) -> np.ndarray:
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise DimensionError(f"{name} must be an M x C matrix, got shape {matrix.shape}")
    return matrix


def assign_labels(p, setting: Setting, k: int = TOP_K, threshold: float = THRESHOLD) -> np.ndarray:
    """Binary predictions from probabilities.

    top3: the k most probable labels of each image, minus any below ``threshold``.
    threshold: every label strictly above ``threshold``.
    """
    p = _as_matrix("probabilities", p)
    setting = Setting(setting)
    if setting == Setting.THRESHOLD:
        return (p > threshold).astype(np.int64)

    predictions = np.zeros(p.shape, dtype=np.int64)
    # stable sort on the negated scores keeps the lower index first on ties
    ranked = np.argsort(-p, axis=1, kind="stable")[:, :k]
    rows = np.arange(p.shape[0])[:, None]
    predictions[rows, ranked] = 1
    predictions[p < threshold] = 0
    return predictions


def _ratio(numerator: float, denominator: float) -> float:
    return float(numerator) / float(denominator) if denominator > 0 else 0.0


def _f1(precision: float, recall: float) -> float:
    total = precision + recall
    return 2.0 * precision * recall / total if total > 0 else 0.0


class PRFScores(BaseModel):
    OP: float
    OR: float
    OF1: float
    CP: float
    CR: float
    CF1: float
    correct: List[int] = Field(default_factory=list)
    predicted: List[int] = Field(default_factory=list)
    ground_truth: List[int] = Field(default_factory=list)

    def rates(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in ("OP", "OR", "OF1", "CP", "CR", "CF1")}


def prf_suite(pred, gt) -> PRFScores:
    pred = _as_matrix("predictions", pred)
    gt = _as_matrix("ground truth", gt)
    if pred.shape != gt.shape:
        raise DimensionError(f"predictions {pred.shape} and ground truth {gt.shape} differ in shape")
    pred = pred > 0
    gt = gt > 0

    correct = np.sum(pred & gt, axis=0)
    predicted = np.sum(pred, axis=0)
    ground_truth = np.sum(gt, axis=0)

    overall_precision = _ratio(correct.sum(), predicted.sum())
    overall_recall = _ratio(correct.sum(), ground_truth.sum())

    included = [c for c in range(gt.shape[1]) if ground_truth[c] > 0]
    if included:
        class_precision = float(np.mean([_ratio(correct[c], predicted[c]) for c in included]))
        class_recall = float(np.mean([_ratio(correct[c], ground_truth[c]) for c in included]))
    else:
        class_precision = class_recall = 0.0

    return PRFScores(
        OP=overall_precision,
        OR=overall_recall,
        OF1=_f1(overall_precision, overall_recall),
        CP=class_precision,
        CR=class_recall,
        CF1=_f1(class_precision, class_recall),
        correct=[int(v) for v in correct],
        predicted=[int(v) for v in predicted],
        ground_truth=[int(v) for v in ground_truth],
    )


def average_precision(scores, gt) -> Optional[float]:
    """Mean of precision@k over the ranks k of the positives; None without positives."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    gt = np.asarray(gt).reshape(-1) > 0
    if scores.shape != gt.shape:
        raise DimensionError(f"scores {scores.shape} and labels {gt.shape} differ in length")
    positives = int(gt.sum())
    if positives == 0:
        return None
    order = np.argsort(-scores, kind="stable")
    hits = gt[order]
    ranks = np.arange(1, len(hits) + 1, dtype=np.float64)
    precision_at_hits = np.cumsum(hits)[hits] / ranks[hits]
    return float(np.mean(precision_at_hits))


def mean_average_precision(scores, gt) -> Tuple[float, List[Optional[float]]]:
    """(mAP over categories with positives, per-category AP or None)."""
    scores = _as_matrix("scores", scores)
    gt = _as_matrix("ground truth", gt)
    if scores.shape != gt.shape:
        raise DimensionError(f"scores {scores.shape} and ground truth {gt.shape} differ in shape")
    per_category = [average_precision(scores[:, c], gt[:, c]) for c in range(scores.shape[1])]
    included = [ap for ap in per_category if ap is not None]
    return (float(np.mean(included)) if included else 0.0), per_category


class EvalReport(BaseModel):
    categories: List[str]
    num_samples: int
    mAP: float
    ap: Dict[str, Optional[float]]
    settings: Dict[str, PRFScores]
    k: int = TOP_K
    threshold: float = THRESHOLD

    @property
    def included_categories(self) -> List[str]:
        return [name for name in self.categories if self.ap.get(name) is not None]

    def setting(self, setting: Setting) -> PRFScores:
        return self.settings[Setting(setting).value]


def evaluate(
    probabilities,
    labels,
    categories: Sequence[str],
    k: int = TOP_K,
    threshold: float = THRESHOLD,
) -> EvalReport:
    probabilities = _as_matrix("probabilities", probabilities)
    labels = _as_matrix("labels", labels)
    if probabilities.shape != labels.shape:
        raise DimensionError(f"probabilities {probabilities.shape} and labels {labels.shape} differ in shape")
    if probabilities.shape[1] != len(categories):
        raise DimensionError(f"{probabilities.shape[1]} score columns for {len(categories)} categories")
    if probabilities.shape[0] == 0:
        raise InputError("nothing to evaluate: no samples")

    mAP, per_category = mean_average_precision(probabilities, labels)
    settings = {
        setting.value: prf_suite(assign_labels(probabilities, setting, k=k, threshold=threshold), labels)
        for setting in Setting
    }
    report = EvalReport(
        categories=list(categories),
        num_samples=int(probabilities.shape[0]),
        mAP=mAP,
        ap=dict(zip(categories, per_category)),
        settings=settings,
        k=k,
        threshold=threshold,
    )
    logger.info(
        "📊 [EVAL] %d 个样本, mAP %.4f, CF1 top3 %.4f 阈值 %.4f",
        report.num_samples,
        report.mAP,
        settings[Setting.TOP3.value].CF1,
        settings[Setting.THRESHOLD.value].CF1,
    )
    return report
