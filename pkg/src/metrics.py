"""Benchmark measures: center location error precision, normalized precision and success.

Threshold comparisons are strict: precision counts errors strictly below a
threshold, success counts overlaps strictly above it.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Sequence

import numpy as np

from .errors import EmptyInputError, LengthMismatchError
from .geometry import boxes_to_array, centers_of
from .models import (
    BoundingBox,
    DatasetReport,
    EvalCurve,
    EvalReport,
    SequenceMetrics,
)

logger = logging.getLogger(__name__)

PRECISION_THRESHOLD = 20.0
PRECISION_THRESHOLDS = np.linspace(0.0, 50.0, 51)
SUCCESS_THRESHOLDS = np.linspace(0.0, 1.0, 21)
NORM_PRECISION_THRESHOLDS = np.linspace(0.0, 0.5, 101)


def center_errors(preds: np.ndarray, truths: np.ndarray) -> np.ndarray:
    """Euclidean center distances between aligned (n, 4) box arrays."""
    diff = centers_of(preds) - centers_of(truths)
    return np.hypot(diff[:, 0], diff[:, 1])


def overlap_ratios(preds: np.ndarray, truths: np.ndarray) -> np.ndarray:
    """Intersection over union between aligned (n, 4) box arrays (broadcasts)."""
    left = np.maximum(preds[:, 0], truths[:, 0])
    right = np.minimum(preds[:, 0] + preds[:, 2], truths[:, 0] + truths[:, 2])
    top = np.maximum(preds[:, 1], truths[:, 1])
    bottom = np.minimum(preds[:, 1] + preds[:, 3], truths[:, 1] + truths[:, 3])
    intersection = np.maximum(0.0, right - left) * np.maximum(0.0, bottom - top)
    union = preds[:, 2] * preds[:, 3] + truths[:, 2] * truths[:, 3] - intersection
    return np.clip(intersection / union, 0.0, 1.0)


def cle(pred: BoundingBox, truth: BoundingBox) -> float:
    """Center location error in pixels."""
    return float(center_errors(boxes_to_array([pred]), boxes_to_array([truth]))[0])


def overlap_ratio(pred: BoundingBox, truth: BoundingBox) -> float:
    """Intersection area over union area."""
    return float(overlap_ratios(boxes_to_array([pred]), boxes_to_array([truth]))[0])


def _require(values: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise EmptyInputError(f"{what} must not be empty")
    return arr


def precision_at(cles: Sequence[float], threshold: float = PRECISION_THRESHOLD) -> float:
    """Fraction of center errors strictly below ``threshold``."""
    arr = _require(cles, "center errors")
    return float(np.mean(arr < threshold))


def precision_curve(cles: Sequence[float], thresholds: np.ndarray = PRECISION_THRESHOLDS) -> EvalCurve:
    arr = _require(cles, "center errors")
    values = (arr[None, :] < thresholds[:, None]).mean(axis=1)
    return EvalCurve(thresholds=thresholds.tolist(), values=values.tolist())


def success_curve(ors: Sequence[float], thresholds: np.ndarray = SUCCESS_THRESHOLDS) -> EvalCurve:
    arr = _require(ors, "overlap ratios")
    values = (arr[None, :] > thresholds[:, None]).mean(axis=1)
    return EvalCurve(thresholds=thresholds.tolist(), values=values.tolist())


def success_auc(ors: Sequence[float]) -> float:
    """Mean over the 21 thresholds 0, 0.05, ..., 1 of the fraction of overlaps above each."""
    return float(np.mean(success_curve(ors).values))


def normalized_errors(preds: np.ndarray, truths: np.ndarray, normalize_by: str = "truth") -> np.ndarray:
    """Center errors scaled per axis by the reference box size.

    Args:
        preds: (n, 4) predicted boxes
        truths: (n, 4) ground-truth boxes
        normalize_by: ``"truth"`` (default) or ``"pred"`` for the reference size
    """
    ref = truths if normalize_by == "truth" else preds
    diff = centers_of(preds) - centers_of(truths)
    return np.hypot(diff[:, 0] / ref[:, 2], diff[:, 1] / ref[:, 3])


def _aligned(preds: Sequence[BoundingBox], truths: Sequence[BoundingBox]) -> None:
    if len(preds) == 0 or len(truths) == 0:
        raise EmptyInputError("need at least one predicted and one ground-truth box")
    if len(preds) != len(truths):
        raise LengthMismatchError(f"{len(preds)} predictions vs {len(truths)} ground-truth boxes")


def norm_precision_curve(
    preds: Sequence[BoundingBox],
    truths: Sequence[BoundingBox],
    normalize_by: str = "truth",
    thresholds: np.ndarray = NORM_PRECISION_THRESHOLDS,
) -> EvalCurve:
    _aligned(preds, truths)
    errors = normalized_errors(boxes_to_array(preds), boxes_to_array(truths), normalize_by)
    values = (errors[None, :] < thresholds[:, None]).mean(axis=1)
    return EvalCurve(thresholds=thresholds.tolist(), values=values.tolist())


def norm_precision_auc(
    preds: Sequence[BoundingBox], truths: Sequence[BoundingBox], normalize_by: str = "truth"
) -> float:
    """Mean of the normalized-precision curve over the 101 thresholds in [0, 0.5]."""
    return float(np.mean(norm_precision_curve(preds, truths, normalize_by).values))


def evaluate_sequence(
    preds: Sequence[BoundingBox],
    truths: Sequence[BoundingBox],
    name: str = "sequence",
    attributes: Sequence[str] = (),
    normalize_by: str = "truth",
) -> EvalReport:
    """Compute every summary number and curve for one sequence."""
    _aligned(preds, truths)
    p, t = boxes_to_array(preds), boxes_to_array(truths)
    errors = center_errors(p, t)
    ors = overlap_ratios(p, t)
    nprec = norm_precision_curve(preds, truths, normalize_by)
    succ = success_curve(ors)
    metrics = SequenceMetrics(
        precision=precision_at(errors),
        success_auc=float(np.mean(succ.values)),
        norm_precision_auc=float(np.mean(nprec.values)),
    )
    logger.info(
        f"{name}: precision@20={metrics.precision:.3f} "
        f"success={metrics.success_auc:.3f} norm_precision={metrics.norm_precision_auc:.3f}"
    )
    return EvalReport(
        name=name,
        frames=len(preds),
        metrics=metrics,
        precision_curve=precision_curve(errors),
        success_curve=succ,
        norm_precision_curve=nprec,
        attributes=list(attributes),
    )


def mean_metrics(items: Sequence[SequenceMetrics]) -> SequenceMetrics:
    """Equal-weight average of per-sequence metrics."""
    if not items:
        raise EmptyInputError("cannot average zero sequences")
    return SequenceMetrics(
        precision=float(np.mean([m.precision for m in items])),
        success_auc=float(np.mean([m.success_auc for m in items])),
        norm_precision_auc=float(np.mean([m.norm_precision_auc for m in items])),
    )


def aggregate_reports(reports: Sequence[EvalReport]) -> DatasetReport:
    """Average sequences with equal weight and bucket them by attribute tag."""
    buckets: Dict[str, List[SequenceMetrics]] = defaultdict(list)
    for report in reports:
        for tag in report.attributes:
            buckets[tag].append(report.metrics)
    return DatasetReport(
        sequences=list(reports),
        overall=mean_metrics([r.metrics for r in reports]),
        by_attribute={tag: mean_metrics(items) for tag, items in sorted(buckets.items())},
    )
