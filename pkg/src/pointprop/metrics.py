"""Confusion-matrix segmentation metrics: PA, mPA, mIoU.

Class-inclusion rules (these move the means by points, so they are pinned
here): per-class pixel accuracy averages over classes present in the ground
truth (row sum > 0); per-class IoU averages over classes present in either
ground truth or prediction (TP + FP + FN > 0).  Dataset-level numbers come
from summing confusion matrices, not from averaging per-image scores.

Pixels whose ground-truth id is in the ignore set are excluded entirely.
A predicted reserved id (255) on an evaluated pixel counts against the
ground-truth class (a miss) without crediting any class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClassIdOutOfRangeError, EmptyMatrixError, ShapeMismatchError
from .tensor_io import RESERVED_ID

DEFAULT_IGNORE_IDS = frozenset({RESERVED_ID})


@dataclass
class ConfusionMatrix:
    """Square counts indexed [gt_class][pred_class] plus an ignored count.

    Index ``num_classes`` is a slot for the reserved id so that reserved
    predictions (and reserved ground truth, when not ignored) stay
    accounted for; it never participates in per-class means.
    """

    num_classes: int
    counts: np.ndarray = field(default=None)
    ignored: int = 0

    def __post_init__(self):
        if self.counts is None:
            size = self.num_classes + 1
            self.counts = np.zeros((size, size), dtype=np.int64)

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise ShapeMismatchError("cannot merge matrices of different class counts")
        self.counts += other.counts
        self.ignored += other.ignored
        return self

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _encode(ids: np.ndarray, num_classes: int) -> np.ndarray:
    out = ids.astype(np.int64)
    reserved = out == RESERVED_ID
    bad = (out >= num_classes) & ~reserved
    if bad.any():
        raise ClassIdOutOfRangeError(
            f"class ids {np.unique(out[bad]).tolist()} out of range "
            f"for {num_classes} classes"
        )
    out[reserved] = num_classes
    return out


def accumulate(
    gt: np.ndarray,
    pred: np.ndarray,
    num_classes: int,
    ignore_ids: frozenset[int] | set[int] = DEFAULT_IGNORE_IDS,
) -> ConfusionMatrix:
    """Tally a prediction against ground truth into a confusion matrix."""
    gt = np.asarray(gt)
    pred = np.asarray(pred)
    if gt.shape != pred.shape:
        raise ShapeMismatchError(f"gt {gt.shape} vs pred {pred.shape}")
    gt_flat = gt.reshape(-1)
    pred_flat = pred.reshape(-1)

    keep = np.ones(gt_flat.shape, dtype=bool)
    for ignore in ignore_ids:
        keep &= gt_flat != ignore
    cm = ConfusionMatrix(num_classes)
    cm.ignored = int((~keep).sum())

    g = _encode(gt_flat[keep], num_classes)
    p = _encode(pred_flat[keep], num_classes)
    size = num_classes + 1
    cm.counts += np.bincount(g * size + p, minlength=size * size).reshape(size, size)
    return cm


def pa(cm: ConfusionMatrix) -> float:
    """Proportion of correctly predicted pixels among evaluated pixels."""
    total = cm.total
    if total == 0:
        raise EmptyMatrixError("no evaluated pixels")
    return float(np.trace(cm.counts)) / total


def mpa(cm: ConfusionMatrix) -> float:
    """Mean per-class pixel accuracy over ground-truth-present classes."""
    if cm.total == 0:
        raise EmptyMatrixError("no evaluated pixels")
    counts = cm.counts[: cm.num_classes, :]
    row_sums = counts.sum(axis=1)
    present = row_sums > 0
    if not present.any():
        raise EmptyMatrixError("no ground-truth-present class")
    diag = np.diag(cm.counts)[: cm.num_classes]
    return float((diag[present] / row_sums[present]).mean())


def miou(cm: ConfusionMatrix) -> float:
    """Mean IoU over classes present in ground truth or prediction."""
    if cm.total == 0:
        raise EmptyMatrixError("no evaluated pixels")
    ious = per_class_iou(cm)
    if not ious:
        raise EmptyMatrixError("no class with any support")
    return float(np.mean(list(ious.values())))


def per_class_iou(cm: ConfusionMatrix) -> dict[int, float]:
    c = cm.num_classes
    tp = np.diag(cm.counts)[:c].astype(np.float64)
    fn = cm.counts[:c, :].sum(axis=1) - tp  # includes reserved predictions
    fp = cm.counts[:, :c].sum(axis=0) - tp
    union = tp + fp + fn
    return {
        int(i): float(tp[i] / union[i]) for i in range(c) if union[i] > 0
    }


def per_class_accuracy(cm: ConfusionMatrix) -> dict[int, float]:
    c = cm.num_classes
    counts = cm.counts[:c, :]
    row_sums = counts.sum(axis=1)
    diag = np.diag(cm.counts)[:c]
    return {
        int(i): float(diag[i] / row_sums[i]) for i in range(c) if row_sums[i] > 0
    }


def summary(cm: ConfusionMatrix) -> dict:
    """The JSON-ready metric record emitted by the harness and service."""
    acc = per_class_accuracy(cm)
    iou = per_class_iou(cm)
    return {
        "pa": pa(cm),
        "mpa": mpa(cm),
        "miou": miou(cm),
        "per_class": {
            str(i): {"accuracy": acc.get(i), "iou": iou.get(i)}
            for i in sorted(set(acc) | set(iou))
        },
        "evaluated": cm.total,
        "ignored": cm.ignored,
    }
