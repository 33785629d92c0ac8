"""Classification metrics, including accuracy as a function of rotation speed."""
import dataclasses
from typing import Optional
from typing import Sequence

import numpy as np

from ..errors import EmptyInput
from ..errors import MissingClass
from ..errors import ShapeMismatch

DEFAULT_BIN_WIDTH = 100.0


def _aligned(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ShapeMismatch(f"Predictions {pred.shape} and truth {truth.shape} differ")
    if pred.size == 0:
        raise EmptyInput("Cannot score an empty prediction set")
    return pred, truth


def accuracy(pred, truth) -> float:
    pred, truth = _aligned(pred, truth)
    return float(np.mean(pred == truth))


def recall_per_class(pred, truth) -> dict[int, float]:
    pred, truth = _aligned(pred, truth)
    return {int(c): float(np.mean(pred[truth == c] == c)) for c in np.unique(truth)}


def balanced_accuracy(pred, truth, classes: Optional[Sequence[int]] = None) -> float:
    """
    Unweighted mean of the per-class recalls.

    Raises:
        MissingClass: If ``truth`` holds fewer than two classes, or misses one
            of the requested ``classes``
    """
    recalls = recall_per_class(pred, truth)
    if classes is not None:
        missing = sorted(set(classes) - set(recalls))
        if missing:
            raise MissingClass(f"No samples of class(es) {missing} in the truth labels")
        recalls = {c: recalls[c] for c in classes}
    if len(recalls) < 2:
        raise MissingClass(f"Balanced accuracy needs two classes, got {sorted(recalls)}")
    return float(np.mean(list(recalls.values())))


def per_class_accuracy(pred, truth, groups) -> dict[int, float]:
    """
    Accuracy of the binary predictions within each group, typically the
    unbalance strength of every window.
    """
    pred, truth = _aligned(pred, truth)
    groups = np.asarray(groups)
    if groups.shape != pred.shape:
        raise ShapeMismatch(f"Groups {groups.shape} and predictions {pred.shape} differ")
    return {int(g): float(np.mean(pred[groups == g] == truth[groups == g])) for g in np.unique(groups)}


@dataclasses.dataclass(frozen=True)
class RpmBinScore:
    center: float
    acc: float
    n: int


def rpm_binned_accuracy(
    pred, truth, mean_rpm, bin_width: float = DEFAULT_BIN_WIDTH
) -> list[RpmBinScore]:
    """
    Accuracy per speed bin ``[k * width, (k + 1) * width)``; only bins that
    hold samples are returned, ordered by speed.
    """
    pred, truth = _aligned(pred, truth)
    rpm = np.asarray(mean_rpm, dtype=np.float64)
    if rpm.shape != pred.shape:
        raise ShapeMismatch(f"Speeds {rpm.shape} and predictions {pred.shape} differ")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    bins = np.floor(rpm / bin_width).astype(np.int64)
    correct = pred == truth
    return [
        RpmBinScore(
            center=float((b + 0.5) * bin_width),
            acc=float(np.mean(correct[bins == b])),
            n=int(np.sum(bins == b)),
        )
        for b in np.unique(bins)
    ]
