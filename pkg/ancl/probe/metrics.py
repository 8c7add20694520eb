"""Probe metrics."""

from enum import Enum

import numpy as np
from sklearn.metrics import balanced_accuracy_score, mean_absolute_error, r2_score

from ancl.errors import LengthMismatchError, SingleClassError, ValidationError


class MetricKind(str, Enum):
    MAE = 'mae'
    BALANCED_ACCURACY = 'balanced_accuracy'
    R2 = 'r2'
    NEG_MAE = 'neg_mae'


def metric(kind: MetricKind | str, predictions: np.ndarray, targets: np.ndarray) -> float:
    """Scores predictions against targets.

    Args:
        kind: mae, balanced_accuracy (mean per-class recall), r2 or neg_mae
        predictions: Predicted values (class labels for balanced accuracy)
        targets: True values

    Raises:
        LengthMismatchError: lengths differ
        SingleClassError: balanced accuracy with a single target class
    """
    kind = MetricKind(kind)
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.shape != targets.shape:
        raise LengthMismatchError(f"{predictions.shape[0]} predictions for {targets.shape[0]} targets")
    if targets.shape[0] == 0:
        raise ValidationError("cannot score an empty prediction set")

    if kind is MetricKind.MAE:
        return float(mean_absolute_error(targets, predictions))
    if kind is MetricKind.NEG_MAE:
        return -float(mean_absolute_error(targets, predictions))
    if kind is MetricKind.R2:
        if targets.shape[0] < 2:
            raise ValidationError("r2 needs at least two samples")
        return float(r2_score(targets, predictions))

    if not np.all(np.isin(targets, (0.0, 1.0))) or not np.all(np.isin(predictions, (0.0, 1.0))):
        raise ValidationError("balanced accuracy needs binary predictions and targets")
    if np.unique(targets).shape[0] < 2:
        raise SingleClassError("balanced accuracy needs both classes among the targets")
    return float(balanced_accuracy_score(targets.astype(int), predictions.astype(int)))
