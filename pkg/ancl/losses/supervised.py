"""L1 regression losses for the supervised baselines."""

import numpy as np

from ancl.errors import DimensionMismatchError, LengthMismatchError
from ancl.numgrad import Tape, Tensor, as_tensor


def l1_age_loss(tape: Tape, predictions: Tensor, ages: np.ndarray) -> Tensor:
    """Mean absolute error between predicted and true ages.

    Args:
        tape: Tape recording the computation
        predictions: (batch,) or (batch, 1) predicted ages
        ages: (batch,) ages in years
    """
    predictions = as_tensor(predictions)
    ages = np.asarray(ages, dtype=np.float64).reshape(-1)
    if predictions.size != ages.shape[0]:
        raise LengthMismatchError(f"{predictions.size} predictions for {ages.shape[0]} ages")
    return tape.mean(tape.abs(tape.sub(predictions, ages.reshape(predictions.shape))))


def regression_head(tape: Tape, features: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map r(h) = h W + b."""
    return tape.add(tape.matmul(features, weight), bias)


def anat_sup_loss(
    tape: Tape,
    features: Tensor,
    weight: Tensor,
    bias: Tensor,
    mean_descriptors: np.ndarray,
) -> Tensor:
    """Mean over the batch of || r(h) - omega_bar ||_1.

    Args:
        tape: Tape recording the computation
        features: (batch, d_enc) representations h
        weight: (d_enc, N) regression weights
        bias: (N,) regression bias
        mean_descriptors: (batch, N) per-measure means over ROIs
    """
    targets = np.asarray(mean_descriptors, dtype=np.float64)
    predictions = regression_head(tape, features, weight, bias)
    if targets.shape != predictions.shape:
        raise DimensionMismatchError(
            f"regression head produces {predictions.shape}, targets are {targets.shape}"
        )
    return tape.mean(tape.sum(tape.abs(tape.sub(predictions, targets)), axis=1))
