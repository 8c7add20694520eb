"""Per-batch training objective of every loss variant."""

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ancl.config import LossConfig, LossVariant
from ancl.errors import MissingDegreesError, ValidationError
from ancl.losses import (
    DegreeMatrix,
    EmbeddingBatch,
    anat_sup_loss,
    combined_loss,
    expw_loss,
    l1_age_loss,
    regression_head,
    simclr_loss,
    yaware_loss,
)
from ancl.model.encoder import forward
from ancl.numgrad import Tape, Tensor


@dataclass(frozen=True, eq=False)
class TrainingBatch:
    """Inputs and weak supervision for one optimization step.

    ``degrees`` feeds the anatomical variants, ``anat_targets`` (mean
    global descriptors) the l1_anat baseline and ``views`` SimCLR.
    """

    subject_ids: tuple[str, ...]
    x: np.ndarray
    ages: np.ndarray
    degrees: Optional[DegreeMatrix] = None
    anat_targets: Optional[np.ndarray] = None
    views: Optional[tuple[np.ndarray, np.ndarray]] = None

    @property
    def size(self) -> int:
        return len(self.subject_ids)


def regressor_outputs(variant: LossVariant, measure_count: int = 0) -> int:
    """Width of the regression head a variant trains, 0 for none."""
    if variant is LossVariant.L1_AGE:
        return 1
    if variant is LossVariant.L1_ANAT:
        return measure_count
    return 0


def batch_loss(
    tape: Tape,
    params: Mapping[str, Tensor],
    batch: TrainingBatch,
    loss: LossConfig,
) -> Tensor:
    """Records the forward pass and loss of one batch.

    Args:
        tape: Tape recording the computation
        params: Parameter leaves by name
        batch: Batch inputs and constants
        loss: Variant and weights

    Returns:
        Scalar loss tensor
    """
    variant = LossVariant(loss.variant)

    if variant is LossVariant.SIMCLR:
        if batch.views is None:
            raise ValidationError("simclr batches need two augmented views")
        view_a = forward(tape, params, batch.views[0]).z
        view_b = forward(tape, params, batch.views[1]).z
        return simclr_loss(tape, view_a, view_b, loss.temperature)

    if variant.is_supervised:
        if 'regressor.weight' not in params:
            raise ValidationError(f"{variant.value} needs a regression head")
        h = forward(tape, params, batch.x, project=False).h
        if variant is LossVariant.L1_AGE:
            predictions = regression_head(tape, h, params['regressor.weight'], params['regressor.bias'])
            return l1_age_loss(tape, predictions, batch.ages)
        if batch.anat_targets is None:
            raise MissingDegreesError("l1_anat batches need mean global descriptors")
        return anat_sup_loss(tape, h, params['regressor.weight'], params['regressor.bias'], batch.anat_targets)

    z = forward(tape, params, batch.x).z
    if variant is LossVariant.YAWARE:
        return yaware_loss(tape, EmbeddingBatch(z, ages=batch.ages), loss.sigma, loss.temperature)
    if variant is LossVariant.EXPW:
        return expw_loss(tape, EmbeddingBatch(z, ages=batch.ages), loss.sigma, loss.temperature)
    if batch.degrees is None:
        raise MissingDegreesError(f"{variant.value} batches need an anatomical degree matrix")
    return combined_loss(tape, EmbeddingBatch(z, ages=batch.ages, degrees=batch.degrees), loss)
