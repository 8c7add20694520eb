"""Pretraining loop."""

from dataclasses import dataclass
from io import StringIO
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from ancl.anatomy import (
    RoiTable,
    fit_normalizer,
    global_degree_matrix,
    local_degree_matrix,
    mean_global_descriptor,
)
from ancl.cohort import Cohort, augment
from ancl.config import EncoderConfig, LossVariant, TrainConfig
from ancl.errors import (
    DimensionMismatchError,
    DomainError,
    MissingDegreesError,
    NanLossError,
    ValidationError,
    ZeroVectorError,
)
from ancl.model.checkpoint import Checkpoint
from ancl.model.encoder import init_params
from ancl.model.objectives import TrainingBatch, batch_loss, regressor_outputs
from ancl.model.optimizer import AdamState, adam_step
from ancl.numgrad import Tape
from ancl.utils.fileio import atomic_write_text
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_BATCH = 2
_SEED_BOUND = 2 ** 63


@dataclass(frozen=True)
class TrainingResult:
    """Final checkpoint and the per-epoch mean losses (epoch 1 first)."""

    checkpoint: Checkpoint
    loss_trace: list[float]


class _BatchSource:
    """Precomputed per-subject constants; builds TrainingBatch objects."""

    def __init__(self, cohort: Cohort, variant: LossVariant):
        self.cohort = cohort
        self.variant = variant
        self.psi: Optional[np.ndarray] = None
        self.omega: Optional[np.ndarray] = None
        self.anat_targets: Optional[np.ndarray] = None

        if variant.needs_roi:
            if cohort.roi is None:
                raise MissingDegreesError(
                    f"variant {variant.value} needs an ROI table (roi.csv) but the cohort has none"
                )
            roi = cohort.roi
            if variant.degree_mode == 'local':
                self.psi = fit_normalizer(roi).apply(roi.values)
                self._check_nonzero(self.psi, roi, 'region')
            elif variant.degree_mode == 'global':
                self.omega = np.transpose(roi.values, (0, 2, 1))
                self._check_nonzero(self.omega, roi, 'measure')
            else:
                self.anat_targets = mean_global_descriptor(roi)

    def _check_nonzero(self, descriptors: np.ndarray, roi: RoiTable, axis_name: str):
        norms = np.einsum('sgd,sgd->sg', descriptors, descriptors)
        zero = np.argwhere(norms == 0.0)
        if len(zero):
            subject, group = zero[0]
            raise ZeroVectorError(
                f"subject {roi.subject_ids[subject]} has an all-zero descriptor for {axis_name} {group}"
            )

    def batch(self, indices: np.ndarray, view_seed: Optional[int], train: TrainConfig) -> TrainingBatch:
        cohort = self.cohort
        ids = tuple(cohort.ids[i] for i in indices)
        x = cohort.x[indices]
        degrees = None
        if self.psi is not None:
            degrees = local_degree_matrix(self.psi[indices], ids)
        elif self.omega is not None:
            degrees = global_degree_matrix(self.omega[indices], ids)
        views = None
        if view_seed is not None:
            view_rng = np.random.default_rng(view_seed)
            seeds = view_rng.integers(0, _SEED_BOUND, size=2)
            views = (
                augment(x, train.augment_strength, int(seeds[0]), train.augment_dropout),
                augment(x, train.augment_strength, int(seeds[1]), train.augment_dropout),
            )
        return TrainingBatch(
            subject_ids=ids,
            x=x,
            ages=cohort.ages[indices],
            degrees=degrees,
            anat_targets=self.anat_targets[indices] if self.anat_targets is not None else None,
            views=views,
        )


def _regressor_setup(cohort: Cohort, variant: LossVariant) -> tuple[int, Optional[np.ndarray]]:
    if variant is LossVariant.L1_AGE:
        return 1, np.array([cohort.ages.mean()])
    if variant is LossVariant.L1_ANAT:
        targets = mean_global_descriptor(cohort.roi)
        return targets.shape[1], targets.mean(axis=0)
    return 0, None


def initial_checkpoint(
    encoder: EncoderConfig,
    train: TrainConfig,
    cohort: Optional[Cohort] = None,
) -> Checkpoint:
    """Untrained epoch-0 checkpoint, the random-initialization baseline.

    Args:
        encoder: Encoder configuration
        train: Training configuration
        cohort: Needed only to size and bias the supervised regression head
    """
    variant = LossVariant(train.loss.variant)
    outputs, bias = (0, None)
    if variant.is_supervised:
        if cohort is None or (variant.needs_roi and cohort.roi is None):
            raise MissingDegreesError(f"variant {variant.value} needs the training cohort to size its head")
        outputs, bias = _regressor_setup(cohort, variant)
    params = init_params(encoder, outputs, bias)
    return Checkpoint(
        encoder=encoder,
        train=train,
        epoch=0,
        params=params,
        optimizer=AdamState.zeros(params),
        rng_state=np.random.default_rng(train.seed).bit_generator.state,
    )


def pretrain(cohort: Cohort, encoder: EncoderConfig, train: TrainConfig) -> TrainingResult:
    """Trains encoder and head with the configured loss variant.

    Each epoch shuffles the cohort with a generator seeded from
    ``train.seed``; a trailing batch smaller than 2 is dropped.

    Args:
        cohort: Pretraining cohort
        encoder: Encoder configuration
        train: Optimizer, schedule and loss configuration

    Returns:
        TrainingResult with the final checkpoint and loss trace

    Raises:
        MissingDegreesError: the variant needs an ROI table the cohort lacks
        NanLossError: a batch produced a non-finite loss
    """
    variant = LossVariant(train.loss.variant)
    if cohort.input_dim != encoder.input_dim:
        raise DimensionMismatchError(
            f"cohort inputs have width {cohort.input_dim}, encoder expects {encoder.input_dim}"
        )
    if len(cohort) < MIN_BATCH:
        raise ValidationError(f"pretraining needs at least {MIN_BATCH} subjects")

    source = _BatchSource(cohort, variant)
    start = initial_checkpoint(encoder, train, cohort)
    params, state = start.params, start.optimizer
    rng = np.random.default_rng(train.seed)
    trace: list[float] = []

    logger.info(
        f"Pretraining {variant.value}: {len(cohort)} subjects, {train.epochs} epochs, "
        f"batch {train.batch_size}, {len(params)} parameter arrays"
    )
    for epoch in range(train.epochs):
        lr = train.learning_rate_at(epoch)
        order = rng.permutation(len(cohort))
        batches = [order[i:i + train.batch_size] for i in range(0, len(order), train.batch_size)]
        if len(batches[-1]) < MIN_BATCH:
            batches.pop()

        losses = []
        for number, indices in enumerate(batches):
            view_seed = int(rng.integers(0, _SEED_BOUND)) if variant is LossVariant.SIMCLR else None
            batch = source.batch(indices, view_seed, train)
            tape = Tape()
            leaves = {name: tape.watch(value) for name, value in params.items()}
            try:
                loss = batch_loss(tape, leaves, batch, train.loss)
            except DomainError as e:
                raise NanLossError(
                    f"epoch {epoch + 1} batch {number}: non-finite loss ({e}); "
                    f"subjects {', '.join(batch.subject_ids)}"
                ) from None
            grads = tape.backward(loss)
            params, state = adam_step(params, {name: grads[leaf] for name, leaf in leaves.items()}, state, lr)
            losses.append(loss.item())

        mean_loss = float(np.mean(losses))
        if not np.isfinite(mean_loss):
            raise NanLossError(f"epoch {epoch + 1}: non-finite mean loss")
        trace.append(mean_loss)
        logger.info(f"Epoch {epoch + 1}/{train.epochs} lr={lr:.3e} mean_loss={mean_loss:.6f}")

    checkpoint = Checkpoint(
        encoder=encoder,
        train=train,
        epoch=train.epochs,
        params=params,
        optimizer=state,
        rng_state=rng.bit_generator.state,
    )
    return TrainingResult(checkpoint=checkpoint, loss_trace=trace)


def save_loss_trace(trace: list[float], path: Path):
    """Writes ``epoch,mean_loss`` CSV, epochs counted from 1."""
    frame = pd.DataFrame({'epoch': np.arange(1, len(trace) + 1), 'mean_loss': trace})
    buffer = StringIO()
    frame.to_csv(buffer, index=False, float_format='%.17g', lineterminator='\n')
    atomic_write_text(Path(path), buffer.getvalue())
