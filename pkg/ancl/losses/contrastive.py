"""Weighted contrastive losses.

Every contrastive variant reduces to one engine: for each anchor a in the
batch, with candidates t != a,

    loss_a = log sum_t exp(s_at / tau) - sum_i (W_ai / sum_j W_aj) * s_ai / tau

where s is the cosine similarity of embeddings. The batch loss is the
mean over anchors. Since the normalized weights sum to one, loss_a is at
least log-sum-exp minus the max similarity and therefore nonnegative.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ancl.config import LossConfig, LossVariant
from ancl.errors import DegenerateAnchorError, NotUnitNormError, ShapeMismatchError, ValidationError
from ancl.losses.degrees import DegreeKind, DegreeMatrix, age_degree_matrix, simclr_degree_matrix
from ancl.numgrad import Tape, Tensor, as_tensor

UNIT_NORM_TOL = 1e-10


def require_unit_rows(z: Tensor):
    """Checks that every embedding row lies on the unit sphere.

    All-zero rows are accepted: they are what row normalization makes of a
    zero pre-activation, and their cosine with any row is 0.

    Raises:
        NotUnitNormError: a row norm is neither 0 nor within UNIT_NORM_TOL of 1
    """
    norms = np.linalg.norm(z.data, axis=1)
    off = np.flatnonzero((np.abs(norms - 1.0) > UNIT_NORM_TOL) & (norms != 0.0))
    if len(off):
        row = int(off[0])
        raise NotUnitNormError(f"embedding row {row} has norm {norms[row]:.12g}; normalize rows first")


@dataclass(frozen=True, eq=False)
class EmbeddingBatch:
    """Projected embeddings of one batch and the constants that weight them.

    Args:
        z: (batch, d) embeddings, rows on the unit sphere
        ages: Ages in years, needed by the age-kernel losses
        degrees: Anatomical DegreeMatrix (local or global)
    """

    z: Tensor
    ages: Optional[np.ndarray] = None
    degrees: Optional[DegreeMatrix] = None

    def __post_init__(self):
        z = as_tensor(self.z)
        if len(z.shape) != 2 or z.shape[0] < 2:
            raise ShapeMismatchError(f"embedding batch must be (batch >= 2, d), got {z.shape}")
        require_unit_rows(z)
        object.__setattr__(self, 'z', z)
        if self.ages is not None:
            ages = np.asarray(self.ages, dtype=np.float64).reshape(-1)
            if ages.shape[0] != z.shape[0]:
                raise ShapeMismatchError(f"{ages.shape[0]} ages for a batch of {z.shape[0]}")
            object.__setattr__(self, 'ages', ages)
        if self.degrees is not None and self.degrees.size != z.shape[0]:
            raise ShapeMismatchError(f"degree matrix of size {self.degrees.size} for a batch of {z.shape[0]}")

    @property
    def size(self) -> int:
        return self.z.shape[0]


def normalized_weights(weights: DegreeMatrix | np.ndarray) -> np.ndarray:
    """Zeroes the diagonal and scales every row to sum to one.

    Raises:
        DegenerateAnchorError: an anchor has zero weight to every other row
    """
    values = weights.values if isinstance(weights, DegreeMatrix) else np.asarray(weights, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ShapeMismatchError(f"weights must be square, got shape {values.shape}")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValidationError("weights must be finite and nonnegative")
    off_diagonal = values * (1.0 - np.eye(values.shape[0]))
    totals = off_diagonal.sum(axis=1)
    degenerate = np.flatnonzero(totals <= 0)
    if len(degenerate):
        raise DegenerateAnchorError(f"anchor {int(degenerate[0])} has zero weight to every other sample")
    return off_diagonal / totals[:, None]


def weighted_contrastive(
    tape: Tape,
    z: Tensor,
    weights: DegreeMatrix | np.ndarray,
    temperature: float,
) -> Tensor:
    """Degree-weighted InfoNCE averaged over anchors.

    Args:
        tape: Tape recording the computation
        z: (batch, d) embeddings with unit-norm rows
        weights: (batch, batch) nonnegative degrees; constants for
            differentiation
        temperature: Positive scale dividing the similarities

    Returns:
        Scalar loss tensor
    """
    if temperature <= 0:
        raise ValidationError(f"temperature must be positive, got {temperature}")
    z = as_tensor(z)
    if len(z.shape) != 2 or z.shape[0] < 2:
        raise ShapeMismatchError(f"z must be (batch >= 2, d), got {z.shape}")
    require_unit_rows(z)
    size = z.shape[0]
    weight = normalized_weights(weights)
    if weight.shape[0] != size:
        raise ShapeMismatchError(f"weights of size {weight.shape[0]} for a batch of {size}")

    logits = tape.scalar_mul(tape.matmul(z, tape.transpose(z)), 1.0 / temperature)

    # constant per-anchor shift for a stable log-sum-exp; the diagonal is
    # shifted to zero and then masked out
    others = 1.0 - np.eye(size)
    raw = logits.data
    row_max = np.where(others > 0, raw, -np.inf).max(axis=1)
    shift = np.where(others > 0, row_max[:, None], raw)

    exps = tape.mul(tape.exp(tape.sub(logits, shift)), others)
    log_partition = tape.add(tape.log(tape.sum(exps, axis=1)), row_max)
    positives = tape.sum(tape.mul(logits, weight), axis=1)
    return tape.mean(tape.sub(log_partition, positives))


def _require_ages(batch: EmbeddingBatch) -> np.ndarray:
    if batch.ages is None:
        raise ValidationError("age-kernel losses need batch ages")
    return batch.ages


def _require_degrees(batch: EmbeddingBatch, kind: DegreeKind) -> DegreeMatrix:
    if batch.degrees is None:
        raise ValidationError(f"{kind.value} loss needs an anatomical degree matrix")
    if batch.degrees.kind != kind:
        raise ValidationError(f"expected a {kind.value} degree matrix, got {batch.degrees.kind.value}")
    return batch.degrees


def yaware_loss(tape: Tape, batch: EmbeddingBatch, sigma: float = 5.0, temperature: float = 0.1) -> Tensor:
    """Weighted contrastive loss with Gaussian age-kernel degrees."""
    weights = age_degree_matrix(_require_ages(batch), sigma)
    return weighted_contrastive(tape, batch.z, weights, temperature)


def expw_weights(degrees: DegreeMatrix | np.ndarray) -> np.ndarray:
    """Exponential reweighting exp(w) - 1 of a degree matrix.

    This is an approximation of the exponential-weighting baseline: the
    reweighted degrees go through the same normalized engine.
    """
    values = degrees.values if isinstance(degrees, DegreeMatrix) else np.asarray(degrees, dtype=np.float64)
    return np.expm1(values)


def expw_loss(tape: Tape, batch: EmbeddingBatch, sigma: float = 5.0, temperature: float = 0.1) -> Tensor:
    """Exponentially reweighted age-kernel contrastive loss."""
    weights = expw_weights(age_degree_matrix(_require_ages(batch), sigma))
    return weighted_contrastive(tape, batch.z, weights, temperature)


def anatcl_local_loss(tape: Tape, batch: EmbeddingBatch, temperature: float = 0.1) -> Tensor:
    """Contrastive loss weighted by cross-region (local) anatomical degrees."""
    return weighted_contrastive(tape, batch.z, _require_degrees(batch, DegreeKind.LOCAL_ANAT), temperature)


def anatcl_global_loss(tape: Tape, batch: EmbeddingBatch, temperature: float = 0.1) -> Tensor:
    """Contrastive loss weighted by cross-measure (global) anatomical degrees."""
    return weighted_contrastive(tape, batch.z, _require_degrees(batch, DegreeKind.GLOBAL_ANAT), temperature)


def combined_loss(tape: Tape, batch: EmbeddingBatch, config: LossConfig) -> Tensor:
    """lambda1 * anatomical loss + lambda2 * age-kernel loss.

    The age term is skipped when lambda2 is zero, so anatssl batches need
    no ages.
    """
    variant = LossVariant(config.variant)
    if not variant.is_anatomical:
        raise ValidationError(f"combined loss needs an anatomical variant, got {variant.value}")
    if variant.degree_mode == 'local':
        anatomical = anatcl_local_loss(tape, batch, config.temperature)
    else:
        anatomical = anatcl_global_loss(tape, batch, config.temperature)
    total = tape.scalar_mul(anatomical, config.lambda1)
    if config.lambda2 == 0:
        return total
    age = yaware_loss(tape, batch, config.sigma, config.temperature)
    return tape.add(total, tape.scalar_mul(age, config.lambda2))


def simclr_loss(tape: Tape, view_a: Tensor, view_b: Tensor, temperature: float = 0.1) -> Tensor:
    """NT-Xent over 2N rows: each row's only positive is the other view of its subject."""
    view_a, view_b = as_tensor(view_a), as_tensor(view_b)
    if view_a.shape != view_b.shape:
        raise ShapeMismatchError(f"views differ in shape: {view_a.shape} vs {view_b.shape}")
    z = tape.concat_rows(view_a, view_b)
    return weighted_contrastive(tape, z, simclr_degree_matrix(view_a.shape[0]), temperature)
