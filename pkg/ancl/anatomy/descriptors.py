"""Local and global anatomical descriptors and their degrees of positiveness."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ancl.anatomy.atlas import Atlas, MeasureSet
from ancl.anatomy.roi_table import RoiTable
from ancl.errors import (
    AtlasMismatchError,
    DimensionMismatchError,
    EmptyTableError,
    ValidationError,
    ZeroVectorError,
)
from ancl.losses.degrees import DegreeKind, DegreeMatrix

CONSTANT_COLUMN_VALUE = 0.5


class DegreeMode(str, Enum):
    LOCAL = 'local'
    GLOBAL = 'global'


@dataclass(frozen=True, eq=False)
class NormalizationStats:
    """Per (roi, measure) min/max fitted on the pretraining split."""

    atlas: Atlas
    measures: MeasureSet
    minimum: np.ndarray
    maximum: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Min-max maps values of shape (..., K, N) into [0, 1].

        Out-of-range values are clamped; constant columns map to 0.5.
        """
        values = np.asarray(values, dtype=np.float64)
        span = self.maximum - self.minimum
        constant = span == 0
        scaled = (values - self.minimum) / np.where(constant, 1.0, span)
        scaled = np.where(constant, CONSTANT_COLUMN_VALUE, scaled)
        return np.clip(scaled, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class LocalDescriptorSet:
    """psi: K regional vectors of length N, normalized to [0, 1]."""

    subject_id: str
    atlas: Atlas
    measures: MeasureSet
    psi: np.ndarray


@dataclass(frozen=True, eq=False)
class GlobalDescriptorSet:
    """omega: N per-measure vectors of length K, raw values."""

    subject_id: str
    atlas: Atlas
    measures: MeasureSet
    omega: np.ndarray


def fit_normalizer(table: RoiTable) -> NormalizationStats:
    """Fits the gamma normalization on a (pretraining) table.

    Args:
        table: ROI table of the fit split

    Returns:
        Column-wise min/max statistics
    """
    if len(table) == 0:
        raise EmptyTableError("cannot fit a normalizer on an empty table")
    return NormalizationStats(
        atlas=table.atlas,
        measures=table.measures,
        minimum=table.values.min(axis=0),
        maximum=table.values.max(axis=0),
    )


def _check_stats(table: RoiTable, stats: NormalizationStats):
    if stats.atlas != table.atlas or stats.measures != table.measures:
        raise AtlasMismatchError(
            f"normalizer fitted on {stats.atlas}/{stats.measures.names}, "
            f"table is {table.atlas}/{table.measures.names}"
        )


def local_descriptors(table: RoiTable, subject: str, stats: NormalizationStats) -> LocalDescriptorSet:
    """Returns the K normalized regional descriptors of one subject."""
    _check_stats(table, stats)
    psi = stats.apply(table.row(subject))
    return LocalDescriptorSet(str(subject), table.atlas, table.measures, psi)


def global_descriptors(table: RoiTable, subject: str) -> GlobalDescriptorSet:
    """Returns the N raw per-measure descriptors of one subject."""
    omega = table.row(subject).T.copy()
    return GlobalDescriptorSet(str(subject), table.atlas, table.measures, omega)


def mean_global_descriptor(table: RoiTable, subject: Optional[str] = None) -> np.ndarray:
    """Per-measure mean over ROIs: shape (N,) for one subject, (S, N) for all."""
    if subject is None:
        return table.values.mean(axis=1)
    return table.row(subject).mean(axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity u.v / (|u||v|), clipped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"cosine: shapes {u.shape} and {v.shape} differ")
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    if uu == 0.0 or vv == 0.0:
        raise ZeroVectorError("cosine similarity of a zero vector")
    return float(np.clip(np.dot(u, v) / np.sqrt(uu * vv), -1.0, 1.0))


def _check_pair(a, b):
    if a.atlas != b.atlas or a.measures != b.measures:
        raise DimensionMismatchError(
            f"descriptor sets differ: {a.atlas}/{a.measures.names} vs {b.atlas}/{b.measures.names}"
        )


def local_degree(a: LocalDescriptorSet, b: LocalDescriptorSet) -> float:
    """alpha = mean over regions of cos(psi_a^k, psi_b^k)."""
    _check_pair(a, b)
    if a.psi.shape != b.psi.shape:
        raise DimensionMismatchError(f"psi shapes {a.psi.shape} and {b.psi.shape} differ")
    return float(np.mean([cosine(a.psi[k], b.psi[k]) for k in range(a.psi.shape[0])]))


def global_degree(a: GlobalDescriptorSet, b: GlobalDescriptorSet) -> float:
    """beta = mean over measures of cos(omega_a^j, omega_b^j)."""
    _check_pair(a, b)
    if a.omega.shape != b.omega.shape:
        raise DimensionMismatchError(f"omega shapes {a.omega.shape} and {b.omega.shape} differ")
    return float(np.mean([cosine(a.omega[j], b.omega[j]) for j in range(a.omega.shape[0])]))


def _pairwise_cosines(vectors: np.ndarray, subject_ids: Sequence[str]) -> np.ndarray:
    """Cosines between subjects per group.

    Args:
        vectors: (B, G, D) - G groups of D-vectors per subject

    Returns:
        (B, B, G) cosine tensor
    """
    squares = np.einsum('bgd,bgd->bg', vectors, vectors)
    zero = np.argwhere(squares == 0.0)
    if len(zero):
        subject, group = zero[0]
        raise ZeroVectorError(f"subject {subject_ids[subject]} has an all-zero descriptor at index {group}")
    dots = np.einsum('igd,jgd->ijg', vectors, vectors)
    cosines = np.clip(dots / np.sqrt(squares[:, None, :] * squares[None, :, :]), -1.0, 1.0)
    # mirror the upper triangle so the matrix is exactly symmetric
    upper = np.triu_indices(len(vectors), k=1)
    cosines[upper[1], upper[0]] = cosines[upper]
    cosines[np.arange(len(vectors)), np.arange(len(vectors))] = 1.0
    return cosines


def local_degree_matrix(psi: np.ndarray, subject_ids: Sequence[str]) -> DegreeMatrix:
    """alpha matrix from stacked normalized descriptors of shape (B, K, N)."""
    return DegreeMatrix(_pairwise_cosines(psi, subject_ids).mean(axis=2), DegreeKind.LOCAL_ANAT)


def global_degree_matrix(omega: np.ndarray, subject_ids: Sequence[str]) -> DegreeMatrix:
    """beta matrix from stacked raw descriptors of shape (B, N, K)."""
    return DegreeMatrix(_pairwise_cosines(omega, subject_ids).mean(axis=2), DegreeKind.GLOBAL_ANAT)


def degree_matrix(
    table: RoiTable,
    subjects: Sequence[str],
    mode: DegreeMode | str,
    stats: Optional[NormalizationStats] = None,
) -> DegreeMatrix:
    """Batches local or global degrees over a set of subjects.

    Args:
        table: ROI table holding every subject
        subjects: Batch subject ids, at least two
        mode: 'local' (alpha) or 'global' (beta)
        stats: Normalizer for local mode; fitted on ``table`` when omitted

    Returns:
        Symmetric DegreeMatrix with unit diagonal
    """
    mode = DegreeMode(mode)
    if len(subjects) < 2:
        raise ValidationError("degree matrix needs at least two subjects")
    rows = table.values[[table.index_of(s) for s in subjects]]
    if mode is DegreeMode.LOCAL:
        stats = stats if stats is not None else fit_normalizer(table)
        _check_stats(table, stats)
        return local_degree_matrix(stats.apply(rows), subjects)
    return global_degree_matrix(np.transpose(rows, (0, 2, 1)), subjects)
