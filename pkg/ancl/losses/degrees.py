"""Degree-of-positiveness matrices and the age kernel."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ancl.errors import ValidationError

SYMMETRY_TOLERANCE = 1e-12


class DegreeKind(str, Enum):
    """Where a degree matrix came from."""

    AGE_KERNEL = 'age_kernel'
    LOCAL_ANAT = 'local_anat'
    GLOBAL_ANAT = 'global_anat'
    SIMCLR_BINARY = 'simclr_binary'


@dataclass(frozen=True, eq=False)
class DegreeMatrix:
    """Batch-pairwise degrees in [0, 1].

    Degrees are constants for differentiation: they come from labels and
    ROI tables, never from embeddings.
    """

    values: np.ndarray
    kind: DegreeKind

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError(f"degree matrix must be square, got shape {values.shape}")
        if values.shape[0] < 2:
            raise ValidationError("degree matrix needs a batch of at least 2")
        if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
            raise ValidationError("degrees must lie in [0, 1]")
        if np.max(np.abs(values - values.T)) > SYMMETRY_TOLERANCE:
            raise ValidationError("degree matrix must be symmetric")
        if self.kind != DegreeKind.SIMCLR_BINARY and not np.all(np.diag(values) == 1.0):
            raise ValidationError(f"{self.kind.value} degree matrix must have a unit diagonal")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'kind', DegreeKind(self.kind))

    @property
    def size(self) -> int:
        return self.values.shape[0]


def age_degree(y_a: float, y_b: float, sigma: float) -> float:
    """Gaussian kernel exp(-(y_a - y_b)^2 / (2 sigma^2)).

    Args:
        y_a: Age in years
        y_b: Age in years
        sigma: Kernel bandwidth in years, positive
    """
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    return float(np.exp(-((y_a - y_b) ** 2) / (2.0 * sigma ** 2)))


def age_degree_matrix(ages: np.ndarray, sigma: float) -> DegreeMatrix:
    """Pairwise age-kernel degrees for a batch."""
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    ages = np.asarray(ages, dtype=np.float64)
    diff = ages[:, None] - ages[None, :]
    return DegreeMatrix(np.exp(-(diff ** 2) / (2.0 * sigma ** 2)), DegreeKind.AGE_KERNEL)


def simclr_degree_matrix(n_subjects: int) -> DegreeMatrix:
    """Binary degrees over 2N rows: 1 between the two views of a subject."""
    eye = np.eye(n_subjects)
    zeros = np.zeros((n_subjects, n_subjects))
    return DegreeMatrix(np.block([[zeros, eye], [eye, zeros]]), DegreeKind.SIMCLR_BINARY)
