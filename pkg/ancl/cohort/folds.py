"""Cross-validation fold assignment."""

from typing import Optional

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold

from ancl.cohort.cohort import Cohort
from ancl.errors import ValidationError
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)


def split_folds(
    cohort: Cohort,
    k: int = 5,
    stratify_label: Optional[str] = None,
    seed: int = 0,
) -> list[np.ndarray]:
    """Splits subject indices into k disjoint test folds.

    Args:
        cohort: Cohort to split
        k: Number of folds, >= 2
        stratify_label: Task name (sex or a binary label) to balance
            across folds; plain shuffled folds when None
        seed: Shuffle seed

    Returns:
        k sorted index arrays covering every subject exactly once
    """
    n = len(cohort)
    if k < 2:
        raise ValidationError(f"need at least 2 folds, got {k}")
    if k > n:
        raise ValidationError(f"cannot split {n} subjects into {k} folds")

    placeholder = np.zeros((n, 1))
    if stratify_label is None:
        splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
        splits = splitter.split(placeholder)
    else:
        labels = cohort.target(stratify_label)
        splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
        try:
            splits = list(splitter.split(placeholder, labels))
        except ValueError as e:
            raise ValidationError(f"cannot stratify on {stratify_label!r}: {e}") from None

    folds = [np.sort(test) for _, test in splits]
    logger.debug(f"Split {n} subjects into folds of sizes {[len(f) for f in folds]}")
    return folds
