"""Cohorts: synthetic generation, file IO, augmentation and folds."""

from ancl.cohort.cohort import BUILTIN_TASKS, Cohort, Subject
from ancl.cohort.synthetic import generate
from ancl.cohort.io import (
    load_cohort,
    load_embeddings,
    save_cohort,
    save_embeddings,
)
from ancl.cohort.augment import augment
from ancl.cohort.folds import split_folds

__all__ = [
    'BUILTIN_TASKS',
    'Cohort',
    'Subject',
    'generate',
    'load_cohort',
    'save_cohort',
    'load_embeddings',
    'save_embeddings',
    'augment',
    'split_folds',
]
