"""Contrastive and supervised loss family."""

from ancl.losses.degrees import (
    DegreeKind,
    DegreeMatrix,
    age_degree,
    age_degree_matrix,
    simclr_degree_matrix,
)
from ancl.losses.contrastive import (
    EmbeddingBatch,
    anatcl_global_loss,
    anatcl_local_loss,
    combined_loss,
    expw_loss,
    expw_weights,
    normalized_weights,
    require_unit_rows,
    simclr_loss,
    weighted_contrastive,
    yaware_loss,
)
from ancl.losses.supervised import anat_sup_loss, l1_age_loss, regression_head

__all__ = [
    'DegreeKind',
    'DegreeMatrix',
    'age_degree',
    'age_degree_matrix',
    'simclr_degree_matrix',
    'EmbeddingBatch',
    'normalized_weights',
    'require_unit_rows',
    'weighted_contrastive',
    'yaware_loss',
    'expw_weights',
    'expw_loss',
    'anatcl_local_loss',
    'anatcl_global_loss',
    'combined_loss',
    'simclr_loss',
    'l1_age_loss',
    'regression_head',
    'anat_sup_loss',
]
