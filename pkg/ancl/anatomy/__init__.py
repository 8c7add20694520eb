"""Anatomical ROI tables, descriptors and degrees of positiveness."""

from ancl.anatomy.atlas import Atlas, AtlasName, Measure, MeasureSet, ROI_COUNTS
from ancl.anatomy.roi_table import ROI_COLUMNS, RoiTable
from ancl.anatomy.descriptors import (
    DegreeMode,
    GlobalDescriptorSet,
    LocalDescriptorSet,
    NormalizationStats,
    cosine,
    degree_matrix,
    fit_normalizer,
    global_degree,
    global_degree_matrix,
    global_descriptors,
    local_degree,
    local_degree_matrix,
    local_descriptors,
    mean_global_descriptor,
)

__all__ = [
    'Atlas',
    'AtlasName',
    'Measure',
    'MeasureSet',
    'ROI_COUNTS',
    'ROI_COLUMNS',
    'RoiTable',
    'DegreeMode',
    'NormalizationStats',
    'LocalDescriptorSet',
    'GlobalDescriptorSet',
    'fit_normalizer',
    'local_descriptors',
    'global_descriptors',
    'mean_global_descriptor',
    'cosine',
    'local_degree',
    'global_degree',
    'local_degree_matrix',
    'global_degree_matrix',
    'degree_matrix',
]
