"""Frozen-representation probes and metrics."""

from ancl.probe.linear import LogisticModel, RidgeModel, logistic_probe_fit, ridge_fit
from ancl.probe.metrics import MetricKind, metric
from ancl.probe.evaluation import (
    ProbeKind,
    ProbeResult,
    Standardizer,
    cross_validate,
    default_probe,
    evaluate_features,
    feature_study,
    feature_study_frame,
    fit_fold,
    write_results,
)

__all__ = [
    'RidgeModel',
    'LogisticModel',
    'ridge_fit',
    'logistic_probe_fit',
    'MetricKind',
    'metric',
    'ProbeKind',
    'ProbeResult',
    'Standardizer',
    'default_probe',
    'fit_fold',
    'evaluate_features',
    'cross_validate',
    'feature_study',
    'feature_study_frame',
    'write_results',
]
