"""Cross-validated probes on frozen representations and the ROI feature study."""

from dataclasses import dataclass, field
from enum import Enum
from io import StringIO
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.model_selection import KFold

from ancl.anatomy import RoiTable
from ancl.cohort import Cohort, split_folds
from ancl.config import ProbeConfig
from ancl.errors import LengthMismatchError, ValidationError
from ancl.model import Checkpoint, encode
from ancl.probe.linear import LogisticModel, RidgeModel, logistic_probe_fit, ridge_fit
from ancl.probe.metrics import MetricKind, metric
from ancl.utils.fileio import atomic_write_text
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

RESULT_COLUMNS = ['task', 'metric', 'fold', 'value']
SUMMARY_COLUMNS = ['task', 'metric', 'mean', 'std']


class ProbeKind(str, Enum):
    RIDGE = 'ridge'
    LOGISTIC = 'logistic'


@dataclass(frozen=True, eq=False)
class ProbeResult:
    """Per-fold metric values with their mean and population std."""

    task: str
    metric: str
    fold_values: tuple[float, ...]
    fold_models: tuple[Any, ...] = field(default=(), repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_values))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_values, ddof=0))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'task': self.task,
            'metric': self.metric,
            'fold': np.arange(len(self.fold_values)),
            'value': np.asarray(self.fold_values, dtype=np.float64),
        }, columns=RESULT_COLUMNS)

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([[self.task, self.metric, self.mean, self.std]], columns=SUMMARY_COLUMNS)


def _csv_text(frame: pd.DataFrame) -> str:
    buffer = StringIO()
    frame.to_csv(buffer, index=False, float_format='%.17g', lineterminator='\n')
    return buffer.getvalue()


def write_results(results: Sequence[ProbeResult], folds_path: Path, summary_path: Path):
    """Writes fold rows ``task,metric,fold,value`` and summary rows ``task,metric,mean,std``."""
    atomic_write_text(Path(folds_path), _csv_text(pd.concat([r.to_frame() for r in results], ignore_index=True)))
    atomic_write_text(
        Path(summary_path), _csv_text(pd.concat([r.summary_frame() for r in results], ignore_index=True))
    )


@dataclass(frozen=True)
class Standardizer:
    """Feature mean/std fitted on training rows; zero spread maps to 1."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> 'Standardizer':
        std = X.std(axis=0)
        return cls(mean=X.mean(axis=0), scale=np.where(std > 0, std, 1.0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


def is_binary(values: np.ndarray) -> bool:
    return bool(np.all(np.isin(values, (0.0, 1.0))))


def default_probe(task: str, targets: np.ndarray) -> ProbeKind:
    """Logistic for sex and binary labels, ridge for age and scalar labels."""
    if task != 'age' and is_binary(targets):
        return ProbeKind.LOGISTIC
    return ProbeKind.RIDGE


def fit_fold(
    features: np.ndarray,
    targets: np.ndarray,
    kind: ProbeKind,
    config: ProbeConfig,
) -> tuple[Standardizer, RidgeModel | LogisticModel]:
    """Fits standardization and probe on training rows only."""
    scaler = Standardizer.fit(features)
    scaled = scaler.apply(features)
    if kind is ProbeKind.LOGISTIC:
        model = logistic_probe_fit(scaled, targets, config.probe_iterations, config.probe_lr)
    else:
        model = ridge_fit(scaled, targets, config.ridge_penalty)
    return scaler, model


def evaluate_features(
    features: np.ndarray,
    cohort: Cohort,
    task: str,
    config: ProbeConfig,
    kind: Optional[ProbeKind | str] = None,
) -> ProbeResult:
    """k-fold probe of a task from precomputed per-subject features.

    Args:
        features: (subjects, width) representations aligned with the cohort
        cohort: Cohort providing targets and strata
        task: age, sex or a label name
        config: Folds, penalty and logistic settings
        kind: Probe family; chosen from the task when None

    Returns:
        ProbeResult with MAE for ridge probes and balanced accuracy for
        logistic probes
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != len(cohort):
        raise LengthMismatchError(f"features of shape {features.shape} for {len(cohort)} subjects")
    targets = cohort.target(task)
    kind = ProbeKind(kind) if kind is not None else default_probe(task, targets)
    if kind is ProbeKind.LOGISTIC and not is_binary(targets):
        raise ValidationError(f"task {task!r} is not binary; use a ridge probe")

    stratify = task if kind is ProbeKind.LOGISTIC else None
    folds = split_folds(cohort, config.folds, stratify_label=stratify, seed=config.seed)
    metric_kind = MetricKind.BALANCED_ACCURACY if kind is ProbeKind.LOGISTIC else MetricKind.MAE

    values, models = [], []
    every = np.arange(len(cohort))
    for number, test in enumerate(folds):
        train = np.setdiff1d(every, test)
        scaler, model = fit_fold(features[train], targets[train], kind, config)
        value = metric(metric_kind, model.predict(scaler.apply(features[test])), targets[test])
        logger.debug(f"{task} fold {number}: {metric_kind.value}={value:.6f}")
        values.append(value)
        models.append((scaler, model))

    result = ProbeResult(task, metric_kind.value, tuple(values), tuple(models))
    logger.info(f"{task}: {metric_kind.value} {result.mean:.4f} +/- {result.std:.4f} over {len(values)} folds")
    return result


def cross_validate(
    cohort: Cohort,
    checkpoint: Checkpoint,
    task: str,
    config: ProbeConfig,
    kind: Optional[ProbeKind | str] = None,
) -> ProbeResult:
    """Probes a task from the frozen encoder's representations h."""
    return evaluate_features(encode(checkpoint.params, cohort.x), cohort, task, config, kind)


def feature_study(
    table: RoiTable,
    ages: np.ndarray,
    k: int = 5,
    penalty: float = 1.0,
    seed: int = 0,
) -> list[ProbeResult]:
    """Ridge-regresses age from each single measure's K-dim ROI vector.

    Args:
        table: ROI table with at least two measures
        ages: Ages aligned with the table's subjects
        k: Number of folds
        penalty: Ridge penalty on standardized features
        seed: Fold shuffle seed

    Returns:
        Two results per measure, ``neg_mae`` then ``r2``, with the
        measure name as task
    """
    ages = np.asarray(ages, dtype=np.float64).reshape(-1)
    if table.measures.count < 2:
        raise ValidationError("feature study needs at least two measures")
    if ages.shape[0] != len(table):
        raise LengthMismatchError(f"{ages.shape[0]} ages for {len(table)} subjects")
    if k < 2 or k > len(table):
        raise ValidationError(f"cannot split {len(table)} subjects into {k} folds")

    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    folds = [(np.sort(train), np.sort(test)) for train, test in splitter.split(np.zeros((len(table), 1)))]
    config = ProbeConfig(folds=k, ridge_penalty=penalty, seed=seed)

    results = []
    for measure in table.measures.measures:
        features = table.measure_values(measure)
        neg_mae, r2 = [], []
        for train, test in folds:
            scaler, model = fit_fold(features[train], ages[train], ProbeKind.RIDGE, config)
            predictions = model.predict(scaler.apply(features[test]))
            neg_mae.append(metric(MetricKind.NEG_MAE, predictions, ages[test]))
            r2.append(metric(MetricKind.R2, predictions, ages[test]))
        results.append(ProbeResult(measure.value, MetricKind.NEG_MAE.value, tuple(neg_mae)))
        results.append(ProbeResult(measure.value, MetricKind.R2.value, tuple(r2)))
        logger.info(f"feature study {measure.value}: neg_mae {np.mean(neg_mae):.3f} r2 {np.mean(r2):.3f}")
    return results


def feature_study_frame(results: Sequence[ProbeResult]) -> pd.DataFrame:
    """One row per measure: neg_mae and r2 means and stds."""
    rows: dict[str, dict[str, float]] = {}
    for result in results:
        row = rows.setdefault(result.task, {'measure': result.task})
        row[f'{result.metric}_mean'] = result.mean
        row[f'{result.metric}_std'] = result.std
    return pd.DataFrame(list(rows.values()), columns=['measure', 'neg_mae_mean', 'neg_mae_std', 'r2_mean', 'r2_std'])
