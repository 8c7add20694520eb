"""Cohort directories and embedding files.

A cohort directory holds ``subjects.csv`` (id, age, sex, label columns),
``features.csv`` (id, x_0 .. x_{D-1}) and optionally ``roi.csv`` in the
long ROI table format. All files are UTF-8 CSV with a header row.
"""

from io import StringIO
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from ancl.anatomy import RoiTable
from ancl.cohort.cohort import MAX_AGE, MIN_AGE, Cohort
from ancl.errors import (
    IdMismatchError,
    MalformedRowError,
    MissingFileError,
    WidthMismatchError,
)
from ancl.utils.fileio import atomic_write_text
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

SUBJECTS_FILE = 'subjects.csv'
FEATURES_FILE = 'features.csv'
ROI_FILE = 'roi.csv'
FLOAT_FORMAT = '%.17g'


def _write_frame(frame: pd.DataFrame, path: Path):
    buffer = StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    atomic_write_text(path, buffer.getvalue())


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise MissingFileError(f"required file not found: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.ParserError as e:
        raise MalformedRowError(path, 0, f"cannot parse CSV: {e}") from None
    except pd.errors.EmptyDataError:
        raise MalformedRowError(path, 1, "file is empty") from None


def _numeric_column(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    """Parses one column as float; reports the first bad row by file line."""
    values = pd.to_numeric(frame[column], errors='coerce')
    bad = values.isna() | ~np.isfinite(values)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise MalformedRowError(path, row + 2, f"non-numeric {column} {frame[column].iat[row]!r}")
    # re-parse the raw text; pd.to_numeric can be off by an ulp
    return frame[column].to_numpy(dtype=object).astype(np.float64)


def _check_ids(frame: pd.DataFrame, path: Path) -> list[str]:
    ids = frame['id']
    empty = ids == ''
    if empty.any():
        raise MalformedRowError(path, int(np.flatnonzero(empty.to_numpy())[0]) + 2, "empty id")
    duplicated = ids.duplicated()
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0])
        raise MalformedRowError(path, row + 2, f"duplicate id {ids.iat[row]!r}")
    return list(ids)


def save_cohort(cohort: Cohort, directory: Path):
    """Writes subjects.csv, features.csv and (when present) roi.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    subjects = pd.DataFrame({'id': list(cohort.ids), 'age': cohort.ages, 'sex': cohort.sex})
    for name, values in cohort.labels.items():
        subjects[name] = values
    _write_frame(subjects, directory / SUBJECTS_FILE)

    features = pd.DataFrame(cohort.x, columns=[f'x_{i}' for i in range(cohort.input_dim)])
    features.insert(0, 'id', list(cohort.ids))
    _write_frame(features, directory / FEATURES_FILE)

    if cohort.roi is not None:
        cohort.roi.to_csv(directory / ROI_FILE)
    logger.info(f"Saved cohort of {len(cohort)} subjects to {directory}")


def load_cohort(directory: Path, require_roi: bool = False) -> Cohort:
    """Loads and validates a cohort directory.

    Args:
        directory: Directory with subjects.csv, features.csv and optional roi.csv
        require_roi: Fail with MissingFileError when roi.csv is absent

    Returns:
        Id-aligned Cohort in subjects.csv order

    Raises:
        MissingFileError: a required file is absent
        MalformedRowError: a row cannot be parsed (with its line number)
        IdMismatchError: ids differ between files
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFileError(f"cohort directory not found: {directory}")

    subjects_path = directory / SUBJECTS_FILE
    subjects = _read_frame(subjects_path)
    for column in ('id', 'age', 'sex'):
        if column not in subjects.columns:
            raise MalformedRowError(subjects_path, 1, f"missing column {column!r}")
    ids = _check_ids(subjects, subjects_path)
    ages = _numeric_column(subjects, 'age', subjects_path)
    out_of_range = (ages < MIN_AGE) | (ages > MAX_AGE)
    if out_of_range.any():
        row = int(np.flatnonzero(out_of_range)[0])
        raise MalformedRowError(subjects_path, row + 2, f"age {ages[row]:g} outside [{MIN_AGE:g}, {MAX_AGE:g}]")
    sex = _numeric_column(subjects, 'sex', subjects_path)
    bad_sex = ~np.isin(sex, (0.0, 1.0))
    if bad_sex.any():
        row = int(np.flatnonzero(bad_sex)[0])
        raise MalformedRowError(subjects_path, row + 2, f"sex must be 0 or 1, got {subjects['sex'].iat[row]!r}")
    labels = {
        column: _numeric_column(subjects, column, subjects_path)
        for column in subjects.columns
        if column not in ('id', 'age', 'sex')
    }

    features_path = directory / FEATURES_FILE
    features = _read_frame(features_path)
    if list(features.columns[:1]) != ['id']:
        raise MalformedRowError(features_path, 1, "first column must be 'id'")
    expected = [f'x_{i}' for i in range(len(features.columns) - 1)]
    if list(features.columns[1:]) != expected or not expected:
        raise MalformedRowError(features_path, 1, "feature columns must be x_0 .. x_{D-1}")
    feature_ids = _check_ids(features, features_path)
    known_features = set(feature_ids)
    known_subjects = set(ids)
    missing = [s for s in ids if s not in known_features]
    if missing:
        raise IdMismatchError(f"{features_path}: no features for subject {missing[0]}")
    extra = [s for s in feature_ids if s not in known_subjects]
    if extra:
        raise IdMismatchError(f"{features_path}: features for unknown subject {extra[0]}")
    x = np.column_stack([_numeric_column(features, column, features_path) for column in expected])
    order = pd.Index(feature_ids).get_indexer(ids)
    x = x[order]

    roi_path = directory / ROI_FILE
    roi: Optional[RoiTable] = None
    if roi_path.exists():
        roi = RoiTable.read_csv(roi_path)
    elif require_roi:
        raise MissingFileError(f"ROI table required but not found: {roi_path}")

    cohort = Cohort(ids=tuple(ids), x=x, ages=ages, sex=sex.astype(np.int64), labels=labels, roi=roi)
    logger.info(
        f"Loaded cohort {directory}: {len(cohort)} subjects, input_dim {cohort.input_dim}, "
        f"roi={'yes' if roi is not None else 'no'}"
    )
    return cohort


def save_embeddings(ids: Sequence[str], h: np.ndarray, path: Path):
    """Writes representations as CSV ``id,h_0,...,h_{d-1}``."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != len(ids):
        raise WidthMismatchError(f"{len(ids)} ids for representations of shape {h.shape}")
    frame = pd.DataFrame(h, columns=[f'h_{i}' for i in range(h.shape[1])])
    frame.insert(0, 'id', [str(i) for i in ids])
    _write_frame(frame, Path(path))


def load_embeddings(path: Path, width: Optional[int] = None) -> tuple[list[str], np.ndarray]:
    """Reads an embeddings CSV.

    Args:
        path: File written by save_embeddings
        width: Expected representation width d_enc, checked when given

    Returns:
        (ids, h) with h of shape (subjects, d_enc)

    Raises:
        WidthMismatchError: header or rows do not have d_enc + 1 columns
    """
    path = Path(path)
    try:
        frame = _read_frame(path)
    except MalformedRowError as e:
        raise WidthMismatchError(f"{path}: rows have inconsistent widths ({e.reason})") from None
    columns = list(frame.columns)
    if columns[:1] != ['id']:
        raise MalformedRowError(path, 1, "first column must be 'id'")
    if columns[1:] != [f'h_{i}' for i in range(len(columns) - 1)]:
        raise MalformedRowError(path, 1, "representation columns must be h_0 .. h_{d-1}")
    if width is not None and len(columns) - 1 != width:
        raise WidthMismatchError(f"{path}: expected {width} representation columns, found {len(columns) - 1}")
    short = (frame.isna() | (frame == '')).any(axis=1)
    if short.any():
        row = int(np.flatnonzero(short.to_numpy())[0])
        raise WidthMismatchError(f"{path}:{row + 2}: row has fewer than {len(columns)} columns")
    ids = _check_ids(frame, path)
    h = np.column_stack([_numeric_column(frame, column, path) for column in columns[1:]])
    return ids, h
