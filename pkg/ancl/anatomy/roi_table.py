"""Per-subject ROI measure tables and their CSV format."""

from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from ancl.anatomy.atlas import Atlas, Measure, MeasureSet
from ancl.errors import (
    AtlasMismatchError,
    MalformedRowError,
    MissingEntriesError,
    MissingFileError,
    UnknownSubjectError,
    ValidationError,
)
from ancl.utils.fileio import atomic_write_text
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

ROI_COLUMNS = ['subject_id', 'roi_index', 'measure_name', 'value']


@dataclass(frozen=True, eq=False)
class RoiTable:
    """Anatomical values of shape (subjects, K, N)."""

    subject_ids: tuple[str, ...]
    values: np.ndarray
    atlas: Atlas
    measures: MeasureSet
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        expected = (len(self.subject_ids), self.atlas.roi_count, self.measures.count)
        if values.shape != expected:
            raise AtlasMismatchError(f"values shape {values.shape} does not match {expected}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("ROI values must be finite")
        if np.any(values < 0):
            raise ValidationError("anatomical measures must be nonnegative")
        if len(set(self.subject_ids)) != len(self.subject_ids):
            raise ValidationError("duplicate subject ids in ROI table")
        values.setflags(write=False)
        object.__setattr__(self, 'subject_ids', tuple(str(s) for s in self.subject_ids))
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, '_index', {s: i for i, s in enumerate(self.subject_ids)})

    def __len__(self) -> int:
        return len(self.subject_ids)

    def index_of(self, subject: str) -> int:
        try:
            return self._index[str(subject)]
        except KeyError:
            raise UnknownSubjectError(f"unknown subject {subject!r}") from None

    def row(self, subject: str) -> np.ndarray:
        """Returns the (K, N) block of one subject."""
        return self.values[self.index_of(subject)]

    def measure_values(self, measure: Measure | str) -> np.ndarray:
        """Returns the (subjects, K) slice of one measure."""
        return self.values[:, :, self.measures.index(measure)]

    def subset(self, subject_ids: Sequence[str]) -> 'RoiTable':
        """Returns a table restricted to and ordered by ``subject_ids``."""
        rows = [self.index_of(s) for s in subject_ids]
        return RoiTable(tuple(subject_ids), self.values[rows], self.atlas, self.measures)

    def select(self, measures: MeasureSet) -> 'RoiTable':
        """Returns a table holding only ``measures``, in their order."""
        missing = [m.value for m in measures.measures if m not in self.measures.measures]
        if missing:
            raise AtlasMismatchError(f"ROI table lacks measure(s) {', '.join(missing)}")
        columns = [self.measures.index(m) for m in measures.measures]
        return RoiTable(self.subject_ids, self.values[:, :, columns], self.atlas, measures)

    def equals(self, other: 'RoiTable') -> bool:
        return (
            self.subject_ids == other.subject_ids
            and self.atlas == other.atlas
            and self.measures == other.measures
            and np.array_equal(self.values, other.values)
        )

    def to_frame(self) -> pd.DataFrame:
        """Long format, one row per (subject, roi, measure)."""
        subjects, rois, measures = self.values.shape
        return pd.DataFrame({
            'subject_id': np.repeat(np.array(self.subject_ids, dtype=object), rois * measures),
            'roi_index': np.tile(np.repeat(np.arange(rois), measures), subjects),
            'measure_name': np.tile(np.array(self.measures.names, dtype=object), subjects * rois),
            'value': self.values.reshape(-1),
        })

    def to_csv(self, path: Path):
        """Writes the table in the long CSV format."""
        buffer = StringIO()
        self.to_frame().to_csv(buffer, index=False, float_format='%.17g', lineterminator='\n')
        atomic_write_text(Path(path), buffer.getvalue())

    @classmethod
    def read_csv(
        cls,
        path: Path,
        atlas: Optional[Atlas] = None,
        measures: Optional[MeasureSet] = None,
    ) -> 'RoiTable':
        """Reads a long-format ROI CSV.

        Args:
            path: CSV with header subject_id,roi_index,measure_name,value
            atlas: Expected atlas; inferred from the ROI count when omitted
            measures: Measures to keep; all present measures when omitted

        Returns:
            Validated RoiTable

        Raises:
            MissingFileError: path does not exist
            MalformedRowError: a row cannot be parsed
            MissingEntriesError: some (subject, roi, measure) is absent
        """
        path = Path(path)
        if not path.exists():
            raise MissingFileError(f"ROI table not found: {path}")

        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
        except pd.errors.ParserError as e:
            raise MalformedRowError(path, 0, f"cannot parse CSV: {e}") from None
        except pd.errors.EmptyDataError:
            raise MalformedRowError(path, 1, "file is empty") from None
        if list(frame.columns) != ROI_COLUMNS:
            raise MalformedRowError(path, 1, f"header must be {','.join(ROI_COLUMNS)}")

        roi_index = pd.to_numeric(frame['roi_index'], errors='coerce')
        value = pd.to_numeric(frame['value'], errors='coerce')
        vocabulary = [m.value for m in Measure]
        checks = [
            ('subject_id', frame['subject_id'] == '', "empty subject_id"),
            ('roi_index', roi_index.isna() | (roi_index < 0) | (roi_index % 1 != 0), "bad roi_index"),
            ('measure_name', ~frame['measure_name'].isin(vocabulary), "unknown measure"),
            ('value', value.isna() | ~np.isfinite(value) | (value < 0), "bad value"),
        ]
        for column, bad, reason in checks:
            if bad.any():
                row = int(np.flatnonzero(bad.to_numpy())[0])
                raise MalformedRowError(path, row + 2, f"{reason} {frame[column].iat[row]!r}")

        # float() on the raw text is exact for %.17g; pd.to_numeric is not
        frame = frame.assign(
            roi_index=roi_index.astype(int),
            value=frame['value'].to_numpy(dtype=object).astype(np.float64),
        )
        if frame.duplicated(['subject_id', 'roi_index', 'measure_name']).any():
            first = int(np.flatnonzero(frame.duplicated(['subject_id', 'roi_index', 'measure_name']))[0])
            raise MalformedRowError(path, first + 2, "duplicate (subject, roi, measure) entry")

        roi_count = int(frame['roi_index'].max()) + 1 if len(frame) else 0
        if atlas is None:
            atlas = Atlas.from_roi_count(roi_count)
        elif roi_count > atlas.roi_count:
            raise AtlasMismatchError(f"roi_index {roi_count - 1} out of range for {atlas}")

        present = set(frame['measure_name'])
        if measures is None:
            measures = MeasureSet(tuple(m for m in Measure if m.value in present))
        frame = frame[frame['measure_name'].isin(measures.names)]

        subject_ids = list(pd.unique(frame['subject_id']))
        grid = frame.pivot(index='subject_id', columns=['roi_index', 'measure_name'], values='value')
        full_columns = pd.MultiIndex.from_product(
            [range(atlas.roi_count), measures.names], names=['roi_index', 'measure_name']
        )
        grid = grid.reindex(index=subject_ids, columns=full_columns)
        holes = np.argwhere(grid.isna().to_numpy())
        if len(holes):
            subject = subject_ids[holes[0][0]]
            roi, measure = full_columns[holes[0][1]]
            raise MissingEntriesError(
                f"{path}: missing entry subject={subject} roi={roi} measure={measure}"
            )

        values = grid.to_numpy(dtype=np.float64).reshape(len(subject_ids), atlas.roi_count, measures.count)
        logger.debug(f"Loaded ROI table {path}: {len(subject_ids)} subjects, {atlas}, {measures.names}")
        return cls(tuple(subject_ids), values, atlas, measures)
