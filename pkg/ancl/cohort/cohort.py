"""Subjects with inputs, ages, sex, phenotype labels and ROI measures."""

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ancl.anatomy import RoiTable
from ancl.errors import IdMismatchError, LabelMissingError, ValidationError

MIN_AGE = 5.0
MAX_AGE = 95.0
BUILTIN_TASKS = ('age', 'sex')


@dataclass(frozen=True, eq=False)
class Subject:
    """One cohort record."""

    id: str
    x: np.ndarray = field(repr=False)
    age: float
    sex: int
    labels: dict[str, float]


@dataclass(frozen=True, eq=False)
class Cohort:
    """Columnar cohort; ``subjects`` gives the per-record view.

    The ROI table, when present, is reordered to follow ``ids``.
    """

    ids: tuple[str, ...]
    x: np.ndarray
    ages: np.ndarray
    sex: np.ndarray
    labels: Mapping[str, np.ndarray] = field(default_factory=dict)
    roi: Optional[RoiTable] = None

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        if len(set(ids)) != len(ids):
            raise ValidationError("subject ids must be unique")
        x = np.array(self.x, dtype=np.float64)
        ages = np.array(self.ages, dtype=np.float64).reshape(-1)
        sex = np.array(self.sex).reshape(-1)
        if not np.all(np.isin(sex, (0, 1))):
            raise ValidationError("sex must be 0 or 1")
        sex = sex.astype(np.int64)
        n = len(ids)
        if x.ndim != 2 or x.shape[0] != n:
            raise ValidationError(f"x must have shape ({n}, input_dim), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("x must be finite")
        if ages.shape[0] != n or sex.shape[0] != n:
            raise ValidationError("ages and sex must have one entry per subject")
        if np.any(~np.isfinite(ages)) or np.any(ages < MIN_AGE) or np.any(ages > MAX_AGE):
            raise ValidationError(f"ages must lie in [{MIN_AGE:g}, {MAX_AGE:g}]")

        labels = {}
        for name, values in self.labels.items():
            if name in BUILTIN_TASKS or name == 'id':
                raise ValidationError(f"label name {name!r} is reserved")
            values = np.array(values, dtype=np.float64).reshape(-1)
            if values.shape[0] != n or not np.all(np.isfinite(values)):
                raise ValidationError(f"label {name!r} must hold one finite value per subject")
            values.setflags(write=False)
            labels[str(name)] = values

        roi = self.roi
        if roi is not None:
            known = set(roi.subject_ids)
            missing = [s for s in ids if s not in known]
            if missing:
                raise IdMismatchError(f"ROI table has no rows for subject {missing[0]}")
            extra = sorted(known - set(ids))
            if extra:
                raise IdMismatchError(f"ROI table has rows for unknown subject {extra[0]}")
            roi = roi.subset(ids)

        for array in (x, ages, sex):
            array.setflags(write=False)
        object.__setattr__(self, 'ids', ids)
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'ages', ages)
        object.__setattr__(self, 'sex', sex)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'roi', roi)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def input_dim(self) -> int:
        return self.x.shape[1]

    @property
    def subjects(self) -> list[Subject]:
        return [
            Subject(
                id=sid,
                x=self.x[i],
                age=float(self.ages[i]),
                sex=int(self.sex[i]),
                labels={name: float(values[i]) for name, values in self.labels.items()},
            )
            for i, sid in enumerate(self.ids)
        ]

    @property
    def tasks(self) -> list[str]:
        """Probe targets: age, sex and every label."""
        return [*BUILTIN_TASKS, *self.labels]

    def target(self, task: str) -> np.ndarray:
        """Values of a probe task.

        Raises:
            LabelMissingError: task is neither age, sex nor a label
        """
        if task == 'age':
            return self.ages
        if task == 'sex':
            return self.sex.astype(np.float64)
        if task not in self.labels:
            raise LabelMissingError(f"unknown task {task!r}; available: {', '.join(self.tasks)}")
        return self.labels[task]

    def subset(self, indices: Sequence[int]) -> 'Cohort':
        """Cohort restricted to ``indices`` in the given order."""
        indices = np.asarray(indices, dtype=np.int64)
        ids = tuple(self.ids[i] for i in indices)
        return Cohort(
            ids=ids,
            x=self.x[indices],
            ages=self.ages[indices],
            sex=self.sex[indices],
            labels={name: values[indices] for name, values in self.labels.items()},
            roi=self.roi.subset(ids) if self.roi is not None else None,
        )

    def without_roi(self) -> 'Cohort':
        return Cohort(self.ids, self.x, self.ages, self.sex, self.labels, None)

    def equals(self, other: 'Cohort') -> bool:
        """Exact equality of every column."""
        if (self.roi is None) != (other.roi is None):
            return False
        return (
            self.ids == other.ids
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.ages, other.ages)
            and np.array_equal(self.sex, other.sex)
            and list(self.labels) == list(other.labels)
            and all(np.array_equal(self.labels[k], other.labels[k]) for k in self.labels)
            and (self.roi is None or self.roi.equals(other.roi))
        )
