"""Cortical atlases and anatomical measure vocabularies."""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from ancl.errors import AtlasMismatchError, ValidationError


class AtlasName(str, Enum):
    """Supported cortical parcellations."""

    DESIKAN = 'desikan'
    DESTRIEUX = 'destrieux'


ROI_COUNTS = {
    AtlasName.DESIKAN: 68,
    AtlasName.DESTRIEUX: 148,
}


@dataclass(frozen=True)
class Atlas:
    """A fixed parcellation with K regions."""

    name: AtlasName

    @property
    def roi_count(self) -> int:
        return ROI_COUNTS[self.name]

    @classmethod
    def from_name(cls, name: str) -> 'Atlas':
        try:
            return cls(AtlasName(name))
        except ValueError:
            raise ValidationError(f"unknown atlas {name!r}") from None

    @classmethod
    def from_roi_count(cls, roi_count: int) -> 'Atlas':
        for name, count in ROI_COUNTS.items():
            if count == roi_count:
                return cls(name)
        raise AtlasMismatchError(f"no atlas has {roi_count} ROIs")

    def __str__(self) -> str:
        return self.name.value


class Measure(str, Enum):
    """Per-ROI anatomical measures, in canonical order."""

    CT_MEAN = 'CT_mean'
    CT_STD = 'CT_std'
    GMV = 'GMV'
    SURFACE_AREA = 'surface_area'
    INTEGRATED_MEAN_CURV = 'integrated_mean_curv'
    GAUSSIAN_CURV_INDEX = 'gaussian_curv_index'
    INTRINSIC_CURV_INDEX = 'intrinsic_curv_index'


@dataclass(frozen=True)
class MeasureSet:
    """Ordered selection of measures; N = len(measures)."""

    measures: tuple[Measure, ...]

    def __post_init__(self):
        if not self.measures:
            raise ValidationError("measure set must not be empty")
        if len(set(self.measures)) != len(self.measures):
            raise ValidationError("measure set contains duplicates")

    @property
    def count(self) -> int:
        return len(self.measures)

    def index(self, measure: Measure | str) -> int:
        return self.measures.index(Measure(measure))

    @property
    def names(self) -> list[str]:
        return [m.value for m in self.measures]

    @classmethod
    def parse(cls, names: Iterable[str]) -> 'MeasureSet':
        try:
            return cls(tuple(Measure(n) for n in names))
        except ValueError as e:
            raise ValidationError(f"unknown measure: {e}") from None

    @classmethod
    def default(cls) -> 'MeasureSet':
        """CT, GMV and surface area."""
        return cls((Measure.CT_MEAN, Measure.GMV, Measure.SURFACE_AREA))

    @classmethod
    def all_seven(cls) -> 'MeasureSet':
        return cls(tuple(Measure))

    def __len__(self) -> int:
        return len(self.measures)
