"""Immutable dense float64 tensor values."""

import itertools
from typing import Any

import numpy as np

from ancl.errors import DomainError

_tensor_ids = itertools.count()


class Tensor:
    """Dense row-major float64 array with a unique id.

    The underlying array is read-only, so a Tensor can be shared across
    threads. Tensors hash by identity; gradient maps are keyed by them.
    """

    __slots__ = ('id', 'data')

    def __init__(self, data: Any):
        array = np.array(data, dtype=np.float64, order='C')
        if not np.all(np.isfinite(array)):
            raise DomainError("tensor values must be finite")
        array.setflags(write=False)
        self.data = array
        self.id = next(_tensor_ids)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        """Returns the single value of a one-element tensor."""
        if self.data.size != 1:
            raise ValueError(f"item() needs a one-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Returns a writable copy of the values."""
        return self.data.copy()

    def __repr__(self) -> str:
        return f"Tensor(id={self.id}, shape={self.shape})"


def as_tensor(value: Any) -> Tensor:
    """Wraps arrays and scalars into a Tensor; passes Tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)
