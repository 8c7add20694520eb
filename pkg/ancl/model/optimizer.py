"""Adam optimizer over named parameter arrays."""

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ancl.errors import ShapeMismatchError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass(frozen=True, eq=False)
class AdamState:
    """First/second moments and the step counter."""

    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPSILON

    @classmethod
    def zeros(cls, params: Mapping[str, np.ndarray]) -> 'AdamState':
        return cls(
            step=0,
            m={name: np.zeros_like(value) for name, value in params.items()},
            v={name: np.zeros_like(value) for name, value in params.items()},
        )

    def equals(self, other: 'AdamState') -> bool:
        """Bitwise comparison of scalars and moments."""
        return (
            (self.step, self.beta1, self.beta2, self.eps) == (other.step, other.beta1, other.beta2, other.eps)
            and list(self.m) == list(other.m)
            and list(self.v) == list(other.v)
            and all(self.m[k].tobytes() == other.m[k].tobytes() for k in self.m)
            and all(self.v[k].tobytes() == other.v[k].tobytes() for k in self.v)
        )


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update.

    Args:
        params: Current parameters by name
        grads: Gradients by name, same shapes
        state: Moments from the previous step
        lr: Learning rate for this step

    Returns:
        New parameters and new state; inputs are left untouched
    """
    step = state.step + 1
    updated: dict[str, np.ndarray] = {}
    m: dict[str, np.ndarray] = {}
    v: dict[str, np.ndarray] = {}
    for name, value in params.items():
        if name not in grads:
            raise ShapeMismatchError(f"no gradient for parameter {name}")
        grad = np.asarray(grads[name], dtype=np.float64)
        if grad.shape != value.shape or state.m[name].shape != value.shape:
            raise ShapeMismatchError(f"{name}: gradient {grad.shape} does not match parameter {value.shape}")
        m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * grad * grad
        m_hat = m[name] / (1.0 - state.beta1 ** step)
        v_hat = v[name] / (1.0 - state.beta2 ** step)
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated, AdamState(step, m, v, state.beta1, state.beta2, state.eps)
