"""Central finite-difference verification of tape gradients."""

import math
from typing import Callable, Optional, Sequence

import numpy as np

from ancl.errors import DomainError
from ancl.numgrad.tape import Tape
from ancl.numgrad.tensor import Tensor

ScalarFn = Callable[[Tape, list[Tensor]], Tensor]
GradientFn = Callable[[list[np.ndarray]], Sequence[np.ndarray]]


def tape_gradients(f: ScalarFn, params: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Evaluates f on a fresh tape and returns d f / d params."""
    tape = Tape()
    leaves = [tape.watch(p) for p in params]
    grads = tape.backward(f(tape, leaves))
    return [grads[leaf] for leaf in leaves]


def _evaluate(f: ScalarFn, params: Sequence[np.ndarray]) -> float:
    return f(Tape(), [Tensor(p) for p in params]).item()


def finite_diff_check(
    f: ScalarFn,
    params: Sequence[np.ndarray | Tensor],
    step: float = 1e-5,
    analytic: Optional[GradientFn] = None,
) -> float:
    """Compares analytic gradients against central differences.

    Args:
        f: Deterministic scalar function ``f(tape, leaves) -> Tensor``
        params: Parameter values at which to check
        step: Central-difference step, must be positive
        analytic: Optional gradient override ``analytic(params) -> grads``;
            the tape's backward pass is used when omitted

    Returns:
        max |analytic - numeric| / max(1, |numeric|) over every parameter
        entry; NaN when f is not finite somewhere
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")

    base = [np.array(p.data if isinstance(p, Tensor) else p, dtype=np.float64) for p in params]

    try:
        grads = analytic(base) if analytic is not None else tape_gradients(f, base)
        worst = 0.0
        for index, value in enumerate(base):
            grad = np.asarray(grads[index], dtype=np.float64).reshape(value.shape)
            for position in np.ndindex(value.shape):
                shifted = [b.copy() for b in base]
                shifted[index][position] = value[position] + step
                upper = _evaluate(f, shifted)
                shifted[index][position] = value[position] - step
                lower = _evaluate(f, shifted)
                numeric = (upper - lower) / (2.0 * step)
                error = abs(grad[position] - numeric) / max(1.0, abs(numeric))
                if not math.isfinite(error):
                    return math.nan
                worst = max(worst, error)
    except DomainError:
        return math.nan

    return worst
