"""Noisy views of input vectors for SimCLR pretraining."""

import numpy as np

from ancl.errors import ValidationError

DEFAULT_DROPOUT = 0.1


def augment(x: np.ndarray, strength: float, seed: int, dropout: float = DEFAULT_DROPOUT) -> np.ndarray:
    """Gaussian jitter plus coordinate dropout.

    Each row gets noise with standard deviation ``strength * std(row)``;
    every coordinate is then zeroed with probability ``dropout``.

    Args:
        x: (batch, D) inputs or a single (D,) vector
        strength: Noise scale relative to the row spread, >= 0
        seed: Seed for ``np.random.default_rng``
        dropout: Zeroing probability in [0, 1)

    Returns:
        Augmented copy with the shape of x
    """
    if strength < 0:
        raise ValidationError(f"augment strength must be >= 0, got {strength}")
    if not 0.0 <= dropout < 1.0:
        raise ValidationError(f"dropout must lie in [0, 1), got {dropout}")
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)

    view = x.copy()
    if strength > 0:
        spread = x.std(axis=-1, keepdims=True)
        view = view + strength * spread * rng.standard_normal(x.shape)
    if dropout > 0:
        view[rng.random(x.shape) < dropout] = 0.0
    return view
