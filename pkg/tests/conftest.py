"""Shared fixtures: small synthetic cohorts and encoder configs."""

import numpy as np
import pytest

from ancl.anatomy import Atlas, MeasureSet, RoiTable
from ancl.cohort import generate
from ancl.config import EncoderConfig, LossConfig, SyntheticConfig, TrainConfig


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    """Keeps a developer's ANCL_CONFIG out of the tests."""
    monkeypatch.delenv('ANCL_CONFIG', raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope='session')
def small_cohort():
    """40 subjects, 12 input features, desikan CT/GMV/SA."""
    return generate(SyntheticConfig(n_subjects=40, input_dim=12, noise_scale=0.3, seed=7))


@pytest.fixture
def small_encoder():
    return EncoderConfig(input_dim=12, hidden_widths=[16], representation_dim=8, projection_dim=4, seed=3)


def train_config(variant: str, epochs: int = 2, batch_size: int = 8, **loss) -> TrainConfig:
    return TrainConfig(
        learning_rate=1e-3,
        epochs=epochs,
        batch_size=batch_size,
        loss=LossConfig(variant=variant, **loss),
        seed=5,
    )


def make_table(values: np.ndarray, measures=('CT_mean', 'GMV', 'surface_area')) -> RoiTable:
    """RoiTable over desikan from a (subjects, 68, N) array."""
    ids = tuple(f's{i}' for i in range(values.shape[0]))
    return RoiTable(ids, values, Atlas.from_name('desikan'), MeasureSet.parse(measures))


@pytest.fixture
def random_table(rng):
    """s0..s5 random; s6 and s7 bracket every column from below and above.

    Only s6 has all-zero local descriptors, so s0..s5 are safe for local degrees.
    """
    values = rng.uniform(0.5, 4.0, (8, 68, 3))
    values[6] = 0.25
    values[7] = 4.5
    return make_table(values)


INNER_SUBJECTS = [f's{i}' for i in range(6)]
