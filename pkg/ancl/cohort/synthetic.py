"""Latent factor generator for synthetic pretraining cohorts.

Each subject has an age a ~ U[6, 88] (u = (a - 6) / 82 in [0, 1]), a sex
bit, a head-size factor s and a cortical-thickness factor t. Per ROI k:

    CT_mean   = base_k (1 - 0.20 u + 0.08 t) + 0.03 base_k e
    CT_std    = base_k (1 + 0.05 u)(1 + 0.05 e)
    GMV       = base_k (1 - 0.35 u + 0.08 s)(1 + 0.03 e)
    SA        = base_k (1 - 0.05 u + 0.15 s)(1 + 0.03 e)
    curvature = base_k (1 + 0.10 e)          (three indices, age-free)

with independent standard normal e. GMV is therefore the most
age-informative measure. Inputs x mix the standardized latents
[u, s, t, per-measure ROI means] through a fixed random affine map plus
noise_scale * N(0, 1); with noise_scale = 0, age is an exact affine
function of x whenever input_dim >= 3 + N.
"""

import numpy as np

from ancl.anatomy import Atlas, Measure, MeasureSet, RoiTable
from ancl.cohort.cohort import Cohort
from ancl.config import LabelRule, SyntheticConfig
from ancl.errors import ValidationError
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_AGE = 6.0
MAX_AGE = 88.0
SEX_SIZE_SHIFT = 0.8

# (low, high) of the per-ROI base value, native units
BASE_RANGES = {
    Measure.CT_MEAN: (2.0, 3.5),
    Measure.CT_STD: (0.5, 0.9),
    Measure.GMV: (2000.0, 12000.0),
    Measure.SURFACE_AREA: (600.0, 4000.0),
    Measure.INTEGRATED_MEAN_CURV: (3.0, 12.0),
    Measure.GAUSSIAN_CURV_INDEX: (0.5, 3.0),
    Measure.INTRINSIC_CURV_INDEX: (0.5, 3.0),
}


def _standardize(values: np.ndarray) -> np.ndarray:
    std = values.std(axis=0)
    return (values - values.mean(axis=0)) / np.where(std > 0, std, 1.0)


def _roi_values(
    rng: np.random.Generator,
    u: np.ndarray,
    size: np.ndarray,
    thickness: np.ndarray,
    roi_count: int,
) -> np.ndarray:
    """All seven measures, shape (subjects, K, 7), canonical measure order."""
    n = u.shape[0]
    u, size, thickness = u[:, None], size[:, None], thickness[:, None]
    blocks = []
    for measure in Measure:
        low, high = BASE_RANGES[measure]
        base = rng.uniform(low, high, roi_count)[None, :]
        e = rng.standard_normal((n, roi_count))
        if measure is Measure.CT_MEAN:
            block = base * (1.0 - 0.20 * u + 0.08 * thickness) + 0.03 * base * e
        elif measure is Measure.CT_STD:
            block = base * (1.0 + 0.05 * u) * (1.0 + 0.05 * e)
        elif measure is Measure.GMV:
            block = base * (1.0 - 0.35 * u + 0.08 * size) * (1.0 + 0.03 * e)
        elif measure is Measure.SURFACE_AREA:
            block = base * (1.0 - 0.05 * u + 0.15 * size) * (1.0 + 0.03 * e)
        else:
            block = base * (1.0 + 0.10 * e)
        blocks.append(np.maximum(block, 0.0))
    return np.stack(blocks, axis=2)


def _labels(
    rng: np.random.Generator,
    rules: list[LabelRule],
    factors: dict[str, np.ndarray],
) -> dict[str, np.ndarray]:
    labels = {}
    n = next(iter(factors.values())).shape[0]
    for rule in rules:
        if rule.name in labels:
            raise ValidationError(f"duplicate label rule {rule.name!r}")
        if rule.factor == 'none':
            labels[rule.name] = (rng.random(n) < 0.5).astype(np.float64)
            continue
        score = factors[rule.factor] + rule.noise * rng.standard_normal(n)
        labels[rule.name] = (score > rule.threshold).astype(np.float64)
    return labels


def generate(config: SyntheticConfig) -> Cohort:
    """Draws a reproducible cohort from the latent factor model.

    Args:
        config: Generator configuration; identical configs give identical
            cohorts

    Returns:
        Cohort with x, ages, sex, threshold labels and an ROI table over
        ``config.measures``
    """
    atlas = Atlas.from_name(config.atlas)
    measures = MeasureSet.parse(config.measures)
    rng = np.random.default_rng(config.seed)
    n = config.n_subjects

    ages = rng.uniform(MIN_AGE, MAX_AGE, n)
    sex = (rng.random(n) < 0.5).astype(np.int64)
    size = rng.standard_normal(n) + SEX_SIZE_SHIFT * (sex - 0.5)
    thickness = rng.standard_normal(n)
    u = (ages - MIN_AGE) / (MAX_AGE - MIN_AGE)

    ids = tuple(f'sub-{i:05d}' for i in range(n))
    everything = RoiTable(ids, _roi_values(rng, u, size, thickness, atlas.roi_count), atlas, MeasureSet.all_seven())
    roi = everything.select(measures)

    latent = np.column_stack([u, size, thickness, roi.values.mean(axis=1)])
    latent = _standardize(latent)
    if config.input_dim < latent.shape[1]:
        logger.warning(
            f"input_dim {config.input_dim} < {latent.shape[1]} latent factors; "
            f"age is not exactly recoverable from x"
        )
    mixing = rng.standard_normal((latent.shape[1], config.input_dim)) / np.sqrt(latent.shape[1])
    offset = rng.standard_normal(config.input_dim)
    noise = rng.standard_normal((n, config.input_dim))
    x = latent @ mixing + offset + config.noise_scale * noise

    factors = {'age': latent[:, 0], 'size': latent[:, 1], 'thickness': latent[:, 2]}
    labels = _labels(rng, config.label_rules, factors)

    logger.info(
        f"Generated synthetic cohort: {n} subjects, input_dim {config.input_dim}, "
        f"{atlas} x {measures.names}, labels {list(labels)}"
    )
    return Cohort(ids=ids, x=x, ages=ages, sex=sex, labels=labels, roi=roi)
