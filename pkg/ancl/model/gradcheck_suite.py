"""End-to-end finite-difference checks through a small encoder."""

from dataclasses import dataclass

import numpy as np

from ancl.anatomy import global_degree_matrix, local_degree_matrix
from ancl.config import EncoderConfig, LossConfig, LossVariant
from ancl.model.encoder import init_params
from ancl.model.objectives import TrainingBatch, batch_loss, regressor_outputs
from ancl.numgrad import finite_diff_check
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

GRADCHECK_TOLERANCE = 1e-4
SUITE_ENCODER = EncoderConfig(input_dim=6, hidden_widths=[8], representation_dim=8, projection_dim=4)
SUITE_BATCH = 4
SUITE_ROIS = 5
SUITE_MEASURES = 3


@dataclass(frozen=True)
class GradcheckResult:
    variant: LossVariant
    max_error: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error < GRADCHECK_TOLERANCE)


def _suite_batch(rng: np.random.Generator) -> tuple[TrainingBatch, np.ndarray, np.ndarray]:
    ids = tuple(f's{i}' for i in range(SUITE_BATCH))
    x = rng.standard_normal((SUITE_BATCH, SUITE_ENCODER.input_dim))
    psi = rng.uniform(0.05, 1.0, (SUITE_BATCH, SUITE_ROIS, SUITE_MEASURES))
    omega = rng.uniform(0.5, 3.0, (SUITE_BATCH, SUITE_MEASURES, SUITE_ROIS))
    return TrainingBatch(
        subject_ids=ids,
        x=x,
        ages=rng.uniform(30.0, 45.0, SUITE_BATCH),
        degrees=None,
        anat_targets=omega.mean(axis=2),
        views=(
            x + 0.1 * rng.standard_normal(x.shape),
            x + 0.1 * rng.standard_normal(x.shape),
        ),
    ), psi, omega


def run_gradcheck_suite(seed: int = 0, temperature: float = 0.1, sigma: float = 5.0) -> list[GradcheckResult]:
    """Checks the gradient of every loss variant w.r.t. every parameter.

    Args:
        seed: Seed for the batch and the initialization
        temperature: Contrastive temperature
        sigma: Age-kernel bandwidth

    Returns:
        One result per variant, in LossVariant order
    """
    rng = np.random.default_rng(seed)
    base, psi, omega = _suite_batch(rng)
    degrees = {
        'local': local_degree_matrix(psi, base.subject_ids),
        'global': global_degree_matrix(omega, base.subject_ids),
    }
    encoder = SUITE_ENCODER.model_copy(update={'seed': seed})

    results = []
    for variant in LossVariant:
        loss = LossConfig(variant=variant, temperature=temperature, sigma=sigma)
        outputs = regressor_outputs(variant, SUITE_MEASURES)
        bias = rng.standard_normal(outputs) if outputs else None
        params = init_params(encoder, outputs, bias)
        names = list(params)
        batch = TrainingBatch(
            subject_ids=base.subject_ids,
            x=base.x,
            ages=base.ages,
            degrees=degrees[variant.degree_mode] if variant.degree_mode else None,
            anat_targets=base.anat_targets,
            views=base.views,
        )

        def objective(tape, leaves, batch=batch, loss=loss, names=names):
            return batch_loss(tape, dict(zip(names, leaves)), batch, loss)

        error = finite_diff_check(objective, [params[name] for name in names])
        result = GradcheckResult(variant, error)
        logger.debug(f"gradcheck {variant.value}: max relative error {error:.3e}")
        results.append(result)
    return results
