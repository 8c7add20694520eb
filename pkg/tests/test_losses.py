"""Tests for degree matrices and the contrastive/supervised loss family."""

import math

import numpy as np
import pytest

from ancl.config import LossConfig
from ancl.errors import (
    DegenerateAnchorError,
    LengthMismatchError,
    NotUnitNormError,
    ShapeMismatchError,
    ValidationError,
)
from ancl.losses import (
    DegreeKind,
    DegreeMatrix,
    EmbeddingBatch,
    age_degree,
    age_degree_matrix,
    anat_sup_loss,
    anatcl_global_loss,
    anatcl_local_loss,
    combined_loss,
    expw_loss,
    expw_weights,
    l1_age_loss,
    normalized_weights,
    simclr_degree_matrix,
    simclr_loss,
    weighted_contrastive,
    yaware_loss,
)
from ancl.numgrad import Tape, finite_diff_check


def unit_rows(rng, n, d):
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_degrees(rng, n, kind=DegreeKind.GLOBAL_ANAT):
    a = rng.uniform(0.05, 1.0, (n, n))
    values = (a + a.T) / 2.0
    np.fill_diagonal(values, 1.0)
    return DegreeMatrix(values, kind)


def contrastive_oracle(z, weights, temperature):
    """Per-anchor loop over the weighted InfoNCE definition."""
    n = z.shape[0]
    total = 0.0
    for a in range(n):
        row = np.array([weights[a, t] if t != a else 0.0 for t in range(n)])
        row = row / row.sum()
        sims = [float(z[a] @ z[t]) / temperature for t in range(n)]
        log_partition = math.log(sum(math.exp(sims[t]) for t in range(n) if t != a))
        total += log_partition - sum(row[t] * sims[t] for t in range(n))
    return total / n


def value(fn, *args, **kwargs) -> float:
    return fn(Tape(), *args, **kwargs).item()


class TestAgeDegrees:
    def test_kernel_values(self):
        assert age_degree(40.0, 40.0, 5.0) == 1.0
        assert age_degree(40.0, 45.0, 5.0) == pytest.approx(math.exp(-0.5))
        assert age_degree(20.0, 80.0, 5.0) < 1e-30

    def test_matrix(self):
        matrix = age_degree_matrix(np.array([30.0, 35.0, 60.0]), sigma=5.0)
        assert matrix.kind is DegreeKind.AGE_KERNEL
        np.testing.assert_array_equal(np.diag(matrix.values), 1.0)
        assert matrix.values[0, 1] == pytest.approx(math.exp(-0.5))

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValidationError):
            age_degree(1.0, 2.0, 0.0)
        with pytest.raises(ValidationError):
            age_degree_matrix(np.array([1.0, 2.0]), -1.0)


class TestDegreeMatrix:
    def test_rejects_asymmetry(self):
        with pytest.raises(ValidationError):
            DegreeMatrix(np.array([[1.0, 0.2], [0.3, 1.0]]), DegreeKind.LOCAL_ANAT)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            DegreeMatrix(np.array([[1.0, 1.2], [1.2, 1.0]]), DegreeKind.LOCAL_ANAT)

    def test_rejects_non_unit_diagonal(self):
        with pytest.raises(ValidationError):
            DegreeMatrix(np.array([[0.9, 0.2], [0.2, 1.0]]), DegreeKind.AGE_KERNEL)

    def test_rejects_singleton(self):
        with pytest.raises(ValidationError):
            DegreeMatrix(np.ones((1, 1)), DegreeKind.AGE_KERNEL)

    def test_simclr_block_structure(self):
        values = simclr_degree_matrix(3).values
        assert values.shape == (6, 6)
        np.testing.assert_array_equal(np.diag(values), 0.0)
        for i in range(3):
            assert values[i, i + 3] == 1.0 and values[i + 3, i] == 1.0
        assert values.sum() == 6.0


class TestNormalizedWeights:
    def test_rows_sum_to_one_without_self(self, rng):
        weights = normalized_weights(random_degrees(rng, 5))
        np.testing.assert_allclose(weights.sum(axis=1), 1.0)
        np.testing.assert_array_equal(np.diag(weights), 0.0)

    def test_degenerate_anchor(self):
        values = np.eye(3)
        with pytest.raises(DegenerateAnchorError):
            normalized_weights(values)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            normalized_weights(np.array([[1.0, -0.1], [-0.1, 1.0]]))


class TestWeightedContrastive:
    @pytest.mark.parametrize('seed', [0, 1, 2])
    def test_matches_anchor_loop(self, seed):
        rng = np.random.default_rng(seed)
        z = unit_rows(rng, 6, 4)
        degrees = random_degrees(rng, 6)
        got = value(weighted_contrastive, z, degrees, 0.1)
        assert got == pytest.approx(contrastive_oracle(z, degrees.values, 0.1), rel=1e-10)

    def test_nonnegative(self, rng):
        for _ in range(25):
            z = unit_rows(rng, 5, 3)
            assert value(weighted_contrastive, z, random_degrees(rng, 5), 0.1) >= -1e-12

    def test_identical_embeddings_give_log_of_candidates(self):
        z = np.tile([[0.6, 0.8]], (5, 1))
        assert value(weighted_contrastive, z, np.ones((5, 5)), 0.1) == pytest.approx(math.log(4))

    def test_weight_scale_invariance(self, rng):
        z = unit_rows(rng, 4, 3)
        weights = random_degrees(rng, 4).values
        assert value(weighted_contrastive, z, weights, 0.2) == pytest.approx(
            value(weighted_contrastive, z, weights * 0.3, 0.2), rel=1e-12
        )

    def test_stable_at_small_temperature(self, rng):
        z = unit_rows(rng, 4, 3)
        loss = value(weighted_contrastive, z, random_degrees(rng, 4), 1e-3)
        assert math.isfinite(loss)

    def test_permutation_invariance(self, rng):
        z = unit_rows(rng, 5, 3)
        weights = random_degrees(rng, 5).values
        order = rng.permutation(5)
        assert value(weighted_contrastive, z, weights, 0.1) == pytest.approx(
            value(weighted_contrastive, z[order], weights[np.ix_(order, order)], 0.1), rel=1e-12
        )

    def test_invalid_arguments(self, rng):
        z = unit_rows(rng, 3, 2)
        with pytest.raises(ValidationError):
            value(weighted_contrastive, z, np.ones((3, 3)), 0.0)
        with pytest.raises(ShapeMismatchError):
            value(weighted_contrastive, z, np.ones((4, 4)), 0.1)

    def test_rows_off_the_unit_sphere_rejected(self, rng):
        z = rng.standard_normal((5, 3))
        with pytest.raises(NotUnitNormError):
            value(weighted_contrastive, z, np.ones((5, 5)), 0.1)
        scaled = unit_rows(rng, 5, 3)
        scaled[2] *= 1.5
        with pytest.raises(NotUnitNormError, match='row 2'):
            value(weighted_contrastive, scaled, np.ones((5, 5)), 0.1)
        with pytest.raises(NotUnitNormError):
            EmbeddingBatch(scaled, ages=np.full(5, 40.0))

    def test_unit_norm_tolerance(self, rng):
        z = unit_rows(rng, 4, 3) * (1.0 + 1e-12)
        assert value(weighted_contrastive, z, np.ones((4, 4)), 0.1) >= 0.0

    def test_zero_row_has_zero_cosine(self):
        z = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        expected = contrastive_oracle(z, np.ones((3, 3)), 0.1)
        assert value(weighted_contrastive, z, np.ones((3, 3)), 0.1) == pytest.approx(expected, rel=1e-12)

    def test_gradient(self, rng):
        raw = rng.standard_normal((5, 3))
        degrees = random_degrees(rng, 5)

        def f(tape, leaves):
            return weighted_contrastive(tape, tape.l2_normalize_rows(leaves[0]), degrees, 0.1)

        assert finite_diff_check(f, [raw]) < 1e-6


class TestVariants:
    def test_yaware_uses_age_kernel(self, rng):
        z = unit_rows(rng, 5, 3)
        ages = np.array([20.0, 22.0, 40.0, 41.0, 70.0])
        expected = value(weighted_contrastive, z, age_degree_matrix(ages, 5.0), 0.1)
        assert value(yaware_loss, EmbeddingBatch(z, ages=ages), 5.0, 0.1) == pytest.approx(expected)

    def test_expw_reweights_with_expm1(self, rng):
        z = unit_rows(rng, 5, 3)
        ages = np.array([20.0, 22.0, 40.0, 41.0, 70.0])
        kernel = age_degree_matrix(ages, 5.0)
        np.testing.assert_array_equal(expw_weights(kernel), np.expm1(kernel.values))
        # 20 vs 70 years gives a weight near 1e-22, which exp(w) - 1 rounds to 0
        np.testing.assert_allclose(expw_weights(kernel), np.exp(kernel.values) - 1.0, rtol=1e-12, atol=1e-15)
        expected = contrastive_oracle(z, np.expm1(kernel.values), 0.1)
        assert value(expw_loss, EmbeddingBatch(z, ages=ages), 5.0, 0.1) == pytest.approx(expected, rel=1e-10)

    def test_anatomical_variants_check_degree_kind(self, rng):
        z = unit_rows(rng, 4, 3)
        local = EmbeddingBatch(z, degrees=random_degrees(rng, 4, DegreeKind.LOCAL_ANAT))
        glob = EmbeddingBatch(z, degrees=random_degrees(rng, 4, DegreeKind.GLOBAL_ANAT))
        assert value(anatcl_local_loss, local) >= 0
        assert value(anatcl_global_loss, glob) >= 0
        with pytest.raises(ValidationError):
            value(anatcl_local_loss, glob)
        with pytest.raises(ValidationError):
            value(anatcl_global_loss, EmbeddingBatch(z))

    def test_combined_loss_is_weighted_sum(self, rng):
        z = unit_rows(rng, 5, 3)
        ages = rng.uniform(20, 60, 5)
        batch = EmbeddingBatch(z, ages=ages, degrees=random_degrees(rng, 5, DegreeKind.LOCAL_ANAT))
        config = LossConfig(variant='anatcl_local', lambda1=0.7, lambda2=2.0)
        expected = 0.7 * value(anatcl_local_loss, batch) + 2.0 * value(yaware_loss, batch)
        assert value(combined_loss, batch, config) == pytest.approx(expected, rel=1e-12)

    def test_zero_lambda2_matches_anatssl(self, rng):
        z = unit_rows(rng, 5, 3)
        batch = EmbeddingBatch(z, degrees=random_degrees(rng, 5, DegreeKind.GLOBAL_ANAT))
        anatcl = LossConfig(variant='anatcl_global', lambda2=0.0)
        anatssl = LossConfig(variant='anatssl_global')
        assert anatssl.lambda2 == 0.0
        assert value(combined_loss, batch, anatcl) == value(combined_loss, batch, anatssl)

    def test_combined_rejects_non_anatomical(self, rng):
        batch = EmbeddingBatch(unit_rows(rng, 3, 2), ages=np.array([1.0, 2.0, 3.0]) + 20)
        with pytest.raises(ValidationError):
            value(combined_loss, batch, LossConfig(variant='yaware'))

    def test_simclr_matches_nt_xent(self, rng):
        a, b = unit_rows(rng, 4, 3), unit_rows(rng, 4, 3)
        z = np.vstack([a, b])
        expected = contrastive_oracle(z, simclr_degree_matrix(4).values, 0.5)
        assert value(simclr_loss, a, b, 0.5) == pytest.approx(expected, rel=1e-10)

    def test_simclr_views_must_match(self, rng):
        with pytest.raises(ShapeMismatchError):
            value(simclr_loss, unit_rows(rng, 4, 3), unit_rows(rng, 3, 3))

    def test_embedding_batch_validation(self, rng):
        with pytest.raises(ShapeMismatchError):
            EmbeddingBatch(unit_rows(rng, 1, 3))
        with pytest.raises(ShapeMismatchError):
            EmbeddingBatch(unit_rows(rng, 3, 3), ages=np.ones(2))
        with pytest.raises(ShapeMismatchError):
            EmbeddingBatch(unit_rows(rng, 3, 3), degrees=random_degrees(rng, 4))


class TestSupervised:
    def test_l1_age_value(self):
        predictions = np.array([[30.0], [52.0], [18.0]])
        ages = np.array([32.0, 50.0, 20.0])
        assert value(l1_age_loss, predictions, ages) == pytest.approx(2.0)

    def test_l1_age_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            value(l1_age_loss, np.ones((3, 1)), np.ones(2))

    def test_anat_sup_value_and_gradient(self, rng):
        h = rng.standard_normal((4, 5))
        weight = rng.standard_normal((5, 3))
        bias = rng.standard_normal(3)
        targets = rng.uniform(1.0, 3.0, (4, 3))
        expected = np.mean(np.abs(h @ weight + bias - targets).sum(axis=1))
        assert value(anat_sup_loss, h, weight, bias, targets) == pytest.approx(expected)

        def f(tape, leaves):
            return anat_sup_loss(tape, leaves[0], leaves[1], leaves[2], targets)

        assert finite_diff_check(f, [h, weight, bias]) < 1e-6


def age_kernel_oracle(ages, sigma):
    n = len(ages)
    return np.array([[math.exp(-((ages[a] - ages[t]) ** 2) / (2 * sigma**2)) for t in range(n)] for a in range(n)])


class TestOracleEquivalence:
    """Four-subject, three-dimensional batches against the per-anchor loop."""

    @pytest.mark.parametrize('seed', range(20))
    def test_every_weighting(self, seed):
        rng = np.random.default_rng(100 + seed)
        z = unit_rows(rng, 4, 3)
        ages = rng.uniform(30.0, 45.0, 4)
        local = random_degrees(rng, 4, DegreeKind.LOCAL_ANAT)
        glob = random_degrees(rng, 4, DegreeKind.GLOBAL_ANAT)
        kernel = age_kernel_oracle(ages, 5.0)

        batch = EmbeddingBatch(z, ages=ages, degrees=local)
        assert value(yaware_loss, batch) == pytest.approx(contrastive_oracle(z, kernel, 0.1), abs=1e-12)
        assert value(anatcl_local_loss, batch) == pytest.approx(contrastive_oracle(z, local.values, 0.1), abs=1e-12)
        glob_batch = EmbeddingBatch(z, ages=ages, degrees=glob)
        assert value(anatcl_global_loss, glob_batch) == pytest.approx(
            contrastive_oracle(z, glob.values, 0.1), abs=1e-12
        )
        combined = value(combined_loss, glob_batch, LossConfig(variant='anatcl_global', lambda1=1.0, lambda2=1.0))
        expected = contrastive_oracle(z, glob.values, 0.1) + contrastive_oracle(z, kernel, 0.1)
        assert combined == pytest.approx(expected, abs=1e-12)


class TestReductionIdentities:
    @pytest.mark.parametrize('kind', [DegreeKind.LOCAL_ANAT, DegreeKind.GLOBAL_ANAT])
    def test_equal_degrees_give_uniform_weights(self, rng, kind):
        z = unit_rows(rng, 5, 3)
        batch = EmbeddingBatch(z, degrees=DegreeMatrix(np.ones((5, 5)), kind))
        loss = anatcl_local_loss if kind is DegreeKind.LOCAL_ANAT else anatcl_global_loss
        uniform = value(weighted_contrastive, z, np.ones((5, 5)), 0.1)
        assert value(loss, batch) == pytest.approx(uniform, abs=1e-12)
        assert uniform == pytest.approx(contrastive_oracle(z, np.ones((5, 5)), 0.1), abs=1e-12)

    def test_zero_lambda1_is_yaware(self, rng):
        z = unit_rows(rng, 5, 3)
        batch = EmbeddingBatch(z, ages=rng.uniform(30.0, 45.0, 5), degrees=random_degrees(rng, 5))
        config = LossConfig(variant='anatcl_global', lambda1=0.0, lambda2=1.0)
        assert value(combined_loss, batch, config) == pytest.approx(value(yaware_loss, batch), abs=1e-12)
