"""Tests for the linear probes, metrics, cross-validation and the feature study."""

import numpy as np
import pandas as pd
import pytest
from sklearn.linear_model import Ridge

from ancl.anatomy import MeasureSet
from ancl.cohort import Cohort, generate, split_folds
from ancl.config import EncoderConfig, LossConfig, ProbeConfig, SyntheticConfig, TrainConfig
from ancl.errors import (
    LengthMismatchError,
    SingleClassError,
    SingularSystemError,
    ValidationError,
)
from ancl.model import encode, initial_checkpoint, pretrain
from ancl.probe import (
    ProbeKind,
    ProbeResult,
    cross_validate,
    default_probe,
    evaluate_features,
    feature_study,
    feature_study_frame,
    logistic_probe_fit,
    metric,
    ridge_fit,
    write_results,
)

from conftest import make_table, train_config


def normal_equation_oracle(X, y, penalty):
    augmented = np.column_stack([X, np.ones(len(X))])
    regularizer = penalty * np.eye(augmented.shape[1])
    regularizer[-1, -1] = 0.0
    return np.linalg.inv(augmented.T @ augmented + regularizer) @ augmented.T @ y


def noise_cohort(n: int, seed: int) -> Cohort:
    rng = np.random.default_rng(seed)
    return Cohort(
        ids=tuple(f's{i}' for i in range(n)),
        x=rng.standard_normal((n, 6)),
        ages=rng.uniform(20.0, 80.0, n),
        sex=rng.integers(0, 2, n),
        labels={'coin': rng.integers(0, 2, n)},
    )


class TestRidge:
    def test_exact_interpolation(self, rng):
        X = rng.standard_normal((30, 4))
        y = X @ np.array([1.0, -2.0, 0.5, 3.0]) + 7.0
        model = ridge_fit(X, y, 0.0)
        assert np.abs(model.predict(X) - y).max() <= 1e-8
        assert model.intercept == pytest.approx(7.0)

    @pytest.mark.parametrize('shape,penalty', [((20, 5), 0.3), ((50, 20), 2.0), ((12, 3), 0.0)])
    def test_matches_normal_equations(self, rng, shape, penalty):
        X = rng.standard_normal(shape)
        y = rng.standard_normal(shape[0])
        model = ridge_fit(X, y, penalty)
        expected = normal_equation_oracle(X, y, penalty)
        np.testing.assert_allclose(model.weights, expected[:-1], atol=1e-9)
        assert model.intercept == pytest.approx(expected[-1], abs=1e-9)

    def test_intercept_is_not_penalized(self, rng):
        X = rng.standard_normal((40, 3))
        y = X @ np.array([0.5, 1.0, -1.0]) + 100.0
        ours = ridge_fit(X, y, 5.0)
        reference = Ridge(alpha=5.0).fit(X, y)
        np.testing.assert_allclose(ours.weights, reference.coef_, atol=1e-9)
        assert ours.intercept == pytest.approx(reference.intercept_, abs=1e-8)

    def test_huge_penalty_predicts_mean(self, rng):
        X = rng.standard_normal((25, 3))
        y = rng.uniform(20, 80, 25)
        model = ridge_fit(X, y, 1e9)
        assert np.abs(model.weights).max() < 1e-5
        np.testing.assert_allclose(model.predict(X), y.mean(), atol=1e-4)

    def test_singular_without_penalty(self, rng):
        X = rng.standard_normal((10, 2))
        X = np.column_stack([X, X[:, 0]])
        with pytest.raises(SingularSystemError):
            ridge_fit(X, rng.standard_normal(10), 0.0)
        ridge_fit(X, rng.standard_normal(10), 0.1)

    def test_invalid_inputs(self, rng):
        with pytest.raises(LengthMismatchError):
            ridge_fit(np.ones((3, 2)), np.ones(4), 1.0)
        with pytest.raises(ValidationError):
            ridge_fit(np.ones((3, 2)), np.ones(3), -1.0)


class TestLogistic:
    def test_separable_clusters(self, rng):
        X = np.vstack([rng.standard_normal((30, 2)) + 5.0, rng.standard_normal((30, 2)) - 5.0])
        y = np.r_[np.ones(30), np.zeros(30)]
        model = logistic_probe_fit(X, y)
        assert metric('balanced_accuracy', model.predict(X), y) >= 0.99
        assert np.all((model.predict_proba(X) > 0.5) == (y == 1))

    def test_single_class(self, rng):
        with pytest.raises(SingleClassError):
            logistic_probe_fit(rng.standard_normal((5, 2)), np.ones(5))

    def test_targets_must_be_binary(self, rng):
        with pytest.raises(ValidationError):
            logistic_probe_fit(rng.standard_normal((3, 2)), np.array([0.0, 1.0, 2.0]))

    def test_deterministic(self, rng):
        X = rng.standard_normal((40, 3))
        y = (X[:, 0] + 0.5 * rng.standard_normal(40) > 0).astype(float)
        first = logistic_probe_fit(X, y, iterations=300)
        second = logistic_probe_fit(X, y, iterations=300)
        np.testing.assert_array_equal(first.weights, second.weights)
        assert first.iterations == second.iterations

    def test_duplicating_minority_class_changes_nothing(self, rng):
        X = rng.standard_normal((30, 3))
        y = (X[:, 1] > 0.6).astype(float)
        minority = y == 1
        X_dup = np.vstack([X, X[minority]])
        y_dup = np.r_[y, y[minority]]
        base = logistic_probe_fit(X, y, iterations=200)
        duplicated = logistic_probe_fit(X_dup, y_dup, iterations=200)
        np.testing.assert_allclose(duplicated.weights, base.weights, rtol=1e-9, atol=1e-12)
        assert duplicated.intercept == pytest.approx(base.intercept, rel=1e-9, abs=1e-12)

    def test_iteration_cap_on_separable_data(self):
        X = np.array([[-1.0], [1.0]])
        model = logistic_probe_fit(X, np.array([0.0, 1.0]), iterations=5)
        assert not model.converged
        assert model.iterations == 5


class TestMetrics:
    def test_perfect_predictions(self):
        y = np.array([1.0, 0.0, 1.0, 0.0])
        assert metric('mae', y * 30, y * 30) == 0.0
        assert metric('balanced_accuracy', y, y) == 1.0
        assert metric('r2', y * 30 + 1, y * 30 + 1) == 1.0

    def test_mean_prediction_has_zero_r2(self):
        y = np.array([20.0, 35.0, 50.0, 61.0])
        assert metric('r2', np.full(4, y.mean()), y) == pytest.approx(0.0, abs=1e-12)

    def test_balanced_accuracy_arithmetic(self):
        assert metric('balanced_accuracy', [1, 0, 0, 0], [1, 1, 0, 0]) == pytest.approx(0.75)

    def test_balanced_accuracy_ignores_class_duplication(self):
        predictions = np.array([1, 0, 1, 0, 0, 1])
        targets = np.array([1, 1, 0, 0, 0, 1])
        positives = targets == 1
        duplicated = metric(
            'balanced_accuracy',
            np.r_[predictions, predictions[positives]],
            np.r_[targets, targets[positives]],
        )
        assert duplicated == pytest.approx(metric('balanced_accuracy', predictions, targets))

    def test_mae_and_negated(self):
        assert metric('mae', [1.0, 2.0], [2.0, 4.0]) == 1.5
        assert metric('neg_mae', [1.0, 2.0], [2.0, 4.0]) == -1.5

    def test_errors(self):
        with pytest.raises(LengthMismatchError):
            metric('mae', [1.0], [1.0, 2.0])
        with pytest.raises(SingleClassError):
            metric('balanced_accuracy', [1, 0], [1, 1])
        with pytest.raises(ValidationError):
            metric('balanced_accuracy', [0.5, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            metric('accuracy', [1.0], [1.0])


class TestEvaluation:
    def test_default_probe(self):
        assert default_probe('age', np.array([0.0, 1.0])) is ProbeKind.RIDGE
        assert default_probe('sex', np.array([0.0, 1.0])) is ProbeKind.LOGISTIC
        assert default_probe('score', np.array([0.3, 1.0])) is ProbeKind.RIDGE

    def test_one_value_per_fold(self, small_cohort):
        result = evaluate_features(small_cohort.x, small_cohort, 'age', ProbeConfig(folds=4))
        assert len(result.fold_values) == 4
        assert result.metric == 'mae'
        assert result.std == pytest.approx(np.std(result.fold_values))

    def test_noise_free_age_recovered(self):
        cohort = generate(SyntheticConfig(n_subjects=200, input_dim=6, noise_scale=0.0, seed=4))
        result = evaluate_features(cohort.x, cohort, 'age', ProbeConfig(ridge_penalty=0.0))
        assert result.mean < 0.1

    @pytest.mark.parametrize('seed', [0, 1, 2])
    def test_noise_label_is_at_chance(self, seed):
        cohort = noise_cohort(500, seed)
        result = evaluate_features(cohort.x, cohort, 'coin', ProbeConfig(seed=seed))
        assert result.metric == 'balanced_accuracy'
        assert 0.40 <= result.mean <= 0.60

    def test_same_seed_same_result(self, small_cohort):
        config = ProbeConfig(seed=3)
        first = evaluate_features(small_cohort.x, small_cohort, 'sex', config)
        second = evaluate_features(small_cohort.x, small_cohort, 'sex', config)
        assert first.fold_values == second.fold_values

    def test_test_fold_never_leaks_into_fit(self, small_cohort):
        config = ProbeConfig(seed=1)
        clean = evaluate_features(small_cohort.x, small_cohort, 'age', config)
        test = split_folds(small_cohort, config.folds, seed=config.seed)[0]
        perturbed = small_cohort.x.copy()
        perturbed[test] += 50.0
        dirty = evaluate_features(perturbed, small_cohort, 'age', config)
        clean_scaler, clean_model = clean.fold_models[0]
        dirty_scaler, dirty_model = dirty.fold_models[0]
        np.testing.assert_array_equal(clean_scaler.mean, dirty_scaler.mean)
        np.testing.assert_array_equal(clean_model.weights, dirty_model.weights)
        assert clean.fold_values[0] != dirty.fold_values[0]

    def test_invalid_requests(self, small_cohort):
        with pytest.raises(LengthMismatchError):
            evaluate_features(small_cohort.x[:5], small_cohort, 'age', ProbeConfig())
        with pytest.raises(ValidationError):
            evaluate_features(small_cohort.x, small_cohort, 'age', ProbeConfig(), kind='logistic')

    def test_cross_validate_uses_frozen_representations(self, small_cohort, small_encoder):
        checkpoint = initial_checkpoint(small_encoder, train_config('anatcl_global'))
        config = ProbeConfig()
        result = cross_validate(small_cohort, checkpoint, 'sex', config)
        expected = evaluate_features(encode(checkpoint.params, small_cohort.x), small_cohort, 'sex', config)
        assert result.fold_values == expected.fold_values

    def test_write_results(self, tmp_path):
        results = [
            ProbeResult('age', 'mae', (2.0, 4.0)),
            ProbeResult('sex', 'balanced_accuracy', (0.5, 0.75)),
        ]
        write_results(results, tmp_path / 'folds.csv', tmp_path / 'summary.csv')
        assert (tmp_path / 'folds.csv').read_text().splitlines() == [
            'task,metric,fold,value',
            'age,mae,0,2',
            'age,mae,1,4',
            'sex,balanced_accuracy,0,0.5',
            'sex,balanced_accuracy,1,0.75',
        ]
        summary = pd.read_csv(tmp_path / 'summary.csv')
        assert list(summary.columns) == ['task', 'metric', 'mean', 'std']
        assert summary['mean'].tolist() == [3.0, 0.625]
        assert summary['std'].tolist() == [1.0, 0.125]


class TestFeatureStudy:
    def test_gmv_is_most_age_informative(self):
        cohort = generate(SyntheticConfig(n_subjects=600, input_dim=8, seed=5))
        frame = feature_study_frame(feature_study(cohort.roi, cohort.ages))
        assert list(frame.columns) == ['measure', 'neg_mae_mean', 'neg_mae_std', 'r2_mean', 'r2_std']
        best = frame.loc[frame['r2_mean'].idxmax(), 'measure']
        assert best == 'GMV'

    def test_noise_measure_explains_nothing(self, rng):
        n = 300
        ages = rng.uniform(20.0, 80.0, n)
        values = np.empty((n, 68, 2))
        values[:, :, 0] = 2.0 + 0.01 * ages[:, None] + 0.05 * rng.standard_normal((n, 68))
        values[:, :, 1] = rng.uniform(1.0, 2.0, (n, 68))
        table = make_table(values, measures=('CT_mean', 'CT_std'))
        frame = feature_study_frame(feature_study(table, ages, penalty=10.0)).set_index('measure')
        assert frame.loc['CT_std', 'r2_mean'] <= 0.05
        assert frame.loc['CT_mean', 'r2_mean'] > 0.9

    def test_two_results_per_measure(self, random_table):
        ages = np.linspace(20.0, 60.0, len(random_table))
        results = feature_study(random_table, ages, k=2)
        assert [(r.task, r.metric) for r in results[:2]] == [('CT_mean', 'neg_mae'), ('CT_mean', 'r2')]
        assert len(results) == 6
        assert all(len(r.fold_values) == 2 for r in results)

    def test_invalid_inputs(self, random_table):
        with pytest.raises(ValidationError):
            feature_study(random_table.select(MeasureSet.parse(['GMV'])), np.ones(8) * 30)
        with pytest.raises(LengthMismatchError):
            feature_study(random_table, np.ones(3) * 30)


@pytest.mark.slow
class TestPretrainingBenefit:
    """Desk-scale directional check against a random-init encoder and SimCLR pretraining."""

    @pytest.mark.parametrize('variant', ['anatcl_global', 'yaware'])
    def test_beats_baselines_in_most_seeds(self, variant):
        wins = 0
        for seed in range(3):
            cohort = generate(SyntheticConfig(n_subjects=2000, seed=seed))
            encoder = EncoderConfig(seed=seed)
            probe = ProbeConfig(seed=seed)

            def age_mae(loss_variant, train_model=True):
                train = TrainConfig(epochs=50, loss=LossConfig(variant=loss_variant), seed=seed)
                checkpoint = pretrain(cohort, encoder, train).checkpoint if train_model else initial_checkpoint(encoder, train)
                return cross_validate(cohort, checkpoint, 'age', probe).mean

            trained = age_mae(variant)
            wins += trained < age_mae(variant, train_model=False) and trained < age_mae('simclr')
        assert wins >= 2
