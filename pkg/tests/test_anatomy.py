"""Tests for atlases, ROI tables, descriptors and anatomical degrees."""

import numpy as np
import pandas as pd
import pytest

from ancl.anatomy import (
    Atlas,
    DegreeMode,
    MeasureSet,
    RoiTable,
    cosine,
    degree_matrix,
    fit_normalizer,
    global_degree,
    global_descriptors,
    local_degree,
    local_descriptors,
    mean_global_descriptor,
)
from ancl.errors import (
    AtlasMismatchError,
    DimensionMismatchError,
    MalformedRowError,
    MissingEntriesError,
    MissingFileError,
    UnknownSubjectError,
    ValidationError,
    ZeroVectorError,
)
from ancl.losses import DegreeKind

from conftest import INNER_SUBJECTS, make_table


class TestAtlas:
    def test_roi_counts(self):
        assert Atlas.from_name('desikan').roi_count == 68
        assert Atlas.from_name('destrieux').roi_count == 148

    def test_from_roi_count(self):
        assert str(Atlas.from_roi_count(148)) == 'destrieux'
        with pytest.raises(AtlasMismatchError):
            Atlas.from_roi_count(70)

    def test_unknown_atlas(self):
        with pytest.raises(ValidationError):
            Atlas.from_name('aal')

    def test_measure_set_parse_keeps_order(self):
        measures = MeasureSet.parse(['GMV', 'CT_mean'])
        assert measures.names == ['GMV', 'CT_mean']
        assert measures.index('CT_mean') == 1

    def test_measure_set_rejects_duplicates_and_unknowns(self):
        with pytest.raises(ValidationError):
            MeasureSet.parse(['GMV', 'GMV'])
        with pytest.raises(ValidationError):
            MeasureSet.parse(['thickness'])

    def test_all_seven(self):
        assert MeasureSet.all_seven().count == 7
        assert MeasureSet.default().names == ['CT_mean', 'GMV', 'surface_area']


class TestRoiTable:
    def test_shape_must_match_atlas(self):
        with pytest.raises(AtlasMismatchError):
            make_table(np.ones((2, 60, 3)))

    def test_negative_values_rejected(self):
        values = np.ones((2, 68, 3))
        values[1, 4, 2] = -0.1
        with pytest.raises(ValidationError):
            make_table(values)

    def test_lookup(self, random_table):
        np.testing.assert_array_equal(random_table.row('s2'), random_table.values[2])
        np.testing.assert_array_equal(random_table.measure_values('GMV'), random_table.values[:, :, 1])
        with pytest.raises(UnknownSubjectError):
            random_table.row('nobody')

    def test_subset_reorders(self, random_table):
        subset = random_table.subset(['s3', 's0'])
        assert subset.subject_ids == ('s3', 's0')
        np.testing.assert_array_equal(subset.values[0], random_table.values[3])

    def test_select_measures(self, random_table):
        selected = random_table.select(MeasureSet.parse(['surface_area', 'CT_mean']))
        np.testing.assert_array_equal(selected.values[:, :, 0], random_table.values[:, :, 2])
        with pytest.raises(AtlasMismatchError):
            random_table.select(MeasureSet.parse(['CT_std']))

    def test_csv_round_trip(self, random_table, tmp_path):
        path = tmp_path / 'roi.csv'
        random_table.to_csv(path)
        assert RoiTable.read_csv(path).equals(random_table)

    def test_long_format_header(self, random_table, tmp_path):
        path = tmp_path / 'roi.csv'
        random_table.to_csv(path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ['subject_id', 'roi_index', 'measure_name', 'value']
        assert len(frame) == 8 * 68 * 3

    def test_missing_entry(self, random_table, tmp_path):
        path = tmp_path / 'roi.csv'
        random_table.to_csv(path)
        lines = path.read_text().splitlines()
        path.write_text('\n'.join(lines[:10] + lines[11:]) + '\n')
        with pytest.raises(MissingEntriesError):
            RoiTable.read_csv(path)

    def test_malformed_value_reports_line(self, random_table, tmp_path):
        path = tmp_path / 'roi.csv'
        random_table.to_csv(path)
        lines = path.read_text().splitlines()
        fields = lines[5].split(',')
        lines[5] = ','.join(fields[:3] + ['abc'])
        path.write_text('\n'.join(lines) + '\n')
        with pytest.raises(MalformedRowError) as info:
            RoiTable.read_csv(path)
        assert info.value.line == 6

    def test_csv_round_trip_is_bitwise_across_magnitudes(self, rng, tmp_path):
        scale = np.array([1.0, 1e3, 1e5])
        table = make_table(rng.uniform(0.5, 4.0, (4, 68, 3)) * scale)
        path = tmp_path / 'roi.csv'
        table.to_csv(path)
        np.testing.assert_array_equal(RoiTable.read_csv(path).values, table.values)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFileError):
            RoiTable.read_csv(tmp_path / 'absent.csv')

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'roi.csv'
        path.write_text('')
        with pytest.raises(MalformedRowError, match='empty'):
            RoiTable.read_csv(path)

    def test_ragged_row(self, random_table, tmp_path):
        path = tmp_path / 'roi.csv'
        random_table.to_csv(path)
        lines = path.read_text().splitlines()
        lines[3] += ',extra'
        path.write_text('\n'.join(lines) + '\n')
        with pytest.raises(MalformedRowError, match='cannot parse'):
            RoiTable.read_csv(path)

    def test_read_subset_of_measures(self, random_table, tmp_path):
        path = tmp_path / 'roi.csv'
        random_table.to_csv(path)
        table = RoiTable.read_csv(path, measures=MeasureSet.parse(['GMV']))
        np.testing.assert_array_equal(table.values[:, :, 0], random_table.values[:, :, 1])


class TestNormalization:
    def test_fitted_range_maps_to_unit_interval(self, random_table):
        stats = fit_normalizer(random_table)
        scaled = stats.apply(random_table.values)
        assert scaled.min() == 0.0 and scaled.max() == 1.0
        np.testing.assert_array_equal(scaled.min(axis=0), 0.0)
        np.testing.assert_array_equal(scaled.max(axis=0), 1.0)

    def test_out_of_range_values_clamp(self, random_table):
        stats = fit_normalizer(random_table)
        scaled = stats.apply(random_table.values * 10.0)
        assert scaled.max() <= 1.0 and scaled.min() >= 0.0

    def test_constant_column_maps_to_half(self, rng):
        values = rng.uniform(1.0, 2.0, (4, 68, 3))
        values[:, 7, 1] = 3.0
        stats = fit_normalizer(make_table(values))
        np.testing.assert_array_equal(stats.apply(values)[:, 7, 1], 0.5)

    def test_stats_from_other_measures_rejected(self, random_table):
        stats = fit_normalizer(random_table.select(MeasureSet.parse(['GMV'])))
        with pytest.raises(AtlasMismatchError):
            local_descriptors(random_table, 's0', stats)


class TestDescriptors:
    def test_local_and_global_shapes(self, random_table):
        stats = fit_normalizer(random_table)
        assert local_descriptors(random_table, 's1', stats).psi.shape == (68, 3)
        omega = global_descriptors(random_table, 's1').omega
        assert omega.shape == (3, 68)
        np.testing.assert_array_equal(omega, random_table.values[1].T)

    def test_mean_global_descriptor(self, random_table):
        np.testing.assert_allclose(mean_global_descriptor(random_table, 's4'), random_table.values[4].mean(axis=0))
        assert mean_global_descriptor(random_table).shape == (8, 3)


class TestCosine:
    def test_known_values(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
        assert cosine([1.0, 1.0], [2.0, 2.0]) == pytest.approx(1.0)
        assert cosine([3.0, 4.0], [4.0, 3.0]) == pytest.approx(24.0 / 25.0)

    def test_clipped_to_unit_interval(self, rng):
        v = rng.uniform(0.1, 1.0, 50)
        assert cosine(v, v * 7.3) <= 1.0

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine([1.0, 2.0], [1.0, 2.0, 3.0])


class TestDegrees:
    def test_self_degree_is_one(self, random_table):
        stats = fit_normalizer(random_table)
        a = local_descriptors(random_table, 's0', stats)
        assert local_degree(a, a) == pytest.approx(1.0)
        g = global_descriptors(random_table, 's0')
        assert global_degree(g, g) == pytest.approx(1.0)

    def test_global_degree_ignores_subject_scale(self, random_table):
        scaled = random_table.values.copy()
        scaled[1] *= 2.5
        other = make_table(scaled)
        before = global_degree(global_descriptors(random_table, 's0'), global_descriptors(random_table, 's1'))
        after = global_degree(global_descriptors(other, 's0'), global_descriptors(other, 's1'))
        assert after == pytest.approx(before, abs=1e-12)

    def test_descriptor_sets_must_match(self, random_table):
        a = global_descriptors(random_table, 's0')
        b = global_descriptors(random_table.select(MeasureSet.parse(['GMV', 'CT_mean'])), 's1')
        with pytest.raises(DimensionMismatchError):
            global_degree(a, b)

    @pytest.mark.parametrize('mode', ['local', 'global'])
    def test_matrix_matches_pairwise_loop(self, random_table, mode):
        subjects = ['s0', 's2', 's3', 's5']
        stats = fit_normalizer(random_table)
        matrix = degree_matrix(random_table, subjects, mode, stats)
        for i, a in enumerate(subjects):
            for j, b in enumerate(subjects):
                if mode == 'local':
                    expected = local_degree(
                        local_descriptors(random_table, a, stats), local_descriptors(random_table, b, stats)
                    )
                else:
                    expected = global_degree(global_descriptors(random_table, a), global_descriptors(random_table, b))
                assert matrix.values[i, j] == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize('mode', list(DegreeMode))
    def test_matrix_invariants(self, random_table, mode):
        matrix = degree_matrix(random_table, INNER_SUBJECTS, mode, fit_normalizer(random_table))
        values = matrix.values
        np.testing.assert_array_equal(values, values.T)
        np.testing.assert_array_equal(np.diag(values), 1.0)
        assert values.min() >= 0.0 and values.max() <= 1.0
        expected = DegreeKind.LOCAL_ANAT if mode is DegreeMode.LOCAL else DegreeKind.GLOBAL_ANAT
        assert matrix.kind is expected

    def test_zero_descriptor_raises(self, rng):
        values = rng.uniform(1.0, 2.0, (3, 68, 3))
        values[2, :, 0] = 0.0
        table = make_table(values)
        with pytest.raises(ZeroVectorError):
            degree_matrix(table, ['s0', 's2'], 'global')

    def test_needs_two_subjects(self, random_table):
        with pytest.raises(ValidationError):
            degree_matrix(random_table, ['s0'], 'global')

    def test_measure_order_does_not_change_global_degree(self, random_table):
        reordered = random_table.select(MeasureSet.parse(['surface_area', 'CT_mean', 'GMV']))
        subjects = list(random_table.subject_ids)
        np.testing.assert_allclose(
            degree_matrix(reordered, subjects, 'global').values,
            degree_matrix(random_table, subjects, 'global').values,
            atol=1e-12,
        )


class TestDegreeProperties:
    """Random nonnegative subject pairs over the 68-ROI atlas with three measures."""

    def test_random_pairs(self, rng):
        reference = rng.uniform(0.5, 4.0, (10, 68, 3))
        reference[0] = 0.25
        reference[1] = 4.5
        stats = fit_normalizer(make_table(reference))
        for _ in range(1000):
            table = make_table(rng.uniform(0.5, 4.0, (2, 68, 3)))
            la, lb = (local_descriptors(table, s, stats) for s in ('s0', 's1'))
            ga, gb = (global_descriptors(table, s) for s in ('s0', 's1'))
            alpha, beta = local_degree(la, lb), global_degree(ga, gb)
            assert 0.0 <= alpha <= 1.0 and 0.0 <= beta <= 1.0
            assert alpha == local_degree(lb, la)
            assert beta == global_degree(gb, ga)
            assert local_degree(la, la) == 1.0
            assert global_degree(ga, ga) == 1.0
            scale = rng.uniform(0.1, 10.0)
            scaled = make_table(table.values * np.array([scale, 1.0])[:, None, None])
            assert global_degree(global_descriptors(scaled, 's0'), gb) == pytest.approx(beta, abs=1e-12)
