import numpy as np
import pytest

from dgc.grid import (
    UNASSIGNED,
    ClassField,
    DegenerateSampleError,
    RasterGrid,
    Thresholds,
    back_transform,
    back_transform_labels,
    build_thresholds,
    describe,
    discretize,
    discretize_values,
)


class TestRasterGrid:
    def test_missing_cells_hold_nan(self):
        grid = RasterGrid(np.arange(6.0).reshape(2, 3), np.array([[True, False, True], [True, True, False]]))
        assert grid.n_missing == 2
        assert np.isnan(grid.values[0, 1])
        assert list(grid.missing_sites) == [1, 5]
        assert list(grid.sampled_values) == [0.0, 2.0, 3.0, 4.0]

    def test_from_array_masks_non_finite(self):
        grid = RasterGrid.from_array([[1.0, np.nan], [3.0, 4.0]])
        assert grid.n_sampled == 3
        assert not grid.mask[0, 1]

    def test_arrays_are_read_only(self):
        grid = RasterGrid.from_array(np.ones((2, 2)))
        with pytest.raises(ValueError):
            grid.values[0, 0] = 5.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            RasterGrid(np.ones((2, 2)), np.ones((2, 3), dtype=bool))

    def test_filled_marks_sites_sampled(self):
        grid = RasterGrid.from_array([[1.0, np.nan], [np.nan, 4.0]])
        filled = grid.filled(grid.missing_sites, np.array([2.0, 3.0]))
        assert filled.n_missing == 0
        assert filled.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_with_mask_only_removes(self):
        grid = RasterGrid.from_array([[1.0, np.nan], [3.0, 4.0]])
        thinned = grid.with_mask(np.array([[False, True], [True, True]]))
        assert thinned.n_sampled == 2
        assert not thinned.mask[0, 1]


class TestThresholds:
    def test_uniform_levels(self):
        t = build_thresholds([0.0, 10.0, 3.0], 5)
        np.testing.assert_allclose(t.levels, [2.0, 4.0, 6.0, 8.0])
        assert t.lo == 0.0 and t.hi == 10.0
        assert t.width == pytest.approx(2.0)

    def test_constant_sample_is_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            build_thresholds([3.0, 3.0, 3.0], 4)

    def test_invalid_class_count(self):
        with pytest.raises(ValueError):
            build_thresholds([0.0, 1.0], 1)

    def test_constant_thresholds(self):
        t = Thresholds.constant(7.5, 4)
        assert t.is_degenerate
        assert back_transform(1, t) == 7.5


class TestDiscretize:
    def test_interval_membership(self):
        t = build_thresholds([0.0, 10.0], 5)
        labels = discretize_values([0.0, 2.0, 2.0001, 5.0, 9.9, 10.0], t)
        assert labels.tolist() == [1, 1, 2, 3, 5, 5]

    def test_extremes_map_to_edge_classes(self):
        t = build_thresholds([1.0, 2.0], 8)
        assert discretize_values([1.0, 2.0], t).tolist() == [1, 8]

    def test_values_outside_range(self):
        t = build_thresholds([0.0, 10.0], 5)
        assert discretize_values([-3.0, 42.0], t).tolist() == [1, 5]

    def test_grid_prediction_cells_unassigned(self):
        grid = RasterGrid.from_array([[0.0, np.nan], [5.0, 10.0]])
        field = discretize(grid, build_thresholds(grid.sampled_values, 4))
        assert field.labels[0, 1] == UNASSIGNED
        assert field.labels[0, 0] == 1 and field.labels[1, 1] == 4
        assert not field.is_complete


class TestBackTransform:
    def test_midpoints(self):
        t = build_thresholds([0.0, 10.0], 5)
        assert back_transform(1, t) == pytest.approx(1.0)
        assert back_transform(3, t) == pytest.approx(5.0)
        assert back_transform(5, t) == pytest.approx(9.0)

    def test_out_of_range(self):
        t = build_thresholds([0.0, 10.0], 5)
        with pytest.raises(ValueError):
            back_transform(0, t)
        with pytest.raises(ValueError):
            back_transform(6, t)

    def test_vectorized_matches_scalar(self):
        t = build_thresholds([2.0, 9.0], 7)
        labels = np.arange(1, 8)
        np.testing.assert_allclose(back_transform_labels(labels, t), [back_transform(int(l), t) for l in labels])

    def test_reconstruction_error_bounded_by_width(self, rng):
        values = rng.uniform(0, 100, 500)
        t = build_thresholds(values, 10)
        recon = back_transform_labels(discretize_values(values, t), t)
        assert np.max(np.abs(recon - values)) <= t.width / 2 + 1e-9


class TestClassField:
    def test_sampled_labels_in_range(self):
        with pytest.raises(ValueError):
            ClassField(np.array([[0, 1]]), np.array([[True, True]]), 3)

    def test_with_site_labels_keeps_sampled(self, make_field):
        field = make_field([[1, 0], [0, 2]], n_classes=3)
        done = field.with_site_labels(field.prediction_sites, np.array([3, 3]))
        assert done.is_complete
        assert done.labels.tolist() == [[1, 3], [3, 2]]
        with pytest.raises(ValueError):
            field.with_site_labels(np.array([0]), np.array([2]))


def test_describe():
    stats = describe([1.0, 2.0, 3.0, 4.0, np.nan])
    assert stats["n"] == 4
    assert stats["mean"] == pytest.approx(2.5)
    assert stats["median"] == pytest.approx(2.5)
    assert stats["skewness"] == pytest.approx(0.0)
    assert stats["kurtosis"] == pytest.approx(1.64)
