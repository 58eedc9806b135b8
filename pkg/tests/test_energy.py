import itertools

import numpy as np
import pytest

from dgc.energy import (
    DEFAULT_DIRECTIONS,
    DirectionSet,
    EnergyState,
    InsufficientSamplingError,
    delta_energies,
    grid_energies,
    local_curvature,
    local_gradient,
    objective,
    phi,
    sample_energies,
)
from dgc.grid import ClassField


def full_field(labels, n_classes=None):
    labels = np.asarray(labels, dtype=np.int64)
    return ClassField(labels, np.ones(labels.shape, dtype=bool), n_classes or int(labels.max()) + 1)


def free_field(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    return ClassField(labels, np.zeros(labels.shape, dtype=bool), n_classes)


def brute_force(labels, dirs=DEFAULT_DIRECTIONS):
    """Straight enumeration of every stencil term"""
    n_rows, n_cols = labels.shape
    grad, curv = [], []
    for (dx, dy), a2 in zip(dirs.offsets, dirs.steps_squared):
        g, c = [], []
        for r in range(n_rows):
            for q in range(n_cols):
                if 0 <= r + dy < n_rows and 0 <= q + dx < n_cols:
                    g.append((labels[r + dy, q + dx] - labels[r, q]) ** 2 / a2)
                    if 0 <= r - dy < n_rows and 0 <= q - dx < n_cols:
                        c.append((labels[r + dy, q + dx] + labels[r - dy, q - dx] - 2 * labels[r, q]) ** 2 / a2 ** 2)
        grad.append(np.mean(g))
        curv.append(np.mean(c))
    return np.array(grad), np.array(curv)


class TestDirectionSet:
    def test_defaults(self):
        assert DEFAULT_DIRECTIONS.d == 4
        assert DEFAULT_DIRECTIONS.steps_squared == (1, 2, 1, 2)

    def test_collinear_offsets_rejected(self):
        with pytest.raises(ValueError):
            DirectionSet(offsets=((1, 0), (2, 0)), names=("a", "b"))

    def test_zero_offset_rejected(self):
        with pytest.raises(ValueError):
            DirectionSet(offsets=((0, 0),), names=("a",))


class TestLocalTerms:
    def test_gradient_axis(self):
        field = full_field([[1, 3]])
        assert local_gradient(field, (0, 0), 0) == 4

    def test_gradient_equal_labels(self):
        assert local_gradient(full_field([[2, 2]]), (0, 0), 0) == 0

    def test_gradient_diagonal(self):
        field = full_field([[1, 1], [1, 3]])
        assert local_gradient(field, (0, 0), 1) == pytest.approx(2.0)

    def test_gradient_outside_grid(self):
        assert local_gradient(full_field([[1, 3]]), (0, 1), 0) is None

    def test_curvature_axis(self):
        assert local_curvature(full_field([[1, 2, 4]]), (0, 1), 0) == 1

    def test_curvature_progression(self):
        assert local_curvature(full_field([[2, 4, 6]]), (0, 1), 0) == 0

    def test_curvature_diagonal(self):
        field = full_field([[1, 5, 5], [5, 1, 5], [5, 5, 3]])
        assert local_curvature(field, (1, 1), 1) == pytest.approx(1.0)

    def test_curvature_at_border(self):
        assert local_curvature(full_field([[1, 2, 4]]), (0, 0), 0) is None


class TestEnergies:
    def test_constant_field(self):
        e = grid_energies(full_field(np.full((5, 5), 3)))
        assert np.all(e.grad == 0) and np.all(e.curv == 0)
        assert e.n_pairs.tolist() == [20, 16, 20, 16]

    def test_counts_3x3(self):
        e = sample_energies(full_field(np.arange(1, 10).reshape(3, 3)))
        assert e.n_pairs.tolist() == [6, 4, 6, 4]
        assert e.n_triplets.tolist() == [3, 1, 3, 1]

    def test_ramp_energies(self):
        e = grid_energies(full_field([[1, 2, 3]] * 3))
        np.testing.assert_allclose(e.grad, [1.0, 0.5, 0.0, 0.5])
        np.testing.assert_allclose(e.curv, [0.0, 0.0, 0.0, 0.0])

    def test_4x4_against_enumeration(self, rng):
        labels = rng.integers(1, 6, size=(4, 4))
        e = grid_energies(full_field(labels, 6))
        grad, curv = brute_force(labels)
        np.testing.assert_allclose(e.grad, grad, rtol=1e-12)
        np.testing.assert_allclose(e.curv, curv, rtol=1e-12)

    def test_fully_sampled_grid_equals_sample(self, rng):
        field = full_field(rng.integers(1, 5, size=(6, 7)), 5)
        assert grid_energies(field).allclose(sample_energies(field))

    def test_sample_uses_only_sampled_stencils(self):
        labels = np.array([[1, 5, 2, 9], [3, 1, 4, 2], [2, 2, 7, 1], [1, 3, 1, 6]])
        mask = np.ones((4, 4), dtype=bool)
        mask[1, 1] = False
        sample = sample_energies(ClassField(labels, mask, 9))
        # pairs along x that avoid (1, 1)
        assert sample.n_pairs[0] == 12 - 2

    def test_insufficient_sampling(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[::2, ::2] = True
        labels = np.where(mask, 1, 0)
        with pytest.raises(InsufficientSamplingError, match="0deg"):
            sample_energies(ClassField(labels, mask, 2))

    def test_min_terms(self):
        field = full_field(np.arange(1, 10).reshape(3, 3))
        with pytest.raises(InsufficientSamplingError):
            sample_energies(field, min_terms=2)

    def test_shift_invariance(self, rng):
        labels = rng.integers(1, 5, size=(12, 12))
        mask = rng.random((12, 12)) < 0.7
        base = ClassField(labels, np.ones_like(mask), 10)
        shifted = ClassField(labels + 5, np.ones_like(mask), 10)
        assert grid_energies(base).allclose(grid_energies(shifted), rtol=0.0)
        s_base = sample_energies(ClassField(labels, mask, 10))
        s_shift = sample_energies(ClassField(labels + 5, mask, 10))
        assert s_base.allclose(s_shift, rtol=0.0)
        assert objective(grid_energies(base), s_base) == objective(grid_energies(shifted), s_shift)


class TestObjective:
    def test_phi(self):
        assert phi(2, 4) == pytest.approx(0.25)
        assert phi(1.7, 1.7) == 0
        assert phi(3, 0) == 9

    def test_identical_vectors(self, rng):
        e = grid_energies(full_field(rng.integers(1, 4, size=(5, 5)), 4))
        assert objective(e, e) == 0

    def test_double_energies(self, rng):
        e = grid_energies(full_field(rng.integers(1, 4, size=(6, 6)), 4))
        doubled = type(e)(e.grad * 2, e.curv * 2, e.n_pairs, e.n_triplets)
        assert objective(doubled, e) == pytest.approx(4.0)

    def test_invalid_weights(self, rng):
        e = grid_energies(full_field(rng.integers(1, 4, size=(4, 4)), 4))
        with pytest.raises(ValueError):
            objective(e, e, 0.7, 0.7)
        with pytest.raises(ValueError):
            objective(e, e, -0.5, 1.5)


class TestIncrementalUpdates:
    def test_same_label_is_noop(self, rng):
        field = free_field(rng.integers(1, 5, size=(5, 5)), 4)
        e = grid_energies(field)
        assert delta_energies(field, e, 12, int(field.labels[2, 2])).allclose(e, rtol=0.0)

    @pytest.mark.parametrize("site", [12, 0, 4, 20, 24, 7])
    def test_single_change_matches_recomputation(self, rng, site):
        field = free_field(rng.integers(1, 6, size=(5, 5)), 6)
        new = int(field.labels.ravel()[site]) % 6 + 1
        updated = delta_energies(field, grid_energies(field), site, new)
        expected = grid_energies(field.with_site_labels(np.array([site]), np.array([new])))
        assert updated.allclose(expected, rtol=1e-12)

    def test_sampled_site_rejected(self, make_field):
        field = make_field([[1, 2], [2, 0]], n_classes=3).with_site_labels(np.array([3]), np.array([1]))
        with pytest.raises(ValueError):
            delta_energies(field, grid_energies(field), 0, 2)

    def test_label_out_of_range(self, rng):
        field = free_field(rng.integers(1, 3, size=(3, 3)), 3)
        with pytest.raises(ValueError):
            delta_energies(field, grid_energies(field), 4, 4)

    def test_chained_delta_energies(self, rng):
        field = free_field(rng.integers(1, 9, size=(12, 12)), 8)
        energies = grid_energies(field)
        for _ in range(2000):
            site = int(rng.integers(field.labels.size))
            new = int(rng.integers(1, 9))
            energies = delta_energies(field, energies, site, new)
            field = field.with_site_labels(np.array([site]), np.array([new]))
        assert energies.allclose(grid_energies(field), rtol=1e-10)

    def test_state_exact_after_many_updates(self, rng):
        field = free_field(rng.integers(1, 9, size=(50, 50)), 8)
        state = EnergyState(field)
        sites = rng.integers(0, field.labels.size, size=100_000)
        labels = rng.integers(1, 9, size=100_000)
        for site, new in zip(sites.tolist(), labels.tolist()):
            state.relabel(site, new)
        expected = grid_energies(state.to_field(field.mask))
        got = state.energies()
        np.testing.assert_allclose(got.grad, expected.grad, rtol=1e-10)
        np.testing.assert_allclose(got.curv, expected.curv, rtol=1e-10)

    def test_state_trial_matches_objective(self, rng):
        labels = rng.integers(1, 5, size=(8, 8))
        mask = rng.random((8, 8)) < 0.75
        sample_e = sample_energies(ClassField(np.where(mask, labels, 0), mask, 4))
        field = ClassField(labels, mask, 4)
        state = EnergyState(field).bind(sample_e)
        site = int(field.prediction_sites[0])
        new = int(labels.ravel()[site]) % 4 + 1
        u_new, dgs, dcs = state.trial(site, new)
        state.commit(site, new, dgs, dcs)
        expected = objective(grid_energies(state.to_field(mask)), sample_e)
        assert u_new == pytest.approx(expected, rel=1e-12, abs=1e-15)
        assert state.objective() == pytest.approx(expected, rel=1e-12, abs=1e-15)
