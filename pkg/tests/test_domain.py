import numpy as np
import pytest
from hypothesis import given, strategies as st

from multitask.domain import (
    CompositionGrid,
    DomainError,
    PhaseLabelSet,
    RamanSpectrum,
    snap_to_grid,
)


class TestGrid:
    def test_default_grid(self, grid):
        assert grid.size == 101
        assert grid.lo == 0.0 and grid.hi == 100.0

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            CompositionGrid(np.array([0.0, 1.0]))

    def test_not_increasing(self):
        with pytest.raises(DomainError):
            CompositionGrid(np.array([0.0, 2.0, 1.0]))

    def test_uneven_spacing(self):
        with pytest.raises(DomainError):
            CompositionGrid(np.array([0.0, 1.0, 3.0]))

    def test_index_of_off_grid(self, grid):
        with pytest.raises(DomainError):
            grid.index_of(50.5)


class TestSnap:
    def test_exact_point(self, grid):
        assert snap_to_grid(50.0, grid) == 50.0

    def test_nearest(self, grid):
        assert snap_to_grid(50.4, grid) == 50.0

    def test_tie_breaks_low(self, grid):
        assert snap_to_grid(50.5, grid) == 50.0

    def test_rejects_non_finite(self, grid):
        with pytest.raises(DomainError):
            snap_to_grid(float("nan"), grid)
        with pytest.raises(DomainError):
            snap_to_grid(float("inf"), grid)

    @given(st.floats(min_value=-10.0, max_value=110.0, allow_nan=False))
    def test_idempotent(self, x):
        grid = CompositionGrid.default()
        snapped = snap_to_grid(x, grid)
        assert snap_to_grid(snapped, grid) == snapped

    def test_grid_points_are_fixed(self, grid):
        for g in grid.points[::10]:
            assert snap_to_grid(float(g), grid) == g


class TestSpectrum:
    def test_rejects_negative_intensity(self):
        with pytest.raises(DomainError):
            RamanSpectrum(np.array([1.0, 2.0]), np.array([0.5, -0.1]), 1)

    def test_rejects_all_zero(self):
        with pytest.raises(DomainError):
            RamanSpectrum(np.array([1.0, 2.0]), np.array([0.0, 0.0]), 1)

    def test_rejects_unsorted_shifts(self):
        with pytest.raises(DomainError):
            RamanSpectrum(np.array([2.0, 1.0]), np.array([0.5, 0.5]), 1)


class TestLabels:
    def test_one_hot(self):
        labels = PhaseLabelSet.one_hot([10.0, 50.0], [0, 2])
        assert labels.labels.shape == (2, 3)
        assert labels.labels[0, 0] == 1.0 and labels.labels[1, 2] == 1.0

    def test_rows_must_sum_to_one(self):
        with pytest.raises(DomainError):
            PhaseLabelSet(np.array([10.0]), np.array([[0.5, 0.2, 0.2]]))

    def test_empty(self):
        assert len(PhaseLabelSet.empty()) == 0
