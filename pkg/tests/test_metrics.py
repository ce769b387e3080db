import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multitask.groundtruth import true_property
from multitask.metrics import ci95, fowlkes_mallows, percent_min_regret


class TestRegret:
    def test_first_at_argmax_is_zero(self, grid, challenge2):
        trace = percent_min_regret([65.0], challenge2, grid)
        assert trace[0] == pytest.approx(0.0)

    def test_first_at_grid_minimum_is_hundred(self, grid, challenge2):
        values = true_property(grid.points, challenge2)
        worst = float(grid.points[int(np.argmin(values))])
        trace = percent_min_regret([worst], challenge2, grid)
        assert trace[0] == pytest.approx(100.0)

    def test_single_point_value_matches_formula(self, grid, challenge2):
        values = true_property(grid.points, challenge2)
        y_best, y_floor = values.max(), values.min()
        want = 100.0 * (y_best - true_property(15.0, challenge2)) / (y_best - y_floor)
        trace = percent_min_regret([15.0], challenge2, grid)
        assert trace[0] == pytest.approx(want)

    def test_monotone_nonincreasing(self, grid, challenge2, rng):
        xs = rng.choice(grid.points, size=12, replace=False)
        trace = percent_min_regret(xs, challenge2, grid)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_empty_rejected(self, grid, challenge2):
        with pytest.raises(ValueError):
            percent_min_regret([], challenge2, grid)


class TestFowlkesMallows:
    def test_identical_labelings(self):
        assert fowlkes_mallows([0, 1, 0, 2], [5, 7, 5, 9]) == pytest.approx(1.0)

    def test_zero_true_positives(self):
        # hand count: pred pairs {(0,2),(1,3)}, true pairs {(0,1),(2,3)} -> TP=0
        assert fowlkes_mallows([0, 1, 0, 1], [0, 0, 1, 1]) == 0.0

    def test_hand_counted_mixed_case(self):
        # pred=[0,0,0,1], true=[0,0,1,1]: TP=1, FP=2, FN=1 -> 1/sqrt(6)
        assert fowlkes_mallows([0, 0, 0, 1], [0, 0, 1, 1]) == pytest.approx(1 / np.sqrt(6))

    def test_all_singletons_defined_as_zero(self):
        assert fowlkes_mallows([0, 1, 2], [0, 1, 2]) == 0.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fowlkes_mallows([0, 1], [0, 1, 2])

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 2), min_size=4, max_size=24))
    def test_permutation_invariance_in_label_ids(self, labels):
        rng = np.random.default_rng(3)
        truth = rng.integers(0, 3, size=len(labels))
        base = fowlkes_mallows(labels, truth)
        remap = {0: 2, 1: 0, 2: 1}
        relabeled = [remap[c] for c in labels]
        assert fowlkes_mallows(relabeled, truth) == pytest.approx(base)
        assert fowlkes_mallows(truth, labels) == pytest.approx(fowlkes_mallows(labels, truth))


class TestCi95:
    def test_equal_values_zero_width(self):
        mean, half = ci95([3.0, 3.0, 3.0])
        assert mean == 3.0 and half == 0.0

    def test_n10_uses_t_quantile(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(5.0, 2.0, size=10)
        mean, half = ci95(vals)
        s = np.std(vals, ddof=1)
        assert half == pytest.approx(2.262 * s / np.sqrt(10), rel=1e-3)

    def test_two_values(self):
        mean, half = ci95([0.0, 10.0])
        assert mean == 5.0
        assert half == pytest.approx(63.53, abs=0.05)

    def test_single_value_rejected(self):
        with pytest.raises(ValueError):
            ci95([1.0])

    def test_half_width_scales_inverse_sqrt_n(self):
        small = np.tile([0.0, 2.0], 12)  # n = 24
        large = np.tile([0.0, 2.0], 48)  # n = 96, same alternating spread
        _, half_small = ci95(small)
        _, half_large = ci95(large)
        # sample sd is ~equal by construction; t quantiles nearly settle at these n
        assert half_small / half_large == pytest.approx(2.0, rel=0.1)
