"""Campaign evaluation: % minimum regret, Fowlkes-Mallows, t confidence intervals."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .domain import CompositionGrid
from .groundtruth import ChallengeSpec, true_property


def percent_min_regret(measured_compositions, spec: ChallengeSpec, grid: CompositionGrid) -> np.ndarray:
    """Best-so-far regret trace, in percent of the grid's property range.

    r_n = 100 * (y_best - max_{i<=n} f(x_i)) / (y_best - y_floor), with f the
    noiseless true property and y_best / y_floor its grid extrema.
    """
    xs = np.asarray(measured_compositions, dtype=float)
    if xs.size == 0:
        raise ValueError("need at least one measured composition")
    landscape = true_property(grid.points, spec)
    y_best, y_floor = float(landscape.max()), float(landscape.min())
    values = true_property(xs, spec)
    best_so_far = np.maximum.accumulate(values)
    return 100.0 * (y_best - best_so_far) / (y_best - y_floor)


def fowlkes_mallows(pred_labels, true_labels) -> float:
    """Pair-counting partition similarity in [0, 1]; 0 when undefined."""
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape or pred.size < 2:
        raise ValueError("labelings must have equal length >= 2")
    pred_ids = np.unique(pred, return_inverse=True)[1]
    true_ids = np.unique(true, return_inverse=True)[1]
    contingency = np.zeros((pred_ids.max() + 1, true_ids.max() + 1), dtype=np.int64)
    np.add.at(contingency, (pred_ids, true_ids), 1)

    def pairs(counts):
        return float((counts * (counts - 1) // 2).sum())

    tp = pairs(contingency)
    pred_pairs = pairs(contingency.sum(axis=1))
    true_pairs = pairs(contingency.sum(axis=0))
    if pred_pairs == 0 or true_pairs == 0:
        return 0.0
    return tp / np.sqrt(pred_pairs * true_pairs)


def ci95(values) -> tuple[float, float]:
    """Student-t mean and 95% half-width over run-level values."""
    vals = np.asarray(values, dtype=float)
    if vals.size < 2:
        raise ValueError("confidence interval needs at least two values")
    mean = float(vals.mean())
    sd = float(vals.std(ddof=1))
    t = float(stats.t.ppf(0.975, vals.size - 1))
    return mean, t * sd / np.sqrt(vals.size)
