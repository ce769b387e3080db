"""Bayesian change-point phase mapping.

Two change points split the composition line into three regions; the
smoothed categorical likelihood of the observed (possibly soft) region
labels is piecewise constant in (c1, c2), so the label posterior is a
mixture of uniform cells that can be sampled exactly. The posterior
membership field is the weighted membership average over the sampled pairs;
routines that add further likelihood terms (property data) reuse the cell
draws as their proposal and importance-weight the remainder.
"""

from __future__ import annotations

import logging

import numpy as np

from ..domain import CompositionGrid, PhaseLabelSet
from .types import ChangePointPosterior, InferenceError, InferenceParams, MembershipPosterior

logger = logging.getLogger(__name__)

LABEL_SMOOTHING = 1e-6


def membership(change_points, x):
    """One-hot region vector(s): region 0 below c1, 1 in [c1, c2), 2 at/above c2."""
    c = np.sort(np.asarray(change_points, dtype=float))
    x = np.asarray(x, dtype=float)
    region = (x >= c[0]).astype(int) + (x >= c[1]).astype(int)
    out = np.zeros(x.shape + (3,))
    np.put_along_axis(out, np.expand_dims(region, -1), 1.0, axis=-1)
    return out


def _region_index(cps: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """(N, m) region index of each x under each sorted change-point pair."""
    return (xs[None, :] >= cps[:, 0:1]).astype(np.int8) + (xs[None, :] >= cps[:, 1:2]).astype(np.int8)


def label_log_likelihood(cps: np.ndarray, labels: PhaseLabelSet) -> np.ndarray:
    """Per-draw categorical log likelihood of the labels, with smoothing.

    Soft labels enter as expected log likelihood: sum_r y[r] * ln(eps + M[r]).
    For a one-hot membership row this collapses to
    y[region] * ln(1 + eps) + (1 - y[region]) * ln(eps).
    """
    n_draws = cps.shape[0]
    if len(labels) == 0:
        return np.zeros(n_draws)
    xs = labels.compositions
    regions = _region_index(cps, xs).astype(int)
    # hit[i, j] = y_j[region of x_j under draw i]
    hit = labels.labels[np.arange(xs.size)[None, :], regions]
    ln_eps = np.log(LABEL_SMOOTHING)
    ln_one = np.log1p(LABEL_SMOOTHING)
    return hit.sum(axis=1) * (ln_one - ln_eps) + xs.size * ln_eps


def normalize_log_weights(log_w: np.ndarray) -> tuple[np.ndarray, float]:
    """Self-normalized weights and effective sample size from log weights."""
    finite = np.isfinite(log_w)
    if not np.any(finite):
        raise InferenceError("all importance weights vanished")
    shifted = log_w - log_w[finite].max()
    w = np.where(finite, np.exp(shifted), 0.0)
    w /= w.sum()
    ess = 1.0 / float((w**2).sum())
    return w, ess


def weighted_membership(cps: np.ndarray, weights: np.ndarray, grid: CompositionGrid, ess: float) -> MembershipPosterior:
    regions = _region_index(cps, grid.points)
    probs = np.zeros((grid.size, 3))
    for r in range(3):
        probs[:, r] = weights @ (regions == r)
    probs /= probs.sum(axis=1, keepdims=True)
    return MembershipPosterior(grid, probs, ess)


def weighted_change_point_stats(cps: np.ndarray, weights: np.ndarray) -> ChangePointPosterior:
    means = weights @ cps
    var = weights @ (cps - means) ** 2
    return ChangePointPosterior(np.sort(means), np.sqrt(np.maximum(var, 0.0)))


def sample_change_point_prior(n: int, grid: CompositionGrid, rng: np.random.Generator) -> np.ndarray:
    """(n, 2) uniform pairs over the composition domain, each row sorted."""
    return np.sort(rng.uniform(grid.lo, grid.hi, size=(n, 2)), axis=1)


def _label_cells(labels: PhaseLabelSet, grid: CompositionGrid):
    """Exact cell decomposition of the label likelihood over (c1, c2).

    The categorical likelihood is piecewise constant in the change points,
    with breakpoints at the labeled compositions: inside a cell
    (c1 in interval i, c2 in interval j) every label keeps its region. This
    yields the label posterior over cells in closed form, so change points
    can be sampled exactly instead of thinned out of the uniform prior.
    Returns (edges, i_idx, j_idx, cell_log_posterior).
    """
    lo, hi = grid.lo, grid.hi
    xs = np.clip(labels.compositions, lo, hi)
    edges = np.unique(np.concatenate(([lo], xs, [hi])))
    lengths = np.diff(edges)
    n_int = lengths.size
    i_idx, j_idx = np.triu_indices(n_int)
    if len(labels):
        s = np.searchsorted(edges, xs, side="left")
        regions = (i_idx[:, None] < s[None, :]).astype(int) + (j_idx[:, None] < s[None, :]).astype(int)
        hit = labels.labels[np.arange(xs.size)[None, :], regions]
        ln_eps = np.log(LABEL_SMOOTHING)
        ln_one = np.log1p(LABEL_SMOOTHING)
        cell_ll = hit.sum(axis=1) * (ln_one - ln_eps) + xs.size * ln_eps
    else:
        cell_ll = np.zeros(i_idx.size)
    area = lengths[i_idx] * lengths[j_idx]
    area[i_idx == j_idx] *= 0.5
    with np.errstate(divide="ignore"):
        log_post = cell_ll + np.log(area)
    return edges, i_idx, j_idx, log_post


def sample_change_points_given_labels(
    labels: PhaseLabelSet, grid: CompositionGrid, n: int, rng: np.random.Generator
) -> np.ndarray:
    """(n, 2) sorted pairs drawn exactly from the label posterior over (c1, c2).

    With no labels this reduces to the sorted uniform prior. The smoothed
    label likelihood is absorbed into the proposal, so downstream importance
    weights over these draws carry only the remaining likelihood terms.
    """
    edges, i_idx, j_idx, log_post = _label_cells(labels, grid)
    shifted = np.exp(log_post - log_post.max())
    probs = shifted / shifted.sum()
    cells = rng.choice(probs.size, size=n, p=probs)
    u = rng.uniform(size=(n, 2))
    lengths = np.diff(edges)
    i, j = i_idx[cells], j_idx[cells]
    c1 = edges[i] + u[:, 0] * lengths[i]
    c2 = edges[j] + u[:, 1] * lengths[j]
    return np.sort(np.column_stack([c1, c2]), axis=1)


def phase_map_infer(
    labels: PhaseLabelSet,
    grid: CompositionGrid,
    params: InferenceParams | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[MembershipPosterior, ChangePointPosterior]:
    """Posterior membership field and change-point summary from region labels.

    Change points are sampled from the exact cell posterior of the labels;
    the draws then enter the membership average with uniform weights. With an
    empty label set this reduces to sampling the prior.
    """
    params = params or InferenceParams()
    rng = rng or np.random.default_rng(0)
    n = params.n_prior_samples
    cps = sample_change_points_given_labels(labels, grid, n, rng)
    weights = np.full(n, 1.0 / n)
    pm = weighted_membership(cps, weights, grid, ess=float(n))
    cp = weighted_change_point_stats(cps, weights)
    return pm, cp
