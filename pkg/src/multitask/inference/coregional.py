"""Joint structure-property inference: change points plus piecewise GPs.

Change points are proposed from the exact label-cell posterior (as in phase
mapping) with GP hyperparameters from their priors; each draw is then
importance-weighted by the marginal likelihood of the property data under a
piecewise GP whose regions are bounded by the drawn change points. Each
region carries its own RBF hyperparameters; the noise sd is shared across
regions. The property posterior is summarized by function subsamples drawn
from systematically resampled posterior draws.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import cho_solve

from .. import backend
from ..domain import CompositionGrid, PhaseLabelSet
from .changepoint import (
    normalize_log_weights,
    sample_change_points_given_labels,
    weighted_change_point_stats,
    weighted_membership,
)
from .gp import _chol_with_escalation
from .kernels import kernel_matrix
from .types import (
    ChangePointPosterior,
    InferenceError,
    InferenceParams,
    MembershipPosterior,
    PropertyPosterior,
)

logger = logging.getLogger(__name__)

LENGTH_SCALE_PRIOR = (1.0, 20.0)
SIGNAL_SD_PRIOR = (1.0, 20.0)
NOISE_SD_PRIOR = (0.01, 0.1)


def systematic_resample(weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draw indices proportional to the weights, low-variance systematic scheme."""
    positions = (rng.uniform() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions).clip(max=weights.size - 1)


def _region_slices(x_sorted: np.ndarray, c1: float, c2: float):
    i1 = int(np.searchsorted(x_sorted, c1, side="left"))
    i2 = int(np.searchsorted(x_sorted, c2, side="left"))
    return ((0, i1), (i1, i2), (i2, x_sorted.size))


def _sample_piecewise_functions(
    grid: CompositionGrid,
    x_sorted: np.ndarray,
    y_sorted: np.ndarray,
    cps: np.ndarray,
    ls: np.ndarray,
    ss: np.ndarray,
    noise_sd: float,
    n_funcs: int,
    jitter: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """(grid.size, n_funcs) joint function samples from one piecewise GP draw.

    Each region is conditioned on its own data; a region with no data is
    sampled from its prior.
    """
    out = np.empty((grid.size, n_funcs))
    grid_slices = _region_slices(grid.points, cps[0], cps[1])
    data_slices = _region_slices(x_sorted, cps[0], cps[1])
    for r in range(3):
        g_lo, g_hi = grid_slices[r]
        if g_hi == g_lo:
            continue
        gx = grid.points[g_lo:g_hi]
        d_lo, d_hi = data_slices[r]
        rx, ry = x_sorted[d_lo:d_hi], y_sorted[d_lo:d_hi]
        if rx.size == 0:
            mean = np.zeros(gx.size)
            cov = kernel_matrix(gx, gx, ls[r], ss[r], "rbf")
        else:
            K = kernel_matrix(rx, rx, ls[r], ss[r], "rbf")
            K[np.diag_indices(rx.size)] += noise_sd**2
            L = _chol_with_escalation(K, jitter)
            Ks = kernel_matrix(rx, gx, ls[r], ss[r], "rbf")
            mean = Ks.T @ cho_solve((L, True), ry, check_finite=False)
            cov = kernel_matrix(gx, gx, ls[r], ss[r], "rbf") - Ks.T @ cho_solve((L, True), Ks, check_finite=False)
        Lc = _chol_with_escalation(cov, jitter)
        z = rng.standard_normal((gx.size, n_funcs))
        out[g_lo:g_hi, :] = mean[:, None] + Lc @ z
    return out


def coregional_infer(
    labels: PhaseLabelSet,
    x_property,
    y_property,
    grid: CompositionGrid,
    params: InferenceParams | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[MembershipPosterior, ChangePointPosterior, PropertyPosterior]:
    """Coregionalized posterior over membership, change points, and property."""
    params = params or InferenceParams()
    rng = rng or np.random.default_rng(0)
    if len(labels) < 1:
        raise InferenceError("coregional inference needs at least one structure label")
    x_prop = np.asarray(x_property, dtype=float)
    y_prop = np.asarray(y_property, dtype=float)
    order = np.argsort(x_prop, kind="stable")
    x_sorted, y_sorted = x_prop[order], y_prop[order]

    n = params.n_prior_samples
    # change points come from the exact label posterior, so the importance
    # weights below carry only the property likelihood
    cps = sample_change_points_given_labels(labels, grid, n, rng)
    ls = rng.uniform(*LENGTH_SCALE_PRIOR, size=(n, 3))
    ss = rng.uniform(*SIGNAL_SD_PRIOR, size=(n, 3))
    ns = rng.uniform(*NOISE_SD_PRIOR, size=n)

    if x_sorted.size:
        log_w = backend.piecewise_rbf_loglik(cps, ls, ss, ns, x_sorted, y_sorted, params.jitter)
    else:
        log_w = np.zeros(n)
    discarded = np.count_nonzero(~np.isfinite(log_w))
    if discarded > 0.9 * n:
        raise InferenceError(f"{discarded}/{n} draws discarded by Cholesky failures")

    weights, ess = normalize_log_weights(log_w)
    if ess < params.ess_warn_threshold:
        logger.warning("coregional inference effective sample size %.1f below %s", ess, params.ess_warn_threshold)

    pm = weighted_membership(cps, weights, grid, ess)
    cp = weighted_change_point_stats(cps, weights)

    picks = systematic_resample(weights, params.n_resampled, rng)
    n_funcs = params.subsamples_per_draw
    samples = np.empty((grid.size, params.n_resampled * n_funcs))
    for j, idx in enumerate(picks):
        samples[:, j * n_funcs : (j + 1) * n_funcs] = _sample_piecewise_functions(
            grid, x_sorted, y_sorted, cps[idx], ls[idx], ss[idx], float(ns[idx]), n_funcs, params.jitter, rng
        )
    py = PropertyPosterior(grid, samples.mean(axis=1), samples.std(axis=1))
    return pm, cp, py
