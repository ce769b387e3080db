"""Gaussian-process regression with marginal-likelihood hyperparameter fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky

from .. import backend
from ..domain import CompositionGrid
from .kernels import kernel_id, kernel_matrix
from .types import InferenceError, InferenceParams, PropertyPosterior

MAX_JITTER = 1e-2


@dataclass(frozen=True)
class GPModel:
    kernel: str
    length_scale: float
    signal_sd: float
    noise_sd: float
    x_train: np.ndarray
    y_train: np.ndarray
    log_marginal: float

    def __post_init__(self):
        if self.length_scale <= 0 or self.signal_sd <= 0 or self.noise_sd < 0:
            raise ValueError("invalid GP hyperparameters")


def log_marginal_likelihood(
    x, y, length_scale: float, signal_sd: float, noise_sd: float, kernel: str = "matern52", jitter: float = 0.0
) -> float:
    """Zero-mean GP log marginal likelihood; -inf when not factorizable."""
    value = backend.gp_log_marginal(
        np.asarray(x, float), np.asarray(y, float), length_scale, signal_sd, noise_sd, kernel_id(kernel), jitter
    )
    jit = max(jitter, 1e-12)
    while math.isnan(value) and jit <= MAX_JITTER:
        jit *= 10.0
        value = backend.gp_log_marginal(
            np.asarray(x, float), np.asarray(y, float), length_scale, signal_sd, noise_sd, kernel_id(kernel), jit
        )
    return -math.inf if math.isnan(value) else value


def _start_points(bounds_log: np.ndarray, n_starts: int) -> np.ndarray:
    """Deterministic multi-start lattice: box corners at the 25/75% quantiles."""
    lo, hi = bounds_log[:, 0], bounds_log[:, 1]
    q1 = lo + 0.25 * (hi - lo)
    q3 = lo + 0.75 * (hi - lo)
    starts = []
    for i in range(n_starts):
        starts.append([q3[d] if (i >> d) & 1 else q1[d] for d in range(bounds_log.shape[0])])
    return np.asarray(starts)


def _pattern_search(objective, x0: np.ndarray, bounds_log: np.ndarray, tol: float):
    """Coordinate pattern search in log-space, maximizing `objective`."""
    x = np.clip(x0, bounds_log[:, 0], bounds_log[:, 1])
    best = objective(x)
    step = 0.5
    while step > 1e-4:
        gained = 0.0
        for d in range(x.size):
            for sign in (1.0, -1.0):
                cand = x.copy()
                cand[d] = min(max(cand[d] + sign * step, bounds_log[d, 0]), bounds_log[d, 1])
                if cand[d] == x[d]:
                    continue
                val = objective(cand)
                if val > best:
                    gained += val - best
                    x, best = cand, val
        if gained < tol:
            step *= 0.5
    return x, best


def gp_fit(x, y, kernel: str = "matern52", params: InferenceParams | None = None) -> GPModel:
    """Fit (length_scale, signal_sd, noise_sd) by maximum marginal likelihood."""
    params = params or InferenceParams()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 1:
        raise InferenceError("gp_fit needs at least one observation")
    bounds_log = np.log(
        np.asarray([params.length_scale_bounds, params.signal_sd_bounds, params.noise_sd_bounds])
    )
    kid = kernel_id(kernel)

    def objective(theta_log):
        l, s, n = np.exp(theta_log)
        value = backend.gp_log_marginal(x, y, l, s, n, kid, params.jitter)
        return -math.inf if math.isnan(value) else value

    best_theta, best_val = None, -math.inf
    for x0 in _start_points(bounds_log, params.gp_restarts):
        theta, val = _pattern_search(objective, x0, bounds_log, params.gp_tol)
        if val > best_val:
            best_theta, best_val = theta, val
    if best_theta is None or not math.isfinite(best_val):
        raise InferenceError("hyperparameter search failed on every restart")
    l, s, n = np.exp(best_theta)
    return GPModel(kernel, float(l), float(s), float(n), x, y, float(best_val))


def _chol_with_escalation(K: np.ndarray, base_jitter: float) -> np.ndarray:
    jit = base_jitter
    while True:
        try:
            return cholesky(K + jit * np.eye(K.shape[0]), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            jit = max(jit, 1e-12) * 10.0
            if jit > MAX_JITTER:
                raise InferenceError("Cholesky failed at maximum jitter")


def gp_predict(model: GPModel, grid: CompositionGrid, params: InferenceParams | None = None) -> PropertyPosterior:
    """Posterior mean and sd at every grid point."""
    params = params or InferenceParams()
    mean, var = gp_posterior(
        model.x_train, model.y_train, grid.points,
        model.length_scale, model.signal_sd, model.noise_sd,
        kernel=model.kernel, jitter=params.jitter,
    )
    return PropertyPosterior(grid, mean, np.sqrt(np.maximum(var, 0.0)))


def gp_posterior(
    x_train, y_train, x_query, length_scale, signal_sd, noise_sd, kernel="matern52", jitter=1e-6
):
    """Posterior mean and variance of a zero-mean GP at query points."""
    x_train = np.asarray(x_train, float)
    y_train = np.asarray(y_train, float)
    x_query = np.asarray(x_query, float)
    if x_train.size == 0:
        prior_var = np.full(x_query.size, signal_sd**2)
        return np.zeros(x_query.size), prior_var
    K = kernel_matrix(x_train, x_train, length_scale, signal_sd, kernel)
    K[np.diag_indices(x_train.size)] += noise_sd**2
    L = _chol_with_escalation(K, jitter)
    Ks = kernel_matrix(x_train, x_query, length_scale, signal_sd, kernel)
    alpha = cho_solve((L, True), y_train, check_finite=False)
    v = cho_solve((L, True), Ks, check_finite=False)
    mean = Ks.T @ alpha
    var = signal_sd**2 - np.einsum("ij,ij->j", Ks, v)
    return mean, np.maximum(var, 0.0)
