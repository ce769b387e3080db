"""Pure-numpy implementations of the numerical hot kernels.

Mirrors the API of the compiled module ``multitask._native``; the backend
module picks whichever is available. Keep signatures and semantics in sync:
``gp_log_marginal`` returns NaN on a failed Cholesky, and
``piecewise_rbf_loglik`` marks failed draws with -inf.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

KERNEL_RBF = 0
KERNEL_MATERN52 = 1

_LOG_2PI = math.log(2.0 * math.pi)

BACKEND_NAME = "python"


def rbf_matrix(x1: np.ndarray, x2: np.ndarray, length_scale: float, signal_sd: float) -> np.ndarray:
    d = np.subtract.outer(np.asarray(x1, float), np.asarray(x2, float))
    return signal_sd**2 * np.exp(-(d**2) / (2.0 * length_scale**2))


def matern52_matrix(x1: np.ndarray, x2: np.ndarray, length_scale: float, signal_sd: float) -> np.ndarray:
    r = np.abs(np.subtract.outer(np.asarray(x1, float), np.asarray(x2, float)))
    a = math.sqrt(5.0) * r / length_scale
    return signal_sd**2 * (1.0 + a + a**2 / 3.0) * np.exp(-a)


def _kernel_matrix(x1, x2, length_scale, signal_sd, kernel_id):
    if kernel_id == KERNEL_RBF:
        return rbf_matrix(x1, x2, length_scale, signal_sd)
    if kernel_id == KERNEL_MATERN52:
        return matern52_matrix(x1, x2, length_scale, signal_sd)
    raise ValueError(f"unknown kernel id {kernel_id}")


def gp_log_marginal(
    x: np.ndarray,
    y: np.ndarray,
    length_scale: float,
    signal_sd: float,
    noise_sd: float,
    kernel_id: int,
    jitter: float,
) -> float:
    """Zero-mean GP log marginal likelihood; NaN if the Cholesky fails."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    m = x.size
    K = _kernel_matrix(x, x, length_scale, signal_sd, kernel_id)
    K[np.diag_indices(m)] += noise_sd**2 + jitter
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return math.nan
    z = solve_triangular(L, y, lower=True, check_finite=False)
    return float(-0.5 * z @ z - np.sum(np.log(np.diag(L))) - 0.5 * m * _LOG_2PI)


def _batched_region_lml(x: np.ndarray, y: np.ndarray, ls, ss, ns, jitter: float) -> np.ndarray:
    """Vectorized zero-mean RBF lml of one fixed data slice under many draws.

    ls/ss/ns are 1-d arrays of per-draw hyperparameters; failed factorizations
    come back as -inf.
    """
    m = x.size
    d2 = np.subtract.outer(x, x) ** 2
    K = ss[:, None, None] ** 2 * np.exp(-d2[None, :, :] / (2.0 * ls[:, None, None] ** 2))
    K[:, np.arange(m), np.arange(m)] += ns[:, None] ** 2 + jitter
    out = np.full(ls.size, -math.inf)
    try:
        L = np.linalg.cholesky(K)
        ok = np.ones(ls.size, dtype=bool)
    except np.linalg.LinAlgError:
        ok = np.zeros(ls.size, dtype=bool)
        L = np.zeros_like(K)
        for i in range(ls.size):
            try:
                L[i] = np.linalg.cholesky(K[i])
                ok[i] = True
            except np.linalg.LinAlgError:
                pass
        if not np.any(ok):
            return out
        L = L[ok]
    rhs = np.broadcast_to(y[None, :, None], (L.shape[0], m, 1))
    z = np.linalg.solve(L, rhs)[:, :, 0]
    diag = np.diagonal(L, axis1=1, axis2=2)
    out[ok] = -0.5 * np.einsum("ij,ij->i", z, z) - np.log(diag).sum(axis=1) - 0.5 * m * _LOG_2PI
    return out


def piecewise_rbf_loglik(
    change_points: np.ndarray,
    length_scales: np.ndarray,
    signal_sds: np.ndarray,
    noise_sds: np.ndarray,
    x_sorted: np.ndarray,
    y_sorted: np.ndarray,
    jitter: float,
) -> np.ndarray:
    """Per-draw piecewise-GP log marginal likelihood over three regions.

    change_points: (N, 2) sorted rows; length_scales/signal_sds: (N, 3);
    noise_sds: (N,). x_sorted must be ascending (matching y_sorted). A draw
    whose Cholesky fails in any region gets -inf. Empty regions contribute 0.

    Draws sharing a data partition (same region boundaries relative to the
    data) are batched through stacked Cholesky factorizations.
    """
    cps = np.asarray(change_points, float)
    ls = np.asarray(length_scales, float)
    ss = np.asarray(signal_sds, float)
    ns = np.asarray(noise_sds, float)
    x = np.asarray(x_sorted, float)
    y = np.asarray(y_sorted, float)
    n_draws = cps.shape[0]
    out = np.zeros(n_draws)
    if x.size == 0 or n_draws == 0:
        return out
    i1 = np.searchsorted(x, cps[:, 0], side="left")
    i2 = np.searchsorted(x, cps[:, 1], side="left")
    partition = i1 * (x.size + 1) + i2
    for key in np.unique(partition):
        sel = np.nonzero(partition == key)[0]
        a, b = int(key // (x.size + 1)), int(key % (x.size + 1))
        total = np.zeros(sel.size)
        for r, (lo, hi) in enumerate(((0, a), (a, b), (b, x.size))):
            if hi - lo == 0:
                continue
            total += _batched_region_lml(x[lo:hi], y[lo:hi], ls[sel, r], ss[sel, r], ns[sel], jitter)
        out[sel] = total
    return out
