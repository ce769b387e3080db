"""Stationary covariance functions on the composition line."""

from __future__ import annotations

import math

import numpy as np

from .. import backend


def matern52(r, length_scale: float, signal_sd: float):
    """Matern-5/2 covariance at distance r >= 0."""
    _check(length_scale, signal_sd)
    r = np.asarray(r, dtype=float)
    a = math.sqrt(5.0) * r / length_scale
    out = signal_sd**2 * (1.0 + a + a**2 / 3.0) * np.exp(-a)
    return out if out.ndim else float(out)


def rbf(r, length_scale: float, signal_sd: float):
    """Squared-exponential covariance at distance r >= 0."""
    _check(length_scale, signal_sd)
    r = np.asarray(r, dtype=float)
    out = signal_sd**2 * np.exp(-(r**2) / (2.0 * length_scale**2))
    return out if out.ndim else float(out)


def kernel_matrix(x1, x2, length_scale: float, signal_sd: float, kind: str = "matern52") -> np.ndarray:
    if kind == "matern52":
        return backend.matern52_matrix(x1, x2, length_scale, signal_sd)
    if kind == "rbf":
        return backend.rbf_matrix(x1, x2, length_scale, signal_sd)
    raise ValueError(f"unknown kernel kind {kind!r}")


def kernel_id(kind: str) -> int:
    if kind == "matern52":
        return backend.KERNEL_MATERN52
    if kind == "rbf":
        return backend.KERNEL_RBF
    raise ValueError(f"unknown kernel kind {kind!r}")


def _check(length_scale, signal_sd):
    if length_scale <= 0 or signal_sd <= 0:
        raise ValueError("length_scale and signal_sd must be positive")
