"""Posterior containers and sampler settings shared by the inference routines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import CompositionGrid


class InferenceError(RuntimeError):
    """Inference could not produce a posterior (degenerate weights, Cholesky)."""


@dataclass(frozen=True)
class MembershipPosterior:
    """D x R grid of phase-region probabilities; rows sum to 1."""

    grid: CompositionGrid
    probs: np.ndarray
    ess: float = float("nan")

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.shape[0] != self.grid.size:
            raise ValueError("membership probs must have one row per grid point")
        rowsum = probs.sum(axis=1)
        if np.any(probs < -1e-12) or not np.allclose(rowsum, 1.0, atol=1e-9):
            raise ValueError("membership rows must be probability vectors")


@dataclass(frozen=True)
class ChangePointPosterior:
    """Per-change-point mean and sd, means sorted ascending."""

    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        sds = np.asarray(self.sds, dtype=float)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)
        if means.shape != sds.shape:
            raise ValueError("means and sds must have equal shape")
        if np.any(np.diff(means) < 0):
            raise ValueError("change-point means must be sorted ascending")
        if np.any(sds < 0):
            raise ValueError("change-point sds must be nonnegative")


@dataclass(frozen=True)
class PropertyPosterior:
    """Per-grid-point mean and sd of the functional property."""

    grid: CompositionGrid
    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        sd = np.asarray(self.sd, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)
        if mean.shape != (self.grid.size,) or sd.shape != (self.grid.size,):
            raise ValueError("mean and sd must have one entry per grid point")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(sd))):
            raise ValueError("property posterior must be finite")
        if np.any(sd < 0):
            raise ValueError("property posterior sd must be nonnegative")


@dataclass(frozen=True)
class InferenceParams:
    """Sampler sizes and numerical knobs for the Bayesian routines."""

    n_prior_samples: int = 2000
    n_resampled: int = 50
    subsamples_per_draw: int = 5
    jitter: float = 1e-6
    gp_restarts: int = 8
    length_scale_bounds: tuple[float, float] = (0.5, 50.0)
    signal_sd_bounds: tuple[float, float] = (0.1, 50.0)
    noise_sd_bounds: tuple[float, float] = (1e-3, 5.0)
    gp_tol: float = 1e-6
    ess_warn_threshold: float = 50.0

    def __post_init__(self):
        for name in ("n_prior_samples", "n_resampled", "subsamples_per_draw"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.jitter <= 0 or self.gp_restarts < 1 or self.gp_tol <= 0:
            raise ValueError("jitter, gp_restarts and gp_tol must be positive")
        for lo, hi in (self.length_scale_bounds, self.signal_sd_bounds, self.noise_sd_bounds):
            if not 0 < lo < hi:
                raise ValueError("hyperparameter bounds must satisfy 0 < lo < hi")
