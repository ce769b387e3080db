"""Synthetic synthesis-structure-property oracle.

Three phase regions separated by two change points; per-region Raman
templates built from Lorentzian peaks; two functional-property landscapes:
challenge 1 is a single broad peak, challenge 2 stacks broad local maxima
under a narrow global peak just inside the third region.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .domain import CompositionGrid, RamanSpectrum

RAMAN_POINTS = 256
RAMAN_SPAN = (100.0, 700.0)

# Lorentzian peak centers per region; half-width 10, unit heights.
TEMPLATE_CENTERS = (
    (140.0, 220.0, 470.0),
    (150.0, 260.0, 520.0),
    (170.0, 290.0, 610.0),
)
TEMPLATE_HALF_WIDTH = 10.0

# (amplitude, center, width) Gaussian components per challenge.
CHALLENGE_PEAKS = {
    1: ((18.0, 60.0, 25.0),),
    2: ((6.0, 15.0, 10.0), (8.0, 45.0, 8.0), (12.0, 65.0, 3.0)),
}


@dataclass(frozen=True)
class ChallengeSpec:
    """Parameter record for one optimization challenge; all knobs overridable."""

    challenge_id: int = 2
    change_points: tuple[float, float] = (35.0, 62.0)
    peaks: tuple[tuple[float, float, float], ...] = CHALLENGE_PEAKS[2]
    d33_sd: float = 0.05
    raman_sd: float = 0.01

    def __post_init__(self):
        c1, c2 = self.change_points
        if not 0.0 < c1 < c2 < 100.0:
            raise ValueError(f"change points must satisfy 0 < c1 < c2 < 100, got {self.change_points}")
        if self.d33_sd < 0 or self.raman_sd < 0:
            raise ValueError("noise standard deviations must be nonnegative")

    @classmethod
    def for_challenge(cls, challenge_id: int, **overrides) -> "ChallengeSpec":
        if challenge_id not in CHALLENGE_PEAKS:
            raise ValueError(f"unknown challenge id {challenge_id!r}, expected 1 or 2")
        spec = cls(challenge_id=challenge_id, peaks=CHALLENGE_PEAKS[challenge_id])
        return replace(spec, **overrides) if overrides else spec


def true_phase(x, spec: ChallengeSpec):
    """Region index in {0,1,2}; a change point belongs to the upper region."""
    c1, c2 = spec.change_points
    x = np.asarray(x, dtype=float)
    region = (x >= c1).astype(int) + (x >= c2).astype(int)
    return region if region.ndim else int(region)


def true_property(x, spec: ChallengeSpec):
    """Noiseless functional property at composition x."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for amp, center, width in spec.peaks:
        out = out + amp * np.exp(-((x - center) ** 2) / (2.0 * width**2))
    return out if out.ndim else float(out)


def raman_shifts() -> np.ndarray:
    return np.linspace(RAMAN_SPAN[0], RAMAN_SPAN[1], RAMAN_POINTS)


def raman_template(region: int) -> np.ndarray:
    """Noiseless template spectrum for one phase region."""
    shifts = raman_shifts()
    gamma2 = TEMPLATE_HALF_WIDTH**2
    out = np.zeros(RAMAN_POINTS)
    for center in TEMPLATE_CENTERS[region]:
        out += gamma2 / ((shifts - center) ** 2 + gamma2)
    return out


def gen_raman(region: int, rng: np.random.Generator, spec: ChallengeSpec, sample_id: int = -1) -> RamanSpectrum:
    """Template plus i.i.d. Gaussian noise, clamped at zero."""
    if region not in (0, 1, 2):
        raise ValueError(f"region must be 0, 1 or 2, got {region!r}")
    intensities = raman_template(region)
    if spec.raman_sd > 0:
        intensities = intensities + rng.normal(0.0, spec.raman_sd, size=RAMAN_POINTS)
    return RamanSpectrum(raman_shifts(), np.maximum(intensities, 0.0), sample_id)


def observe_d33(x: float, spec: ChallengeSpec, rng: np.random.Generator) -> float:
    """Noisy functional-property observation."""
    value = true_property(x, spec)
    if spec.d33_sd > 0:
        value += rng.normal(0.0, spec.d33_sd)
    return float(value)


def grid_truth_table(grid: CompositionGrid, spec: ChallengeSpec) -> list[tuple[float, float, int]]:
    """Rows of (x, true_property, true_phase) over the grid."""
    props = true_property(grid.points, spec)
    phases = true_phase(grid.points, spec)
    return [(float(x), float(p), int(r)) for x, p, r in zip(grid.points, props, phases)]
