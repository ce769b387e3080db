"""Core value types: compositions, grids, samples, measurements, labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# A composition is a plain float: percent of substituent along the
# pseudo-binary composition line, in [0, 100].
Composition = float

IN_REPOSITORY = "in-repository"
CHECKED_OUT = "checked-out"


class DomainError(ValueError):
    """Invalid domain value (off-grid composition, malformed spectrum, ...)."""


@dataclass(frozen=True)
class CompositionGrid:
    """Evenly spaced, strictly increasing search grid over the composition line."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 3:
            raise DomainError("grid needs at least 3 points")
        steps = np.diff(pts)
        if not np.all(steps > 0):
            raise DomainError("grid points must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-9):
            raise DomainError("grid points must be evenly spaced")

    @classmethod
    def default(cls, n_points: int = 101, lo: float = 0.0, hi: float = 100.0) -> "CompositionGrid":
        return cls(np.linspace(lo, hi, n_points))

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    def index_of(self, x: Composition) -> int:
        """Index of an exact grid point; raises if x is not on the grid."""
        idx = int(np.argmin(np.abs(self.points - x)))
        if not math.isclose(self.points[idx], x, rel_tol=0.0, abs_tol=1e-9):
            raise DomainError(f"composition {x!r} is not on the grid")
        return idx


def snap_to_grid(x: float, grid: CompositionGrid) -> Composition:
    """Nearest grid point to x; exact ties break toward the lower point."""
    if not math.isfinite(x):
        raise DomainError(f"composition must be finite, got {x!r}")
    # argmin returns the first minimum, i.e. the lower point on a tie
    idx = int(np.argmin(np.abs(grid.points - x)))
    return float(grid.points[idx])


@dataclass
class Sample:
    """A physical sample; exactly one exists per composition."""

    sample_id: int
    composition: Composition
    status: str = IN_REPOSITORY
    synthesized_at: float = 0.0
    checked_out_by: str | None = None
    _lock_token: object = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class RamanSpectrum:
    """Intensities over a fixed wavenumber axis for one sample."""

    shifts: np.ndarray
    intensities: np.ndarray
    sample_id: int

    def __post_init__(self):
        shifts = np.asarray(self.shifts, dtype=float)
        inten = np.asarray(self.intensities, dtype=float)
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "intensities", inten)
        if shifts.shape != inten.shape or shifts.ndim != 1:
            raise DomainError("shifts and intensities must be 1-d and equal length")
        if not np.all(np.diff(shifts) > 0):
            raise DomainError("shifts must be strictly increasing")
        if np.any(inten < 0) or not np.any(inten > 0):
            raise DomainError("intensities must be nonnegative with at least one positive entry")


@dataclass(frozen=True)
class PropertyMeasurement:
    """One functional-property reading (normalized, dimensionless)."""

    sample_id: int
    value: float
    measured_at: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError("property measurement must be finite")


@dataclass(frozen=True)
class PhaseLabelSet:
    """Per-composition probability vectors over phase regions.

    Hard labels are one-hot rows; soft labels are allowed as long as each row
    is a probability vector.
    """

    compositions: np.ndarray
    labels: np.ndarray
    n_regions: int = field(default=3)

    def __post_init__(self):
        xs = np.atleast_1d(np.asarray(self.compositions, dtype=float))
        ys = np.asarray(self.labels, dtype=float)
        if ys.size == 0:
            ys = ys.reshape(0, self.n_regions)
        object.__setattr__(self, "compositions", xs)
        object.__setattr__(self, "labels", ys)
        if ys.shape != (xs.size, self.n_regions):
            raise DomainError(f"labels must be shaped ({xs.size}, {self.n_regions})")
        if xs.size and (np.any(ys < 0) or not np.allclose(ys.sum(axis=1), 1.0, atol=1e-9)):
            raise DomainError("each label row must be a probability vector")

    def __len__(self) -> int:
        return int(self.compositions.size)

    @classmethod
    def empty(cls, n_regions: int = 3) -> "PhaseLabelSet":
        return cls(np.empty(0), np.empty((0, n_regions)), n_regions)

    @classmethod
    def one_hot(cls, compositions, regions, n_regions: int = 3) -> "PhaseLabelSet":
        xs = np.atleast_1d(np.asarray(compositions, dtype=float))
        regs = np.atleast_1d(np.asarray(regions, dtype=int))
        ys = np.zeros((xs.size, n_regions))
        ys[np.arange(xs.size), regs] = 1.0
        return cls(xs, ys, n_regions)
