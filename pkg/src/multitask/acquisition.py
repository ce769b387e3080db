"""Acquisition functions and the next-experiment selector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import Composition, CompositionGrid
from .inference.types import MembershipPosterior, PropertyPosterior


class SearchSpaceExhausted(RuntimeError):
    """Every grid point is excluded; the campaign ends early."""


@dataclass(frozen=True)
class AcquisitionField:
    """Utility per grid point."""

    grid: CompositionGrid
    values: np.ndarray
    kind: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.size,):
            raise ValueError("acquisition values must have one entry per grid point")
        if not np.all(np.isfinite(vals)):
            raise ValueError("acquisition values must be finite")


def entropy_acq(pm: MembershipPosterior) -> AcquisitionField:
    """Shannon entropy of the membership rows (0 ln 0 = 0)."""
    p = pm.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return AcquisitionField(pm.grid, np.maximum(-terms.sum(axis=1), 0.0), "entropy")


def ucb_beta(n: int, d: int, lam: float = 0.1, parenthesization: str = "log") -> float:
    """Exploration coefficient for the confidence-bound rule.

    Three readings of the printed schedule are supported:
    `log` places the confidence constant inside the logarithm,
    sqrt(ln(D n^2 pi^2 / (3 lam))), matching the theorem form of the GP-UCB
    literature the rule descends from; `divide` reads it as
    ln(D n^2 pi^2) / (3 lam); `multiply` as lam * ln(D n^2 pi^2) / 3.
    """
    if n < 1 or d < 1 or lam <= 0:
        raise ValueError("need n >= 1, D >= 1 and lam > 0")
    if parenthesization == "log":
        inner = math.log(d * n**2 * math.pi**2 / (3.0 * lam))
        if inner <= 0:
            raise ValueError("log argument must exceed 1")
        return math.sqrt(inner)
    inner = math.log(d * n**2 * math.pi**2)
    if inner <= 0:
        raise ValueError("log argument must exceed 1")
    if parenthesization == "divide":
        return math.sqrt(inner / (3.0 * lam))
    if parenthesization == "multiply":
        return math.sqrt(lam * inner / 3.0)
    raise ValueError(f"unknown parenthesization {parenthesization!r}")


def ucb_acq(
    py: PropertyPosterior, n: int, lam: float = 0.1, parenthesization: str = "log"
) -> AcquisitionField:
    """Upper confidence bound mu + beta_n * sigma over the grid."""
    beta = ucb_beta(n, py.grid.size, lam, parenthesization)
    return AcquisitionField(py.grid, py.mean + beta * py.sd, "ucb")


# Fields whose dynamic range is below this are treated as constant. Entropy
# fields decay to sampling crumbs (~1e-3 nat) once the phase map is resolved
# at every grid point; normalizing crumbs to full scale would let noise drive
# selection.
CONSTANT_FIELD_TOL = 1e-2


def _min_max_normalize(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi - lo <= CONSTANT_FIELD_TOL:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def combine_acq(
    ucb_field: AcquisitionField,
    pm_fields: Sequence[AcquisitionField],
    change_point_sds: Iterable[float],
) -> AcquisitionField:
    """Scheduled blend w * ucb_hat + (1 - w) * mean(pm_hats), w = min(max sd, 2)/2.

    Fields are min-max normalized first; the blend gains utility near phase
    boundaries once the change points are localized (small sds -> small w).
    """
    grid = ucb_field.grid
    for f in pm_fields:
        if f.grid is not grid and not np.array_equal(f.grid.points, grid.points):
            raise ValueError("acquisition fields must share one grid")
    sds = list(change_point_sds)
    if len(sds) != 2:
        raise ValueError("expected one sd per change point")
    w = min(max(sds), 2.0) / 2.0
    ucb_hat = _min_max_normalize(ucb_field.values)
    if pm_fields:
        pm_hat = np.mean([_min_max_normalize(f.values) for f in pm_fields], axis=0)
    else:
        pm_hat = np.zeros(grid.size)
    return AcquisitionField(grid, w * ucb_hat + (1.0 - w) * pm_hat, "combined")


def select_next(field: AcquisitionField, excluded: Iterable[Composition] = ()) -> Composition:
    """Grid argmax outside the excluded set; ties break to the lowest composition."""
    mask = np.ones(field.grid.size, dtype=bool)
    pts = field.grid.points
    for x in excluded:
        hits = np.nonzero(np.isclose(pts, x, rtol=0.0, atol=1e-9))[0]
        if hits.size:
            mask[hits[0]] = False
    if not mask.any():
        raise SearchSpaceExhausted("search space exhausted")
    allowed = np.nonzero(mask)[0]
    best = allowed[np.argmax(field.values[allowed])]
    return float(pts[best])
