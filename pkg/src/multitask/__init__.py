"""Multi-agent autonomous facility simulator.

Simulates a materials research lab in which Bayesian active-learning agents
(phase mappers and property optimizers) share instruments, a sample
repository, and a data repository, under three wiring architectures:
Independent, DataSharing, and DataSharingJointDM.
"""

__version__ = "0.1.0"

from .domain import Composition, CompositionGrid, PhaseLabelSet, snap_to_grid

__all__ = ["Composition", "CompositionGrid", "PhaseLabelSet", "snap_to_grid", "__version__"]
