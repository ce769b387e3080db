"""Learning algorithms: clustering, change-point mapping, GP regression,
and coregionalized structure-property inference."""

from .changepoint import membership, phase_map_infer
from .clustering import align_labels, cosine_dissimilarity, spectral_cluster
from .coregional import coregional_infer
from .gp import GPModel, gp_fit, gp_predict, log_marginal_likelihood
from .kernels import matern52, rbf
from .types import (
    ChangePointPosterior,
    InferenceError,
    InferenceParams,
    MembershipPosterior,
    PropertyPosterior,
)

__all__ = [
    "ChangePointPosterior",
    "GPModel",
    "InferenceError",
    "InferenceParams",
    "MembershipPosterior",
    "PropertyPosterior",
    "align_labels",
    "coregional_infer",
    "cosine_dissimilarity",
    "gp_fit",
    "gp_predict",
    "log_marginal_likelihood",
    "matern52",
    "membership",
    "phase_map_infer",
    "rbf",
    "spectral_cluster",
]
