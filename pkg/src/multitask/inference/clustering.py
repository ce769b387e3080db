"""Spectral clustering of spectra and cluster-to-region alignment.

Pipeline: cosine affinity -> symmetric normalized Laplacian -> embedding in
the k smallest-eigenvalue eigenvectors -> row normalization -> k-means
(k-means++ init, 10 restarts, best inertia).
"""

from __future__ import annotations

import numpy as np

from ..domain import PhaseLabelSet


class ClusteringError(ValueError):
    """Bad clustering input (too few spectra, zero vectors, ...)."""


def cosine_dissimilarity(a, b) -> float:
    """1 - cos(a, b); 0 for parallel vectors, 1 for orthogonal, up to 2."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ClusteringError("vectors must have equal length")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ClusteringError("cosine dissimilarity undefined for zero vectors")
    return float(1.0 - (a @ b) / (na * nb))


def _cosine_similarity_matrix(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ClusteringError("cosine similarity undefined for zero vectors")
    G = (X / norms[:, None]) @ (X / norms[:, None]).T
    return np.clip(G, -1.0, 1.0)


def _kmeans(X: np.ndarray, k: int, rng: np.random.Generator, restarts: int = 10, iters: int = 100):
    """Plain k-means with k-means++ seeding; returns labels of the best restart."""
    n = X.shape[0]
    best_labels, best_inertia = None, np.inf
    for _restart in range(restarts):
        centers = np.empty((k, X.shape[1]))
        centers[0] = X[rng.integers(n)]
        d2 = np.sum((X - centers[0]) ** 2, axis=1)
        for j in range(1, k):
            total = d2.sum()
            if total <= 0:
                centers[j] = X[rng.integers(n)]
            else:
                centers[j] = X[rng.choice(n, p=d2 / total)]
            d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
        labels = np.full(n, -1, dtype=int)
        for _sweep in range(iters):
            dists = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = dists.argmin(axis=1)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for j in range(k):
                members = X[labels == j]
                if members.shape[0]:
                    centers[j] = members.mean(axis=0)
        dists = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        inertia = float(dists[np.arange(n), labels].sum())
        if inertia < best_inertia:
            best_labels, best_inertia = labels.copy(), inertia
    return best_labels


def spectral_cluster(spectra, k: int = 3, rng: np.random.Generator | None = None) -> np.ndarray:
    """Hard cluster labels (arbitrary up to permutation) for the spectra."""
    X = np.asarray([np.asarray(s, dtype=float) for s in spectra])
    if X.ndim != 2 or X.shape[0] < k:
        raise ClusteringError(f"need at least {k} spectra, got {X.shape[0] if X.ndim == 2 else 0}")
    rng = rng or np.random.default_rng(0)
    affinity = np.maximum(_cosine_similarity_matrix(X), 0.0)
    degree = affinity.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(degree, 1e-12))
    laplacian = np.eye(X.shape[0]) - inv_sqrt[:, None] * affinity * inv_sqrt[None, :]
    eigvals, eigvecs = np.linalg.eigh(laplacian)
    embedding = eigvecs[:, :k]
    row_norms = np.linalg.norm(embedding, axis=1)
    embedding = embedding / np.maximum(row_norms, 1e-12)[:, None]
    return _kmeans(embedding, k, rng)


def align_labels(labels, compositions, n_regions: int = 3) -> PhaseLabelSet:
    """Relabel clusters so the region index increases with mean composition.

    Ties in mean composition give the lower original cluster index the lower
    region id. Output labels are one-hot.
    """
    labels = np.asarray(labels, dtype=int)
    xs = np.asarray(compositions, dtype=float)
    if labels.size != xs.size:
        raise ClusteringError("one label per composition required")
    present = sorted(set(labels.tolist()))
    means = [(float(xs[labels == c].mean()), c) for c in present]
    order = sorted(means)  # (mean, original-index): ties fall to lower index
    remap = {orig: new for new, (_, orig) in enumerate(order)}
    return PhaseLabelSet.one_hot(xs, np.asarray([remap[c] for c in labels]), n_regions)
