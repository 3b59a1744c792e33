"""Clustering engines operating on bare (n, d) arrays.

Three engines: Lloyd k-means with k-means++ seeding, a batch-trained
self-organising map on a square grid, and the two-stage variant that runs
k-means over the trained map's code vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kernels import assign_nearest

KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6
SOM_EPOCHS = 10


@dataclass
class KMeansResult:
    centroids: np.ndarray  # (k, d)
    labels: np.ndarray  # (n,)
    inertia: float
    n_iter: int
    inertia_history: list


@dataclass
class SomResult:
    codebook: np.ndarray  # (s*s, d)
    bmu: np.ndarray  # (n,) best-matching unit per row
    grid_size: int


@dataclass
class SomKMeansResult:
    som: SomResult
    kmeans: KMeansResult
    labels: np.ndarray  # (n,) cluster of each row's BMU


def _plus_plus_init(x, k, rng):
    """k-means++ seeding: spread initial points by squared-distance weighting."""
    n = x.shape[0]
    chosen = np.empty((k, x.shape[1]))
    idx = int(rng.integers(n))
    chosen[0] = x[idx]
    d2 = np.einsum("ij,ij->i", x - chosen[0], x - chosen[0])
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        chosen[j] = x[idx]
        cand = np.einsum("ij,ij->i", x - chosen[j], x - chosen[j])
        np.minimum(d2, cand, out=d2)
    return chosen


def fit_kmeans(x, k, seed=0, n_init=1, max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL):
    """Lloyd's algorithm under Euclidean distance.

    Stops when assignments are stable, the relative inertia drop falls below
    ``tol``, or after ``max_iter`` sweeps.  A cluster left empty after an
    assignment step is relocated to the point farthest from its centroid.
    With ``n_init > 1`` the run with the lowest inertia wins (first on ties).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > n:
        raise ConfigError(f"k={k} exceeds the {n} available rows")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        result = _kmeans_single(x, k, rng, max_iter, tol)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def _kmeans_single(x, k, rng, max_iter, tol):
    centroids = _plus_plus_init(x, k, rng)
    labels = np.full(x.shape[0], -1, dtype=np.intp)
    inertia = np.inf
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_labels, sqdist = assign_nearest(x, centroids)
        new_labels, sqdist, centroids = _repair_empty(
            x, new_labels, sqdist, centroids, k
        )
        new_inertia = float(sqdist.sum())
        history.append(new_inertia)
        stable = bool(np.array_equal(new_labels, labels))
        labels = new_labels
        converged = stable or (
            np.isfinite(inertia)
            and inertia > 0
            and (inertia - new_inertia) / inertia < tol
        )
        inertia = new_inertia
        centroids = _member_means(x, labels, k, centroids)
        if converged:
            break
    # Re-assign against the final centroids so every label is its row's
    # nearest centroid.
    labels, sqdist = assign_nearest(x, centroids)
    labels, sqdist, centroids = _repair_empty(x, labels, sqdist, centroids, k)
    inertia = float(sqdist.sum())
    history.append(inertia)
    return KMeansResult(centroids, labels, inertia, n_iter, history)


def _repair_empty(x, labels, sqdist, centroids, k):
    # Relocating a centroid can in turn empty another cluster, so repeat;
    # with k <= n distinct relocation targets this settles within k rounds.
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if len(empties) == 0:
            break
        centroids = centroids.copy()
        sqdist = sqdist.copy()
        for cluster in empties:
            far = int(np.argmax(sqdist))
            centroids[cluster] = x[far]
            sqdist[far] = 0.0
        labels, sqdist = assign_nearest(x, centroids)
    return labels, sqdist, centroids


def _member_means(x, labels, k, fallback):
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    sums = np.zeros((k, x.shape[1]))
    for d in range(x.shape[1]):
        sums[:, d] = np.bincount(labels, weights=x[:, d], minlength=k)
    out = fallback.copy()
    nonempty = counts > 0
    out[nonempty] = sums[nonempty] / counts[nonempty, None]
    return out


def fit_som(x, s, seed=0, epochs=SOM_EPOCHS):
    """Batch-train a self-organising map on an s x s grid.

    The Gaussian neighbourhood radius shrinks linearly from ``s / 2`` to 1
    over the epochs; the code vectors start from a k-means++-style sample of
    the data so the map covers the data's spread deterministically.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if s < 1:
        raise ConfigError(f"grid size must be >= 1, got {s}")
    k = s * s
    if k > x.shape[0]:
        raise ConfigError(f"grid {s}x{s} has more units than the {x.shape[0]} rows")
    rng = np.random.default_rng(seed)
    codebook = _plus_plus_init(x, k, rng)
    units = np.arange(k)
    pos = np.stack([units // s, units % s], axis=1).astype(np.float64)
    grid_d2 = np.einsum(
        "ijk,ijk->ij", pos[:, None] - pos[None, :], pos[:, None] - pos[None, :]
    )
    sigma_start = max(s / 2.0, 1.0)
    for epoch in range(epochs):
        frac = epoch / (epochs - 1) if epochs > 1 else 1.0
        sigma = sigma_start + (1.0 - sigma_start) * frac
        h = np.exp(-grid_d2 / (2.0 * sigma * sigma))
        bmu, _ = assign_nearest(x, codebook)
        counts = np.bincount(bmu, minlength=k).astype(np.float64)
        sums = np.zeros((k, x.shape[1]))
        for d in range(x.shape[1]):
            sums[:, d] = np.bincount(bmu, weights=x[:, d], minlength=k)
        denom = h @ counts
        codebook = (h @ sums) / denom[:, None]
    bmu, _ = assign_nearest(x, codebook)
    return SomResult(codebook, bmu, s)


def fit_som_kmeans(x, s, m, seed=0, epochs=SOM_EPOCHS):
    """SOM front end, k-means over its code vectors, labels via each row's BMU."""
    if s * s <= m:
        raise ConfigError(f"grid {s}x{s} must have more units than m={m} clusters")
    som = fit_som(x, s, seed=seed, epochs=epochs)
    km = fit_kmeans(som.codebook, m, seed=seed)
    return SomKMeansResult(som, km, km.labels[som.bmu])
