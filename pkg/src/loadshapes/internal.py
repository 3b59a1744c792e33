"""Internal clustering validity: silhouette, DBI, MIA and the combined index.

All indices are computed in the space the clustering ran in (the normalized
vectors) with centroids taken as member means.  Per pre-bin the three
indices combine into ``Ix = DBI * MIA / Silhouette``, which is undefined
when any of the three is zero or negative; the experiment-level score is
``CI = ln( sum_b Ix_b * n_b / n )``, undefined when any bin's Ix is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import assign_nearest, cluster_dist_sums
from .errors import CoincidentCentroidsError, MetricError

#: Above this many rows the silhouette switches to a seeded uniform subsample.
SILHOUETTE_MAX_EXACT = 20000


def _compact_labels(labels):
    labels = np.asarray(labels)
    present, compact = np.unique(labels, return_inverse=True)
    return compact.astype(np.intp), len(present)


def silhouette_index(data, labels, max_exact=SILHOUETTE_MAX_EXACT, seed=0):
    """Mean silhouette width over all rows.

    For row i, ``a`` is the mean distance to its own cluster's other members
    and ``b`` the smallest mean distance to any other cluster; the width is
    ``(b - a) / max(a, b)``.  Singleton rows score 0, as does a row with
    ``max(a, b) == 0``.  Beyond ``max_exact`` rows a seeded subsample of
    that size is scored instead of the full set.
    """
    data = np.asarray(data, dtype=np.float64)
    labels, k = _compact_labels(labels)
    if k < 2:
        raise MetricError(f"silhouette needs >= 2 clusters, got {k}")
    n = len(data)
    if n > max_exact:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(n, size=max_exact, replace=False))
        data, labels = data[pick], labels[pick]
        labels, k = _compact_labels(labels)
        if k < 2:
            raise MetricError("silhouette subsample collapsed to one cluster")
        n = max_exact
    sums, counts = cluster_dist_sums(data, labels, k)
    own_count = counts[labels]
    own_sum = sums[np.arange(n), labels]
    widths = np.zeros(n)
    multi = own_count > 1
    a = np.zeros(n)
    a[multi] = own_sum[multi] / (own_count[multi] - 1)
    means = sums / counts[None, :]
    means[np.arange(n), labels] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    ok = multi & (denom > 0)
    widths[ok] = (b[ok] - a[ok]) / denom[ok]
    return float(widths.mean())


def _centroids_and_sizes(data, labels, k):
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    centroids = np.zeros((k, data.shape[1]))
    for d in range(data.shape[1]):
        centroids[:, d] = np.bincount(labels, weights=data[:, d], minlength=k)
    centroids /= counts[:, None]
    return centroids, counts


def dbi(data, labels):
    """Davies-Bouldin index.

    Dispersion of a cluster is the mean distance from its centroid to its
    members; the index averages, over clusters, the worst ratio
    ``(disp_i + disp_j) / dist(c_i, c_j)``.  Coincident centroids make the
    ratio unbounded and raise :class:`CoincidentCentroidsError`.
    """
    data = np.asarray(data, dtype=np.float64)
    labels, k = _compact_labels(labels)
    if k < 2:
        raise MetricError(f"DBI needs >= 2 clusters, got {k}")
    centroids, counts = _centroids_and_sizes(data, labels, k)
    dists = np.linalg.norm(data - centroids[labels], axis=1)
    disp = np.bincount(labels, weights=dists, minlength=k) / counts
    diff = centroids[:, None, :] - centroids[None, :, :]
    sep = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0):
        raise CoincidentCentroidsError("two cluster centroids coincide")
    ratio = (disp[:, None] + disp[None, :]) / np.where(off, sep, np.inf)
    return float(ratio.max(axis=1).mean())


def mia(data, labels):
    """Mean index adequacy: RMS over clusters of the centroid-member RMS distance."""
    data = np.asarray(data, dtype=np.float64)
    labels, k = _compact_labels(labels)
    centroids, counts = _centroids_and_sizes(data, labels, k)
    sq = np.einsum("ij,ij->i", data - centroids[labels], data - centroids[labels])
    mean_sq = np.bincount(labels, weights=sq, minlength=k) / counts
    return float(math.sqrt(mean_sq.mean()))


def ix_index(dbi_value, mia_value, silhouette_value) -> Optional[float]:
    """Combined per-bin index ``DBI * MIA / Silhouette``.

    Undefined (None) when any input is missing, zero or negative.
    """
    for v in (dbi_value, mia_value, silhouette_value):
        if v is None or v <= 0:
            return None
    return dbi_value * mia_value / silhouette_value


def ci_score(ix_values, bin_sizes) -> Optional[float]:
    """``ln`` of the size-weighted mean Ix across bins; None if any Ix is."""
    if len(ix_values) != len(bin_sizes) or not ix_values:
        raise MetricError("ci_score needs one Ix per non-empty bin")
    if any(v is None for v in ix_values):
        return None
    sizes = np.asarray(bin_sizes, dtype=np.float64)
    weighted = float(np.dot(ix_values, sizes) / sizes.sum())
    if weighted <= 0:
        return None
    return math.log(weighted)


@dataclass
class BinInternal:
    bin_id: int
    n_rows: int
    n_clusters: int
    dbi: Optional[float]
    mia: Optional[float]
    silhouette: Optional[float]
    ix: Optional[float]
    note: str = ""


@dataclass
class InternalScores:
    per_bin: list
    ci: Optional[float]


def evaluate_internal(prep, model, max_exact=SILHOUETTE_MAX_EXACT) -> InternalScores:
    """Score every bin of a fitted model and combine into the CI.

    ``prep`` is the :class:`~loadshapes.cluster.PreparedData` the model was
    fitted from; indices run on its normalized rows.  The silhouette
    subsample seed follows the experiment seed.
    """
    per_bin = []
    ix_values = []
    sizes = []
    for bin_model in model.bins:
        members = np.flatnonzero(prep.bins.labels == bin_model.bin_id)
        data = prep.norm[members]
        local = model.labels[prep.row_index[members]] - bin_model.offset
        n_clusters = len(np.unique(local))
        note = ""
        sil = dbi_value = None
        mia_value = mia(data, local)
        try:
            sil = silhouette_index(
                data, local, max_exact=max_exact, seed=model.config.seed
            )
        except MetricError as exc:
            note = str(exc)
        try:
            dbi_value = dbi(data, local)
        except (MetricError, CoincidentCentroidsError) as exc:
            note = note or str(exc)
        ix = ix_index(dbi_value, mia_value, sil)
        per_bin.append(
            BinInternal(
                bin_id=bin_model.bin_id,
                n_rows=len(members),
                n_clusters=n_clusters,
                dbi=dbi_value,
                mia=mia_value,
                silhouette=sil,
                ix=ix,
                note=note,
            )
        )
        ix_values.append(ix)
        sizes.append(len(members))
    ci = ci_score(ix_values, sizes) if per_bin else None
    return InternalScores(per_bin=per_bin, ci=ci)
