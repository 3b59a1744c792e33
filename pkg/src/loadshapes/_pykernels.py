"""Pure-numpy implementations of the distance kernels.

Fallback for :mod:`loadshapes.kernels` when the compiled extension is
unavailable.  Chunked so the (rows x centroids) work set stays cache-sized.
"""

import numpy as np

BACKEND = "python"

_CHUNK = 2048


def assign_nearest(x, centroids):
    """Nearest centroid per row under squared Euclidean distance.

    Returns ``(labels, sqdist)``; ties go to the lowest centroid index
    (argmin already does, since scanning order is index order).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    c = np.ascontiguousarray(centroids, dtype=np.float64)
    n = x.shape[0]
    labels = np.empty(n, dtype=np.intp)
    sqdist = np.empty(n, dtype=np.float64)
    c_sq = np.einsum("ij,ij->i", c, c)
    for start in range(0, n, _CHUNK):
        chunk = x[start : start + _CHUNK]
        d2 = chunk @ c.T
        d2 *= -2.0
        d2 += c_sq
        d2 += np.einsum("ij,ij->i", chunk, chunk)[:, None]
        idx = np.argmin(d2, axis=1)
        labels[start : start + _CHUNK] = idx
        # Recompute the winning distance from direct differences; the
        # expansion's rounding residual matters when a row sits exactly
        # on its centroid.
        diff = chunk - c[idx]
        sqdist[start : start + _CHUNK] = np.einsum("ij,ij->i", diff, diff)
    return labels, sqdist


def cluster_dist_sums(x, labels, k):
    """Per-row sums of Euclidean distances to each cluster's members.

    Returns ``(sums, counts)`` where ``sums[i, c]`` is the sum of distances
    from row ``i`` to every row with label ``c`` (row ``i`` included) and
    ``counts[c]`` is the cluster size.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    n = x.shape[0]
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    sums = np.empty((n, k))
    x_sq = np.einsum("ij,ij->i", x, x)
    for start in range(0, n, _CHUNK):
        chunk = x[start : start + _CHUNK]
        d2 = chunk @ x.T
        d2 *= -2.0
        d2 += x_sq
        d2 += x_sq[start : start + _CHUNK, None]
        np.maximum(d2, 0.0, out=d2)
        # The expansion leaves a tiny residual on the diagonal that sqrt
        # would blow up to ~1e-7; the self-distance is exactly zero.
        rows = np.arange(len(chunk))
        d2[rows, start + rows] = 0.0
        np.sqrt(d2, out=d2)
        sums[start : start + _CHUNK] = d2 @ onehot
    return sums, counts
