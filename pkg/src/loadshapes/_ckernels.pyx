# Hot distance kernels: nearest-centroid assignment and pairwise
# cluster-distance accumulation.  Same contracts as _pykernels.

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "c"


def assign_nearest(x, centroids):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(centroids, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], k = cv.shape[0], d = xv.shape[1]
    labels_arr = np.empty(n, dtype=np.intp)
    sqdist_arr = np.empty(n, dtype=np.float64)
    cdef cnp.intp_t[::1] labels = labels_arr
    cdef double[::1] sqdist = sqdist_arr
    cdef Py_ssize_t i, j, t, best
    cdef double acc, diff, best_d
    with nogil:
        for i in range(n):
            best = 0
            best_d = -1.0
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = xv[i, t] - cv[j, t]
                    acc += diff * diff
                if best_d < 0.0 or acc < best_d:
                    best_d = acc
                    best = j
            labels[i] = best
            sqdist[i] = best_d
    return labels_arr, sqdist_arr


def cluster_dist_sums(x, labels, k):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.intp_t[::1] lv = np.ascontiguousarray(labels, dtype=np.intp)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], kk = k
    sums_arr = np.zeros((n, kk), dtype=np.float64)
    counts_arr = np.zeros(kk, dtype=np.float64)
    cdef double[:, ::1] sums = sums_arr
    cdef double[::1] counts = counts_arr
    cdef Py_ssize_t i, j, t
    cdef double acc, diff, dist
    with nogil:
        for i in range(n):
            counts[lv[i]] += 1.0
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for t in range(d):
                    diff = xv[i, t] - xv[j, t]
                    acc += diff * diff
                dist = sqrt(acc)
                sums[i, lv[j]] += dist
                sums[j, lv[i]] += dist
    return sums_arr, counts_arr
