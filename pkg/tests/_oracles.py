"""Brute-force reference implementations used to validate the fast code.

Everything here is deliberately written with plain Python loops and the
math module only, so a bug in the numpy/compiled implementations cannot
hide in a shared code path.
"""

import math
from collections import Counter


def _dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def silhouette_bf(data, labels):
    data = [list(row) for row in data]
    labels = list(labels)
    n = len(data)
    clusters = sorted(set(labels))
    widths = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            widths.append(0.0)
            continue
        a = sum(_dist(data[i], data[j]) for j in own) / len(own)
        b = math.inf
        for c in clusters:
            if c == labels[i]:
                continue
            members = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(_dist(data[i], data[j]) for j in members) / len(members))
        m = max(a, b)
        widths.append(0.0 if m == 0 else (b - a) / m)
    return sum(widths) / n


def _centroids_bf(data, labels):
    data = [list(row) for row in data]
    out = {}
    for c in sorted(set(labels)):
        members = [data[i] for i in range(len(data)) if labels[i] == c]
        out[c] = [sum(col) / len(members) for col in zip(*members)]
    return out


def dbi_bf(data, labels):
    cents = _centroids_bf(data, labels)
    clusters = sorted(cents)
    disp = {}
    for c in clusters:
        members = [data[i] for i in range(len(data)) if labels[i] == c]
        disp[c] = sum(_dist(m, cents[c]) for m in members) / len(members)
    worst = []
    for ci in clusters:
        ratios = [
            (disp[ci] + disp[cj]) / _dist(cents[ci], cents[cj])
            for cj in clusters
            if cj != ci
        ]
        worst.append(max(ratios))
    return sum(worst) / len(clusters)


def mia_bf(data, labels):
    cents = _centroids_bf(data, labels)
    clusters = sorted(cents)
    total = 0.0
    for c in clusters:
        members = [data[i] for i in range(len(data)) if labels[i] == c]
        total += sum(_dist(m, cents[c]) ** 2 for m in members) / len(members)
    return math.sqrt(total / len(clusters))


def entropy_bf(member_values, dataset_values):
    """Entropy (bits) of a cluster footprint, from raw value lists."""
    dataset_counts = Counter(dataset_values)
    member_counts = Counter(member_values)
    q = {
        v: member_counts.get(v, 0) / dataset_counts[v]
        for v in dataset_counts
    }
    total = sum(q.values())
    if total == 0:
        return 0.0
    s = 0.0
    for value in q.values():
        p = value / total
        if p > 0:
            s -= p * math.log2(p)
    return s


def percentile_bin_bf(value, population):
    """1..100 equal-frequency bin; ties share the lower-rank bin."""
    less = sum(1 for v in population if v < value)
    return less * 100 // len(population) + 1
