import math

import numpy as np
import pytest

from loadshapes.cluster import ExperimentConfig, cluster_prepared, prepare
from loadshapes.errors import CoincidentCentroidsError, MetricError
from loadshapes.internal import (
    ci_score,
    dbi,
    evaluate_internal,
    ix_index,
    mia,
    silhouette_index,
)

from _oracles import dbi_bf, mia_bf, silhouette_bf


def _pad(points):
    """Embed 1-d or 2-d hand points into 24-dim vectors (zeros elsewhere)."""
    points = np.asarray(points, dtype=np.float64)
    out = np.zeros((len(points), 24))
    out[:, : points.shape[1]] = points
    return out


def test_silhouette_two_tight_pairs():
    # Two far-apart pairs: widths are 1 - 1/9 -> mean (approximately) 0.888...
    data = _pad([[0.0], [1.0], [9.0], [10.0]])
    labels = [0, 0, 1, 1]
    value = silhouette_index(data, labels)
    assert value == pytest.approx(silhouette_bf(data, labels), abs=1e-12)
    assert value > 0.85


def test_silhouette_identical_points_zero():
    data = np.zeros((6, 24))
    labels = [0, 0, 0, 1, 1, 1]
    # a = b = 0 for every point -> width 0 by convention.
    assert silhouette_index(data, labels) == 0.0


def test_silhouette_singletons_score_zero():
    data = _pad([[0.0], [5.0]])
    assert silhouette_index(data, [0, 1]) == 0.0


def test_silhouette_single_cluster_raises():
    with pytest.raises(MetricError):
        silhouette_index(np.ones((5, 24)), [0] * 5)


def test_silhouette_six_point_hand_case():
    data = _pad([[0, 0], [0, 1], [1, 0], [5, 5], [5, 6], [6, 5]])
    labels = [0, 0, 0, 1, 1, 1]
    assert silhouette_index(data, labels) == pytest.approx(
        silhouette_bf(data, labels), abs=1e-12
    )


def test_silhouette_subsample_is_seeded():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(500, 24))
    labels = rng.integers(0, 3, size=500)
    a = silhouette_index(data, labels, max_exact=100, seed=7)
    b = silhouette_index(data, labels, max_exact=100, seed=7)
    c = silhouette_index(data, labels, max_exact=100, seed=8)
    assert a == b
    assert a != c  # different subsample, almost surely different value
    full = silhouette_index(data, labels)
    assert abs(a - full) < 0.2  # subsample approximates the full score


def test_dbi_hand_case():
    # Two clusters at means 0.5 and 10.5, dispersions 0.5 each:
    # DBI = (0.5 + 0.5) / 10 = 0.1 for both clusters.
    data = _pad([[0.0], [1.0], [10.0], [11.0]])
    value = dbi(data, [0, 0, 1, 1])
    assert value == pytest.approx(0.1, abs=1e-12)
    assert value == pytest.approx(dbi_bf(data, [0, 0, 1, 1]), abs=1e-12)


def test_dbi_worst_neighbour_hand_case():
    # Three clusters on a line; the middle cluster's worst ratio comes from
    # its nearer neighbour.
    data = _pad([[0.0], [1.0], [4.0], [5.0], [20.0], [21.0]])
    labels = [0, 0, 1, 1, 2, 2]
    assert dbi(data, labels) == pytest.approx(dbi_bf(data, labels), abs=1e-12)


def test_dbi_singleton_cluster_disperses_zero():
    data = _pad([[0.0], [4.0], [4.5]])
    labels = [0, 1, 1]
    assert dbi(data, labels) == pytest.approx(dbi_bf(data, labels), abs=1e-12)


def test_dbi_coincident_centroids_raise():
    data = _pad([[0.0], [2.0], [1.0], [1.0]])
    # Clusters {0, 2} and {1, 1} share the centroid 1.0.
    with pytest.raises(CoincidentCentroidsError):
        dbi(data, [0, 0, 1, 1])


def test_dbi_single_cluster_raises():
    with pytest.raises(MetricError):
        dbi(np.ones((4, 24)), [0] * 4)


def test_mia_hand_cases():
    # Pair at distance 2 around its centroid: each member 1 away -> MIA 1.
    data = _pad([[0.0], [2.0]])
    assert mia(data, [0, 0]) == pytest.approx(1.0, abs=1e-12)
    # Perfect cluster: MIA 0.
    assert mia(np.ones((5, 24)), [0] * 5) == pytest.approx(0.0, abs=1e-15)


def test_mia_is_rms_over_clusters():
    data = _pad([[0.0], [2.0], [10.0], [14.0]])
    labels = [0, 0, 1, 1]
    # Cluster dispersions (RMS): 1 and 2 -> sqrt((1 + 4) / 2).
    assert mia(data, labels) == pytest.approx(math.sqrt(2.5), abs=1e-12)
    assert mia(data, labels) == pytest.approx(mia_bf(data, labels), abs=1e-12)


def test_indices_scale_with_data():
    rng = np.random.default_rng(1)
    data = rng.uniform(0, 1, size=(60, 24))
    labels = rng.integers(0, 3, size=60)
    # Silhouette is scale-invariant; MIA scales linearly.
    assert silhouette_index(data * 3, labels) == pytest.approx(
        silhouette_index(data, labels), abs=1e-9
    )
    assert mia(data * 3, labels) == pytest.approx(3 * mia(data, labels), rel=1e-9)


def test_random_partitions_match_oracles():
    rng = np.random.default_rng(42)
    for _ in range(5):
        n = int(rng.integers(10, 40))
        k = int(rng.integers(2, 5))
        data = rng.normal(size=(n, 24))
        labels = rng.integers(0, k, size=n)
        while len(set(labels)) < k:
            labels = rng.integers(0, k, size=n)
        assert silhouette_index(data, labels) == pytest.approx(
            silhouette_bf(data, labels), abs=1e-10
        )
        assert dbi(data, labels) == pytest.approx(dbi_bf(data, labels), abs=1e-10)
        assert mia(data, labels) == pytest.approx(mia_bf(data, labels), abs=1e-10)


def test_ix_index_definition():
    assert ix_index(2.0, 3.0, 0.5) == pytest.approx(12.0, abs=1e-15)
    assert ix_index(0.0, 3.0, 0.5) is None
    assert ix_index(2.0, 3.0, -0.1) is None
    assert ix_index(2.0, 3.0, 0.0) is None
    assert ix_index(None, 3.0, 0.5) is None


def test_ci_score_identities():
    # Ix = 1 in every bin -> CI = 0 exactly.
    assert ci_score([1.0, 1.0], [10, 30]) == 0.0
    # Equal bins with Ix 3 and 4 -> ln 3.5.
    assert ci_score([3.0, 4.0], [50, 50]) == pytest.approx(
        math.log(3.5), abs=1e-15
    )
    # Any undefined bin poisons the experiment score.
    assert ci_score([3.0, None], [50, 50]) is None


def test_ci_score_weighting():
    # Weighted mean: (2*10 + 6*30) / 40 = 5 -> ln 5.
    assert ci_score([2.0, 6.0], [10, 30]) == pytest.approx(math.log(5.0), abs=1e-12)
    with pytest.raises(MetricError):
        ci_score([], [])
    with pytest.raises(MetricError):
        ci_score([1.0], [10, 20])


def test_ci_monotone_in_ix():
    sizes = [40, 60]
    low = ci_score([0.5, 0.8], sizes)
    high = ci_score([0.6, 0.9], sizes)
    assert low < high


def test_evaluate_internal_on_pipeline(planted):
    sub = planted.dataset.select(np.arange(0, 18000, 30))
    config = ExperimentConfig(
        algorithm="kmeans", m=4, normalization="unit",
        prebinning="integral_kmeans", n_bins=3, seed=5,
    )
    prep = prepare(sub, config)
    model = cluster_prepared(prep)
    scores = evaluate_internal(prep, model)
    assert len(scores.per_bin) == 3
    for bin_scores in scores.per_bin:
        assert bin_scores.ix is not None and bin_scores.ix > 0
        assert 0 < bin_scores.silhouette <= 1
    assert scores.ci is not None
    # CI equals the ln of the size-weighted Ix mean, recomputed by hand.
    num = sum(b.ix * b.n_rows for b in scores.per_bin)
    den = sum(b.n_rows for b in scores.per_bin)
    assert scores.ci == pytest.approx(math.log(num / den), abs=1e-12)
