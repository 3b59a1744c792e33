import datetime as dt

import numpy as np
import pytest

from loadshapes.cluster import (
    ClusterModel,
    ExperimentConfig,
    build_rdlps,
    cluster_prepared,
    prepare,
    rdlps_from_labels,
    run_experiment,
)
from loadshapes.data import ProfileDataset
from loadshapes.errors import ConfigError


def _tiny_dataset():
    rng = np.random.default_rng(7)
    low = rng.uniform(0.5, 1.0, (30, 24))
    high = rng.uniform(8.0, 10.0, (30, 24))
    values = np.vstack([low, high])
    ids = [f"h{i:02d}" for i in range(60)]
    dates = [dt.date(2013, 6, 1 + i % 10) for i in range(60)]
    return ProfileDataset(ids, dates, values)


def test_config_validation():
    with pytest.raises(ConfigError, match="algorithm"):
        ExperimentConfig(algorithm="dbscan", m=3)
    with pytest.raises(ConfigError, match="normalization"):
        ExperimentConfig(algorithm="kmeans", m=3, normalization="log")
    with pytest.raises(ConfigError, match="m >= 1"):
        ExperimentConfig(algorithm="kmeans")
    with pytest.raises(ConfigError, match="s >= 1"):
        ExperimentConfig(algorithm="som")
    with pytest.raises(ConfigError, match="s\\*s > m"):
        ExperimentConfig(algorithm="som_kmeans", s=2, m=4)
    with pytest.raises(ConfigError, match="prebinning"):
        ExperimentConfig(algorithm="kmeans", m=2, prebinning="quantile")


def test_slug_and_explicit_name():
    cfg = ExperimentConfig(algorithm="kmeans", m=8, normalization="unit")
    assert cfg.name == "kmeans_m8_unit_unbinned_keepz"
    cfg2 = ExperimentConfig(
        algorithm="som_kmeans", s=10, m=12, prebinning="amc", keep_zeros=False
    )
    assert cfg2.name == "som_kmeans_m12_s10_unit_amc8_dropz"
    named = ExperimentConfig(algorithm="kmeans", m=2, name="exp1")
    assert named.name == "exp1"


def test_config_dict_roundtrip():
    cfg = ExperimentConfig(
        algorithm="som_kmeans", s=5, m=6, normalization="zero_one",
        prebinning="integral_kmeans", n_bins=3, seed=42, n_init=2,
    )
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    with pytest.raises(ConfigError, match="unknown experiment keys"):
        ExperimentConfig.from_dict({"algorithm": "kmeans", "m": 2, "foo": 1})
    with pytest.raises(ConfigError, match="algorithm"):
        ExperimentConfig.from_dict({"m": 2})


def test_prepare_unbinned_unit():
    ds = _tiny_dataset()
    cfg = ExperimentConfig(algorithm="kmeans", m=2, normalization="unit")
    prep = prepare(ds, cfg)
    assert prep.bins.n_bins == 1
    assert len(prep.row_index) == len(ds)
    norms = np.linalg.norm(prep.norm, axis=1)
    assert np.allclose(norms, 1.0)


def test_prepare_drop_zeros_reindexes():
    values = np.vstack([np.ones((5, 24)), np.zeros((2, 24)), np.ones((3, 24))])
    ds = ProfileDataset(
        [f"h{i}" for i in range(10)],
        [dt.date(2013, 6, 1)] * 10,
        values,
    )
    cfg = ExperimentConfig(algorithm="kmeans", m=1, keep_zeros=False)
    prep = prepare(ds, cfg)
    assert prep.removed_zero == 2
    assert list(prep.row_index) == [0, 1, 2, 3, 4, 7, 8, 9]
    model = cluster_prepared(prep)
    assert list(model.labels[5:7]) == [-1, -1]
    assert model.n_rows_clustered == 8


def test_keep_zeros_zero_policy():
    values = np.vstack([np.ones((5, 24)), np.zeros((2, 24))])
    ds = ProfileDataset(
        [f"h{i}" for i in range(7)], [dt.date(2013, 6, 1)] * 7, values
    )
    cfg = ExperimentConfig(algorithm="kmeans", m=2, normalization="unit")
    prep = prepare(ds, cfg)
    # zero rows stay, normalized to zero vectors
    assert prep.removed_zero == 0 and prep.removed_degenerate == 0
    assert np.allclose(prep.norm[5:], 0.0)
    model = cluster_prepared(prep)
    assert model.n_rows_clustered == 7
    # the two zero rows end up together
    assert model.labels[5] == model.labels[6]


def test_labels_cover_all_prepared_rows():
    ds = _tiny_dataset()
    cfg = ExperimentConfig(
        algorithm="kmeans", m=2, prebinning="integral_kmeans", n_bins=2, seed=3
    )
    model = run_experiment(ds, cfg)
    assert model.n_rows_clustered == len(ds)
    assert model.labels.min() >= 0
    # two bins x two clusters = ids within [0, 4)
    assert model.labels.max() < 4
    assert model.n_slots_total == 4


def test_bin_offsets_are_disjoint():
    ds = _tiny_dataset()
    cfg = ExperimentConfig(
        algorithm="kmeans", m=3, prebinning="integral_kmeans", n_bins=2, seed=5
    )
    model = run_experiment(ds, cfg)
    seen = set()
    for b in model.bins:
        ids = set(range(b.offset, b.offset + b.n_slots))
        assert not (ids & seen)
        seen |= ids
    for cid in model.cluster_ids():
        b = model.bin_of_cluster(int(cid))
        members = np.flatnonzero(model.labels == cid)
        # every member of the cluster sits in that bin's value range
        assert len(members) > 0
        assert b in {bm.bin_id for bm in model.bins}


def test_bin_of_cluster_out_of_range():
    ds = _tiny_dataset()
    model = run_experiment(ds, ExperimentConfig(algorithm="kmeans", m=2))
    with pytest.raises(ConfigError, match="out of range"):
        model.bin_of_cluster(99)


def test_two_level_structure_recovered():
    # Binning separates amplitude; within-bin k-means then splits shape.
    ds = _tiny_dataset()
    cfg = ExperimentConfig(
        algorithm="kmeans", m=1, prebinning="integral_kmeans", n_bins=2, seed=0
    )
    model = run_experiment(ds, cfg)
    # m=1 per bin: labels reproduce the binning exactly
    assert len(np.unique(model.labels[:30])) == 1
    assert len(np.unique(model.labels[30:])) == 1
    assert model.labels[0] != model.labels[59]


def test_determinism_same_seed():
    ds = _tiny_dataset()
    cfg = ExperimentConfig(
        algorithm="som_kmeans", s=4, m=3, seed=11, prebinning="integral_kmeans",
        n_bins=2,
    )
    a = run_experiment(ds, cfg)
    b = run_experiment(ds, cfg)
    assert np.array_equal(a.labels, b.labels)
    for ba, bb in zip(a.bins, b.bins):
        assert np.allclose(ba.centroids, bb.centroids)


def test_engine_error_names_bin():
    # 60 rows in ~2 bins; m=40 exceeds one bin's row count.
    ds = _tiny_dataset()
    cfg = ExperimentConfig(
        algorithm="kmeans", m=40, prebinning="integral_kmeans", n_bins=2, seed=1
    )
    with pytest.raises(ConfigError, match=r"bin \d"):
        run_experiment(ds, cfg)


def test_som_labels_use_grid_slots():
    ds = _tiny_dataset()
    cfg = ExperimentConfig(algorithm="som", s=3, seed=2)
    model = run_experiment(ds, cfg)
    assert model.n_slots_total == 9
    assert model.labels.max() < 9


def test_rdlps_raw_space_means():
    ds = _tiny_dataset()
    cfg = ExperimentConfig(algorithm="kmeans", m=2, normalization="unit", seed=4)
    model = run_experiment(ds, cfg)
    rdlps = build_rdlps(model, ds)
    assert sum(r.member_count for r in rdlps) == len(ds)
    for r in rdlps:
        members = np.flatnonzero(model.labels == r.cluster_id)
        expected = ds.values[members].mean(axis=0)
        np.testing.assert_allclose(r.values, expected, atol=1e-12)
    ids = [r.cluster_id for r in rdlps]
    assert ids == sorted(ids)


def test_rdlps_skip_unclustered_rows():
    values = np.vstack([np.full((4, 24), 2.0), np.full((2, 24), 9.0)])
    ds = ProfileDataset(
        [f"h{i}" for i in range(6)], [dt.date(2013, 6, 1)] * 6, values
    )
    labels = np.array([0, 0, 0, 0, -1, -1])
    rdlps = rdlps_from_labels(labels, ds)
    assert len(rdlps) == 1
    np.testing.assert_allclose(rdlps[0].values, np.full(24, 2.0))
    assert rdlps[0].member_count == 4


def test_rdlps_length_mismatch():
    ds = _tiny_dataset()
    with pytest.raises(ConfigError, match="rows"):
        rdlps_from_labels(np.zeros(3, dtype=int), ds)
