import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadshapes.cluster import RDLP
from loadshapes.data import ProfileDataset
from loadshapes.external import (
    DatasetMarginals,
    demand_errors,
    entropy_from_counts,
    evaluate_clusters,
    membership_threshold,
    peak_coincidence_ratio,
    peak_hours,
    usability_report,
)

from _oracles import entropy_bf


def _profiles(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return rows


def test_perfect_cluster_all_errors_zero():
    rdlp = np.full(24, 2.0)
    members = np.tile(rdlp, (5, 1))
    total, peak = demand_errors(rdlp, members)
    for err in (total, peak):
        assert err.mape == pytest.approx(0.0, abs=1e-12)
        assert err.mdape == pytest.approx(0.0, abs=1e-12)
        assert err.mdlq == pytest.approx(0.0, abs=1e-12)
        assert err.mdsyma == pytest.approx(0.0, abs=1e-12)
        assert err.excluded == 0


def test_double_demand_case():
    # RDLP = 2h: mape = 100, mdlq = ln 2, mdsyma = 100.
    members = np.tile(np.full(24, 1.5), (4, 1))
    rdlp = np.full(24, 3.0)
    total, peak = demand_errors(rdlp, members)
    for err in (total, peak):
        assert err.mape == pytest.approx(100.0, abs=1e-9)
        assert err.mdlq == pytest.approx(math.log(2), abs=1e-12)
        assert err.mdsyma == pytest.approx(100.0, abs=1e-9)


def test_signed_log_ratio_median():
    # Two members with Q = 0.5 and Q = 2: mdlq = median {ln .5, ln 2} = 0,
    # but mdsyma = 100 * (exp(ln 2) - 1) = 100 — under- and over-estimates
    # do not cancel in the symmetric measure.
    m1 = np.full(24, 2.0)  # total 48, rdlp/member Q = 0.5
    m2 = np.full(24, 0.5)  # total 12, Q = 2
    rdlp = np.full(24, 1.0)  # total 24
    total, _ = demand_errors(rdlp, np.vstack([m1, m2]))
    assert total.mdlq == pytest.approx(0.0, abs=1e-12)
    assert total.mdsyma == pytest.approx(100.0, abs=1e-9)


def test_zero_demand_members_excluded_and_tallied():
    members = np.vstack([np.zeros(24), np.full(24, 2.0)])
    rdlp = np.full(24, 1.0)
    total, peak = demand_errors(rdlp, members)
    assert total.excluded == 1 and peak.excluded == 1
    assert total.mape == pytest.approx(50.0)  # |48-24|/48


def test_all_zero_members_give_no_errors():
    members = np.zeros((3, 24))
    total, peak = demand_errors(np.ones(24), members)
    assert total.mape is None and total.excluded == 3


def test_zero_rdlp_skips_log_ratios():
    members = np.full((2, 24), 1.0)
    total, peak = demand_errors(np.zeros(24), members)
    assert total.mape == pytest.approx(100.0)
    assert total.mdlq is None and total.mdsyma is None


def test_peak_hours_strictly_above_half_max():
    v = np.zeros(24)
    v[7] = 4.0
    v[8] = 2.0  # exactly half the max: not a peak hour
    v[9] = 2.1
    hours = peak_hours(v)
    assert list(np.flatnonzero(hours)) == [7, 9]


def test_peak_coincidence_hand_case():
    # RDLP peaks at hours {7, 8, 18, 19}; member peaks cover 3 of the 4.
    rdlp = np.zeros(24)
    rdlp[[7, 8, 18, 19]] = 5.0
    member = np.zeros(24)
    member[[7, 8, 18]] = 6.0
    ratio = peak_coincidence_ratio(rdlp, member[None, :])
    assert ratio == pytest.approx(0.75, abs=1e-12)


def test_peak_coincidence_copies_score_one():
    rdlp = np.abs(np.sin(np.arange(24))) + 0.5
    members = np.tile(rdlp, (6, 1))
    assert peak_coincidence_ratio(rdlp, members) == pytest.approx(1.0, abs=1e-12)


def test_peak_coincidence_zero_rdlp():
    assert peak_coincidence_ratio(np.zeros(24), np.ones((3, 24))) == 0.0


@settings(max_examples=40)
@given(
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=0, max_value=10**6),
)
def test_peak_coincidence_bounded(n_members, seed):
    rng = np.random.default_rng(seed)
    rdlp = rng.uniform(0, 5, 24)
    members = rng.uniform(0, 5, (n_members, 24))
    ratio = peak_coincidence_ratio(rdlp, members)
    assert 0.0 <= ratio <= 1.0


def test_entropy_point_mass_is_zero():
    member = np.zeros(7)
    member[3] = 50
    dataset = np.full(7, 100)
    assert entropy_from_counts(member, dataset) == 0.0


def test_entropy_uniform_footprint():
    # Same share of every day type -> uniform p -> log2(7).
    member = np.full(7, 10)
    dataset = np.full(7, 70)
    assert entropy_from_counts(member, dataset) == pytest.approx(
        math.log2(7), abs=1e-12
    )
    # Uniform share also when dataset counts differ but ratios match.
    dataset2 = np.array([10, 20, 40, 80, 160, 320, 640])
    member2 = dataset2 // 10
    assert entropy_from_counts(member2, dataset2) == pytest.approx(
        math.log2(7), abs=1e-12
    )


def test_entropy_hand_case():
    # q = {0.6, 0.2} -> p = {0.75, 0.25} -> 0.811278...
    member = np.array([60, 20])
    dataset = np.array([100, 100])
    expected = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
    assert entropy_from_counts(member, dataset) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.8112781244591328, abs=1e-15)


def test_entropy_matches_oracle_on_random_footprints(rng):
    for _ in range(20):
        dataset_values = rng.integers(0, 7, size=200)
        pick = rng.random(200) < 0.3
        member_values = dataset_values[pick]
        dataset_counts = np.bincount(dataset_values, minlength=7)
        member_counts = np.bincount(member_values, minlength=7)
        assert entropy_from_counts(
            member_counts, dataset_counts
        ) == pytest.approx(entropy_bf(member_values, dataset_values), abs=1e-12)


def test_entropy_ignores_absent_dataset_values():
    member = np.array([5, 0, 0])
    dataset = np.array([10, 0, 0])
    assert entropy_from_counts(member, dataset) == 0.0


def test_membership_threshold_rules():
    assert membership_threshold() == 10490
    assert membership_threshold(explicit=123) == 123
    # Auto scale: 5% of households, 14 days each.
    assert membership_threshold(n_households=300) == 210
    assert membership_threshold(n_households=300, explicit=50) == 50


def _toy_clustered_dataset():
    """Two clusters: flat profiles and zero profiles."""
    values = np.vstack([np.full((6, 24), 2.0), np.zeros((2, 24))])
    ids = [f"h{i}" for i in range(8)]
    dates = [dt.date(2013, 6, 2 + i % 4) for i in range(8)]
    ds = ProfileDataset(ids, dates, values)
    labels = np.array([0] * 6 + [1] * 2)
    rdlps = [
        RDLP(0, np.full(24, 2.0), 6),
        RDLP(1, np.zeros(24), 2),
    ]
    return ds, labels, rdlps


def test_usability_report_zero_profile_and_ratio():
    ds, labels, rdlps = _toy_clustered_dataset()
    report = usability_report(ds, rdlps, threshold=4)
    assert report.zero_profile_represented is True
    assert report.n_above_threshold == 1
    assert report.membership_threshold_ratio == pytest.approx(0.5)
    no_zero = usability_report(ds, rdlps[:1], threshold=4)
    assert no_zero.zero_profile_represented is False
    assert no_zero.membership_threshold_ratio == pytest.approx(1.0)


def test_usability_ratio_counts_strictly_above():
    ds, labels, rdlps = _toy_clustered_dataset()
    report = usability_report(ds, rdlps, threshold=6)
    assert report.n_above_threshold == 0


def test_evaluate_clusters_end_to_end():
    ds, labels, rdlps = _toy_clustered_dataset()
    clustered = np.flatnonzero(labels >= 0)
    marginals = DatasetMarginals.build(ds, rows=clustered)
    measures = evaluate_clusters(ds, labels, rdlps, marginals)
    assert [m.cluster_id for m in measures] == [0, 1]
    flat = measures[0]
    assert flat.member_count == 6
    assert flat.total.mape == pytest.approx(0.0, abs=1e-12)
    assert flat.peak_coincidence == pytest.approx(1.0)
    assert flat.daytype_likelihood.sum() == pytest.approx(1.0)
    zeros = measures[1]
    assert zeros.total.mape is None
    assert zeros.total.excluded == 2
    assert zeros.peak_coincidence == 0.0


def test_daytype_likelihood_point_mass():
    # All members on one Monday: likelihood concentrates there.
    values = np.vstack([np.ones((4, 24)), np.full((4, 24), 3.0)])
    dates = [dt.date(2013, 6, 3)] * 4 + [dt.date(2013, 6, 8)] * 4  # Mon, Sat
    ds = ProfileDataset([f"h{i}" for i in range(8)], dates, values)
    labels = np.array([0] * 4 + [1] * 4)
    rdlps = [RDLP(0, np.ones(24), 4), RDLP(1, np.full(24, 3.0), 4)]
    marginals = DatasetMarginals.build(ds)
    measures = evaluate_clusters(ds, labels, rdlps, marginals)
    assert measures[0].daytype_likelihood[0] == pytest.approx(1.0)
    assert measures[0].entropy_daytype == 0.0
    assert measures[1].daytype_likelihood[5] == pytest.approx(1.0)


def test_demand_entropy_uses_percentile_bins(planted):
    # Clusters that split by consumption level are specific (low entropy)
    # on the demand features; a mixed cluster is not.
    ds = planted.dataset
    group = planted.group_labels
    labels = np.where(group == "low", 0, np.where(group == "mid", 1, 2))
    from loadshapes.cluster import rdlps_from_labels

    rdlps = rdlps_from_labels(labels, ds)
    marginals = DatasetMarginals.build(ds)
    measures = evaluate_clusters(ds, labels, rdlps, marginals)
    split_entropy = np.mean([m.entropy_total_demand for m in measures])
    mixed = np.arange(len(ds)) % 3
    mixed_measures = evaluate_clusters(
        ds, mixed, rdlps_from_labels(mixed, ds), marginals
    )
    mixed_entropy = np.mean([m.entropy_total_demand for m in mixed_measures])
    assert split_entropy < mixed_entropy - 1.0
