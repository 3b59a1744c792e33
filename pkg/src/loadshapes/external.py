"""External cluster evaluation: demand errors, peak behaviour, entropy, usability.

These measures ask whether each cluster's representative profile (RDLP)
would serve its members well: how far off their daily totals and peaks
would be, whether members peak in the RDLP's peak hours, and how specific
the cluster is to calendar context and demand magnitude (low entropy =
specific).  Usability checks look at the experiment as a whole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import DAYTYPES, ProfileDataset, percentile_bins

#: An RDLP counts as a zero profile when its peak is below this fraction of
#: the dataset's mean daily peak.
ZERO_PROFILE_TOL = 1e-6

#: Default minimum member count for a cluster to count as usable.
DEFAULT_MEMBER_THRESHOLD = 10490


@dataclass(frozen=True)
class DemandErrors:
    """Error of one RDLP against its members on a scalar demand figure."""

    mape: Optional[float]
    mdape: Optional[float]
    mdlq: Optional[float]
    mdsyma: Optional[float]
    excluded: int  # members with zero demand, left out of the error pool

    def values(self) -> dict:
        return {
            "mape": self.mape,
            "mdape": self.mdape,
            "mdlq": self.mdlq,
            "mdsyma": self.mdsyma,
        }


def _demand_errors(member_demand, rdlp_demand) -> DemandErrors:
    member_demand = np.asarray(member_demand, dtype=np.float64)
    valid = member_demand > 0
    excluded = int((~valid).sum())
    h = member_demand[valid]
    if len(h) == 0:
        return DemandErrors(None, None, None, None, excluded)
    ape = np.abs(h - rdlp_demand) / h
    mape = 100.0 * float(ape.mean())
    mdape = 100.0 * float(np.median(ape))
    if rdlp_demand <= 0:
        return DemandErrors(mape, mdape, None, None, excluded)
    logq = np.log(rdlp_demand / h)
    mdlq = float(np.median(logq))
    mdsyma = 100.0 * (math.exp(float(np.median(np.abs(logq)))) - 1.0)
    return DemandErrors(mape, mdape, mdlq, mdsyma, excluded)


def demand_errors(rdlp_values, member_values):
    """Total- and peak-demand errors of an RDLP against member profiles.

    Totals compare daily sums, peaks compare daily maxima.  For each scalar
    the errors are the mean and median absolute percentage error, the
    median log accuracy ratio ``ln(rdlp / member)``, and the median
    symmetric accuracy ``100 * (exp(median |ln ratio|) - 1)``.  Members
    with zero demand are excluded and tallied.
    """
    rdlp_values = np.asarray(rdlp_values, dtype=np.float64)
    member_values = np.asarray(member_values, dtype=np.float64)
    total = _demand_errors(member_values.sum(axis=1), float(rdlp_values.sum()))
    peak = _demand_errors(member_values.max(axis=1), float(rdlp_values.max()))
    return total, peak


def peak_hours(values) -> np.ndarray:
    """Hours whose value exceeds half the profile's maximum (bool mask)."""
    values = np.asarray(values, dtype=np.float64)
    return values > 0.5 * values.max()


def peak_coincidence_ratio(rdlp_values, member_values) -> float:
    """Mean member overlap with the RDLP's peak hours, as a fraction.

    Per member: the number of RDLP peak hours in which the member also
    peaks, divided by the number of RDLP peak hours.  An all-zero RDLP has
    no peak hours and scores 0.
    """
    rdlp_values = np.asarray(rdlp_values, dtype=np.float64)
    member_values = np.asarray(member_values, dtype=np.float64)
    if rdlp_values.max() <= 0:
        return 0.0
    r_peaks = peak_hours(rdlp_values)
    maxima = member_values.max(axis=1, keepdims=True)
    m_peaks = member_values > 0.5 * maxima
    overlap = (m_peaks & r_peaks[None, :]).sum(axis=1)
    return float(overlap.mean() / r_peaks.sum())


def entropy_from_counts(member_counts, dataset_counts) -> float:
    """Entropy (bits) of a cluster's footprint over one feature.

    ``q_v = members with value v / all rows with value v`` is renormalized
    to a distribution ``p`` and scored as ``-sum p log2 p``.  Values absent
    from the dataset are skipped.
    """
    member_counts = np.asarray(member_counts, dtype=np.float64)
    dataset_counts = np.asarray(dataset_counts, dtype=np.float64)
    present = dataset_counts > 0
    q = member_counts[present] / dataset_counts[present]
    total = q.sum()
    if total <= 0:
        return 0.0
    p = q / total
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


@dataclass
class DatasetMarginals:
    """Per-row feature values and their dataset-wide counts.

    Built over the rows that were actually clustered, so the entropy
    denominators match the population the clusters partition.
    """

    daytype_idx: np.ndarray  # (n,) 0..6
    month: np.ndarray  # (n,) 1..12
    total_bin: np.ndarray  # (n,) 1..100 percentile bin of daily total
    peak_bin: np.ndarray  # (n,) 1..100 percentile bin of daily peak
    daytype_counts: np.ndarray = field(init=False)
    month_counts: np.ndarray = field(init=False)
    total_counts: np.ndarray = field(init=False)
    peak_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.daytype_counts = np.bincount(self.daytype_idx, minlength=7)
        self.month_counts = np.bincount(self.month, minlength=13)[1:]
        self.total_counts = np.bincount(self.total_bin, minlength=101)[1:]
        self.peak_counts = np.bincount(self.peak_bin, minlength=101)[1:]

    @classmethod
    def build(cls, dataset: ProfileDataset, rows=None) -> "DatasetMarginals":
        if rows is None:
            rows = np.arange(len(dataset), dtype=np.intp)
        rows = np.asarray(rows, dtype=np.intp)
        values = dataset.values[rows]
        return cls(
            daytype_idx=dataset.daytype_indices()[rows],
            month=dataset.months()[rows],
            total_bin=percentile_bins(values.sum(axis=1)),
            peak_bin=percentile_bins(values.max(axis=1)),
        )


@dataclass
class ClusterMeasures:
    """All external measures of one cluster."""

    cluster_id: int
    member_count: int
    total: DemandErrors
    peak: DemandErrors
    peak_coincidence: float
    entropy_daytype: float
    entropy_month: float
    entropy_total_demand: float
    entropy_peak_demand: float
    daytype_likelihood: np.ndarray  # (7,) renormalized p over Mon..Sun


@dataclass
class UsabilityReport:
    zero_profile_represented: bool
    membership_threshold_ratio: float
    threshold: int
    n_clusters: int
    n_above_threshold: int


def membership_threshold(n_households: Optional[int] = None, explicit=None) -> int:
    """Minimum usable member count: explicit, else scaled, else the default.

    The auto scale is 5% of households, two weeks of days each.
    """
    if explicit is not None:
        return int(explicit)
    if n_households is not None:
        return int(round(0.05 * n_households * 14))
    return DEFAULT_MEMBER_THRESHOLD


def _footprint_entropy(feature_values, dataset_counts, value_offset=0):
    counts = np.bincount(
        feature_values - value_offset, minlength=len(dataset_counts)
    )
    return entropy_from_counts(counts, dataset_counts), counts


def evaluate_clusters(
    dataset: ProfileDataset,
    labels,
    rdlps,
    marginals: DatasetMarginals,
    marginal_rows=None,
):
    """External measures for every RDLP's cluster.

    ``labels`` is the full-length label vector; ``marginals`` must have been
    built over ``marginal_rows`` (default: all rows with a label), in the
    same order.
    """
    labels = np.asarray(labels)
    if marginal_rows is None:
        marginal_rows = np.flatnonzero(labels >= 0)
    marginal_rows = np.asarray(marginal_rows, dtype=np.intp)
    # Position of each original row inside the marginal arrays.
    pos = np.full(len(labels), -1, dtype=np.intp)
    pos[marginal_rows] = np.arange(len(marginal_rows))
    out = []
    for rdlp in rdlps:
        member_rows = np.flatnonzero(labels == rdlp.cluster_id)
        member_values = dataset.values[member_rows]
        total, peak = demand_errors(rdlp.values, member_values)
        coincidence = peak_coincidence_ratio(rdlp.values, member_values)
        mpos = pos[member_rows]
        if (mpos < 0).any():
            raise ValueError(
                f"cluster {rdlp.cluster_id} has members outside the marginal rows"
            )
        s_day, day_counts = _footprint_entropy(
            marginals.daytype_idx[mpos], marginals.daytype_counts
        )
        s_month, _ = _footprint_entropy(
            marginals.month[mpos], marginals.month_counts, value_offset=1
        )
        s_total, _ = _footprint_entropy(
            marginals.total_bin[mpos], marginals.total_counts, value_offset=1
        )
        s_peak, _ = _footprint_entropy(
            marginals.peak_bin[mpos], marginals.peak_counts, value_offset=1
        )
        q = np.where(
            marginals.daytype_counts > 0,
            day_counts / np.maximum(marginals.daytype_counts, 1),
            0.0,
        )
        likelihood = q / q.sum() if q.sum() > 0 else np.zeros(7)
        out.append(
            ClusterMeasures(
                cluster_id=rdlp.cluster_id,
                member_count=rdlp.member_count,
                total=total,
                peak=peak,
                peak_coincidence=coincidence,
                entropy_daytype=s_day,
                entropy_month=s_month,
                entropy_total_demand=s_total,
                entropy_peak_demand=s_peak,
                daytype_likelihood=likelihood,
            )
        )
    return out


def usability_report(
    dataset: ProfileDataset, rdlps, threshold: int
) -> UsabilityReport:
    """Experiment-level usability: zero-profile presence and threshold ratio."""
    mean_peak = float(dataset.values.max(axis=1).mean()) if len(dataset) else 0.0
    tol = ZERO_PROFILE_TOL * mean_peak
    zero_found = any(float(np.max(r.values)) <= tol for r in rdlps)
    n_above = sum(1 for r in rdlps if r.member_count > threshold)
    n_clusters = len(rdlps)
    ratio = n_above / n_clusters if n_clusters else 0.0
    return UsabilityReport(
        zero_profile_represented=zero_found,
        membership_threshold_ratio=ratio,
        threshold=int(threshold),
        n_clusters=n_clusters,
        n_above_threshold=n_above,
    )
