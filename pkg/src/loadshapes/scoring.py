"""Weighted-rank scoring matrix across experiments.

Each usability measure is aggregated per experiment (member-count-weighted
over clusters large enough to matter), experiments are ranked per measure
(rank 1 = best, ties averaged), and ranks are combined with fixed weights
into a single score — lowest total wins.  Experiments with no cluster above
the membership threshold are flagged and take rank n+1 on every
cluster-level measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError

ERROR_SUBMETRICS = ("mape", "mdape", "mdlq", "mdsyma")
ENTROPY_KEYS = ("daytype", "month", "total_demand", "peak_demand")

#: Measure -> (weight, higher_is_better).  The demand-error entries cover a
#: family of four sub-metrics whose ranks are averaged.  mdlq is signed
#: (negative = systematic underestimate), so its rank uses |mdlq|.
DEFAULT_WEIGHTS = {
    "zero_profile": 1.0,
    "threshold_ratio": 2.0,
    "total_demand_error": 6.0,
    "peak_demand_error": 6.0,
    "peak_coincidence": 3.0,
    "daytype_entropy": 4.0,
    "monthly_entropy": 4.0,
    "total_demand_entropy": 5.0,
    "peak_demand_entropy": 5.0,
}

HIGHER_BETTER = frozenset({"zero_profile", "threshold_ratio", "peak_coincidence"})

MEASURE_ORDER = tuple(DEFAULT_WEIGHTS)

#: Measures defined even for experiments without a qualifying cluster.
EXPERIMENT_LEVEL = frozenset({"zero_profile", "threshold_ratio"})


@dataclass
class ExperimentMeasures:
    """One experiment's aggregated external measures."""

    name: str
    scorable: bool  # has at least one cluster above the threshold
    n_qualifying: int
    zero_profile: bool
    threshold_ratio: float
    total_errors: dict  # submetric -> float | None
    peak_errors: dict
    peak_coincidence: Optional[float]
    entropies: dict  # ENTROPY_KEYS -> float | None


def _weighted_mean(pairs):
    """Mean of (value, weight) pairs, ignoring None values."""
    values = [(v, w) for v, w in pairs if v is not None]
    if not values:
        return None
    total = sum(w for _, w in values)
    return sum(v * w for v, w in values) / total


def aggregate_experiment(name, cluster_measures, usability) -> ExperimentMeasures:
    """Aggregate per-cluster measures into experiment-level values.

    Only clusters with ``member_count > threshold`` contribute, weighted by
    member count.
    """
    threshold = usability.threshold
    qualifying = [c for c in cluster_measures if c.member_count > threshold]
    total_errors = {}
    peak_errors = {}
    for key in ERROR_SUBMETRICS:
        total_errors[key] = _weighted_mean(
            (c.total.values()[key], c.member_count) for c in qualifying
        )
        peak_errors[key] = _weighted_mean(
            (c.peak.values()[key], c.member_count) for c in qualifying
        )
    entropies = {
        "daytype": _weighted_mean(
            (c.entropy_daytype, c.member_count) for c in qualifying
        ),
        "month": _weighted_mean(
            (c.entropy_month, c.member_count) for c in qualifying
        ),
        "total_demand": _weighted_mean(
            (c.entropy_total_demand, c.member_count) for c in qualifying
        ),
        "peak_demand": _weighted_mean(
            (c.entropy_peak_demand, c.member_count) for c in qualifying
        ),
    }
    return ExperimentMeasures(
        name=name,
        scorable=bool(qualifying),
        n_qualifying=len(qualifying),
        zero_profile=usability.zero_profile_represented,
        threshold_ratio=usability.membership_threshold_ratio,
        total_errors=total_errors,
        peak_errors=peak_errors,
        peak_coincidence=_weighted_mean(
            (c.peak_coincidence, c.member_count) for c in qualifying
        ),
        entropies=entropies,
    )


def weighted_total(ranks_by_measure: dict, weights: dict) -> np.ndarray:
    """Combine per-measure rank vectors into weighted totals (lower = better)."""
    totals = None
    for measure, ranks in ranks_by_measure.items():
        if measure not in weights:
            raise ConfigError(f"no weight for measure {measure!r}")
        term = weights[measure] * np.asarray(ranks, dtype=np.float64)
        totals = term if totals is None else totals + term
    if totals is None:
        raise ConfigError("no measures to combine")
    return totals


def rank_values(values, higher_better=False, n_total=None):
    """Average-tie ranks (1 = best); None values take rank n_total + 1."""
    n_total = len(values) if n_total is None else n_total
    values = list(values)
    ranks = np.full(len(values), float(n_total + 1))
    idx = [i for i, v in enumerate(values) if v is not None]
    if idx:
        arr = np.asarray([values[i] for i in idx], dtype=np.float64)
        if higher_better:
            arr = -arr
        ranks[idx] = rankdata(arr, method="average")
    return ranks


@dataclass
class MeasureRanks:
    weight: float
    higher_better: bool
    values: list  # display values (may hold None / bool / dict)
    ranks: np.ndarray


@dataclass
class ScoreCard:
    experiments: list  # names
    measures: dict  # measure -> MeasureRanks, in MEASURE_ORDER
    totals: np.ndarray
    order: list  # experiment indices, best (lowest total) first
    ci: list = field(default_factory=list)  # optional CI per experiment

    def winner(self) -> str:
        return self.experiments[self.order[0]]

    def final_ranks(self) -> np.ndarray:
        return rank_values(list(self.totals))


def _family_rank(per_experiment, submetric_values, n):
    """Mean rank over the four error sub-metrics; |mdlq| ranks the signed one."""
    stack = []
    for key in ERROR_SUBMETRICS:
        vals = []
        for scorable, subs in zip(per_experiment, submetric_values):
            v = subs[key] if scorable else None
            if v is not None and key == "mdlq":
                v = abs(v)
            vals.append(v)
        stack.append(rank_values(vals, higher_better=False, n_total=n))
    return np.mean(stack, axis=0)


def build_scorecard(
    measures_list, weights=None, include_zero_profile=True, ci=None
) -> ScoreCard:
    """Rank experiments per measure and combine into weighted totals.

    ``weights`` overrides :data:`DEFAULT_WEIGHTS` (same keys); setting
    ``include_zero_profile=False`` drops that row, for datasets where no
    experiment can represent a zero profile.
    """
    if len(measures_list) < 2:
        raise ConfigError("scoring needs at least two experiments")
    names = [m.name for m in measures_list]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique")
    table = dict(DEFAULT_WEIGHTS)
    if weights:
        unknown = set(weights) - set(table)
        if unknown:
            raise ConfigError(f"unknown measure weights: {sorted(unknown)}")
        table.update({k: float(v) for k, v in weights.items()})
    if not include_zero_profile:
        table.pop("zero_profile", None)
    n = len(measures_list)
    scorable = [m.scorable for m in measures_list]
    out = {}
    for measure in MEASURE_ORDER:
        if measure not in table:
            continue
        weight = table[measure]
        higher = measure in HIGHER_BETTER
        if measure == "zero_profile":
            display = [m.zero_profile for m in measures_list]
            ranks = rank_values([float(v) for v in display], higher_better=True)
        elif measure == "threshold_ratio":
            display = [m.threshold_ratio for m in measures_list]
            ranks = rank_values(display, higher_better=True)
        elif measure == "total_demand_error":
            display = [m.total_errors for m in measures_list]
            ranks = _family_rank(scorable, display, n)
        elif measure == "peak_demand_error":
            display = [m.peak_errors for m in measures_list]
            ranks = _family_rank(scorable, display, n)
        elif measure == "peak_coincidence":
            display = [m.peak_coincidence if s else None
                       for m, s in zip(measures_list, scorable)]
            ranks = rank_values(display, higher_better=True)
        else:
            key = {
                "daytype_entropy": "daytype",
                "monthly_entropy": "month",
                "total_demand_entropy": "total_demand",
                "peak_demand_entropy": "peak_demand",
            }[measure]
            display = [m.entropies[key] if s else None
                       for m, s in zip(measures_list, scorable)]
            ranks = rank_values(display, higher_better=False)
        out[measure] = MeasureRanks(weight, higher, display, ranks)
    totals = weighted_total(
        {name: mr.ranks for name, mr in out.items()},
        {name: mr.weight for name, mr in out.items()},
    )
    order = sorted(range(n), key=lambda i: (totals[i], names[i]))
    return ScoreCard(
        experiments=names,
        measures=out,
        totals=totals,
        order=order,
        ci=list(ci) if ci is not None else [],
    )


def render_scorecard(card: ScoreCard) -> str:
    """Plain-text rank matrix: measures as rows, experiments as columns."""
    width = max(12, max(len(n) for n in card.experiments) + 2)
    label_w = max(len(m) for m in card.measures) + 4

    def fmt(v):
        return f"{v:.1f}".rjust(width)

    lines = []
    header = "measure (w)".ljust(label_w) + "".join(
        name.rjust(width) for name in card.experiments
    )
    lines.append(header)
    lines.append("-" * len(header))
    for measure, mr in card.measures.items():
        label = f"{measure} ({mr.weight:g})".ljust(label_w)
        lines.append(label + "".join(fmt(r) for r in mr.ranks))
    lines.append("-" * len(header))
    lines.append("SCORE".ljust(label_w) + "".join(fmt(t) for t in card.totals))
    finals = card.final_ranks()
    lines.append("FINAL RANK".ljust(label_w) + "".join(fmt(r) for r in finals))
    if card.ci:
        ci_ranks = rank_values(card.ci)
        lines.append("CI RANK".ljust(label_w) + "".join(fmt(r) for r in ci_ranks))
    lines.append("")
    lines.append(f"winner: {card.winner()}")
    return "\n".join(lines)
