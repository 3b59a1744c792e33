"""Profile normalization, zero filtering and consumption pre-binning.

Pre-binning splits the dataset before clustering so that households with
very different consumption magnitudes are never forced into the same
clusters: either by tariff-style AMC intervals or by k-means over integral
(cumulative) curves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .data import HouseholdStats, ProfileDataset, compute_all_amc
from .engines import fit_kmeans
from .errors import ConfigError, DegenerateProfileError

NORMALIZATIONS = ("none", "unit", "deminning", "zero_one", "sa_norm")
PREBINNINGS = ("none", "amc", "integral_kmeans")

#: Tariff-style AMC intervals (kWh/month), half-open [low, high).  The
#: labels 0-1, 2-50, 51-150, ... are integer shorthand, so the real
#: boundaries sit between adjacent labels; anything above the last edge
#: lands in the top bin.
DEFAULT_AMC_EDGES = (0.0, 1.5, 50.5, 150.5, 400.5, 600.5, 1200.5, 2500.5)


def _norms(rows):
    return np.sqrt(np.einsum("ij,ij->i", rows, rows))


def normalize_rows(values, method, degenerate="raise"):
    """Normalize each row of an (n, 24) array.

    Methods: ``none`` (identity), ``unit`` (y / ||y||), ``deminning``
    ((y - min y) / ||y - min y||), ``zero_one`` (y / max y) and ``sa_norm``
    (y / mean y).  Rows whose normalizer is zero are degenerate; the policy
    decides whether that raises, zeroes the row, or marks it for dropping.

    Returns ``(normed, degenerate_mask)``.
    """
    if method not in NORMALIZATIONS:
        raise ConfigError(f"unknown normalization {method!r}")
    if degenerate not in ("raise", "drop", "zero"):
        raise ConfigError(f"unknown degenerate policy {degenerate!r}")
    values = np.ascontiguousarray(values, dtype=np.float64)
    if method == "none":
        return values.copy(), np.zeros(len(values), dtype=bool)
    if method == "unit":
        shifted = values
        denom = _norms(values)
    elif method == "deminning":
        shifted = values - values.min(axis=1, keepdims=True)
        denom = _norms(shifted)
    elif method == "zero_one":
        shifted = values
        denom = values.max(axis=1)
    else:  # sa_norm
        shifted = values
        denom = values.mean(axis=1)
    bad = denom == 0
    rescued = None
    if method in ("unit", "deminning"):
        # Squaring underflows for entries below ~1e-154, so a tiny but
        # nonzero row can report a zero norm.  Rescale such rows by their
        # max and normalize the scaled copy instead of calling them
        # degenerate.
        under = bad & shifted.any(axis=1)
        if under.any():
            scaled = shifted[under] / np.abs(shifted[under]).max(
                axis=1, keepdims=True
            )
            rescued = (under, scaled / _norms(scaled)[:, None])
            bad &= ~under
    if bad.any() and degenerate == "raise":
        row = int(np.flatnonzero(bad)[0])
        raise DegenerateProfileError(
            f"row {row} is degenerate under {method!r} normalization"
        )
    safe = np.where(denom == 0, 1.0, denom)
    normed = shifted / safe[:, None]
    normed[bad] = 0.0
    if rescued is not None:
        normed[rescued[0]] = rescued[1]
    return normed, bad


def normalize_profile(values, method):
    """Normalize a single 24-vector; degenerate input raises."""
    normed, _ = normalize_rows(np.asarray(values, dtype=np.float64)[None, :], method)
    return normed[0]


@dataclass
class FilterResult:
    dataset: ProfileDataset
    kept_rows: np.ndarray  # indices into the original dataset
    removed: int


def filter_zeros(dataset: ProfileDataset, keep_zeros: bool) -> FilterResult:
    """Optionally drop all-zero profiles (no recorded consumption all day)."""
    if keep_zeros:
        return FilterResult(dataset, np.arange(len(dataset), dtype=np.intp), 0)
    nonzero = dataset.values.max(axis=1) > 0
    kept = np.flatnonzero(nonzero)
    return FilterResult(dataset.select(kept), kept, int(len(dataset) - len(kept)))


@dataclass
class BinAssignment:
    """Per-row bin labels (1..n_bins) for one dataset."""

    scheme: str
    n_bins: int
    labels: np.ndarray

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_bins + 1)[1:]


def single_bin(n_rows: int) -> BinAssignment:
    return BinAssignment("none", 1, np.ones(n_rows, dtype=np.intp))


def assign_amc_bins(
    dataset: ProfileDataset,
    stats: Optional[Mapping[str, HouseholdStats]] = None,
    edges=DEFAULT_AMC_EDGES,
) -> BinAssignment:
    """Bin every row by its household's average monthly consumption.

    All rows of a household share one bin.  ``edges`` are the lower bounds
    of each bin; values below ``edges[0]`` cannot occur (AMC >= 0) and
    values beyond the last edge fall in the top bin.
    """
    edges = np.asarray(edges, dtype=np.float64)
    if len(edges) < 1 or np.any(np.diff(edges) <= 0):
        raise ConfigError("bin edges must be strictly increasing")
    if stats is None:
        stats = compute_all_amc(dataset)
    labels = np.empty(len(dataset), dtype=np.intp)
    for hid in dataset.households():
        amc = stats[hid].amc_kwh
        bin_id = int(np.searchsorted(edges, amc, side="right"))
        labels[dataset.household_rows(hid)] = max(bin_id, 1)
    return BinAssignment("amc", len(edges), labels)


def integral_kmeans_bins(dataset: ProfileDataset, n_bins=8, seed=0) -> BinAssignment:
    """Bin rows by k-means over integral curves.

    Each profile is unit-normalized, turned into its 24-point cumulative
    sum, and extended with the raw daily maximum (25 features); k-means
    with k = ``n_bins`` over these vectors yields the bin of each row.
    All-zero profiles enter with an all-zero feature vector, so they end up
    in whichever bin's centroid is nearest to the origin.
    """
    if n_bins < 1:
        raise ConfigError(f"n_bins must be >= 1, got {n_bins}")
    values = dataset.values
    normed, _ = normalize_rows(values, "unit", degenerate="zero")
    features = np.hstack([np.cumsum(normed, axis=1), values.max(axis=1)[:, None]])
    result = fit_kmeans(features, n_bins, seed=seed)
    return BinAssignment("integral_kmeans", n_bins, result.labels.astype(np.intp) + 1)
