"""Experiment pipeline: configuration, preparation, per-bin clustering, RDLPs.

An experiment fixes an algorithm (k-means, SOM, or SOM followed by k-means),
a normalization, a pre-binning scheme and the zero-handling switch.  Rows
are clustered separately inside each bin; cluster ids are globally unique
across bins.  Representative daily load profiles (RDLPs) are element-wise
means of the raw member profiles, whatever space the clustering ran in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .data import ProfileDataset
from .engines import SOM_EPOCHS, fit_kmeans, fit_som, fit_som_kmeans
from .errors import ConfigError
from .preprocess import (
    DEFAULT_AMC_EDGES,
    NORMALIZATIONS,
    PREBINNINGS,
    BinAssignment,
    assign_amc_bins,
    filter_zeros,
    integral_kmeans_bins,
    normalize_rows,
    single_bin,
)

ALGORITHMS = ("kmeans", "som", "som_kmeans")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    normalization: str = "unit"
    m: Optional[int] = None  # clusters (kmeans, som_kmeans)
    s: Optional[int] = None  # SOM grid side (som, som_kmeans)
    prebinning: str = "none"
    n_bins: int = 8
    keep_zeros: bool = True
    seed: int = 0
    n_init: int = 1
    som_epochs: int = SOM_EPOCHS
    degenerate: str = "auto"  # auto | drop | zero
    bin_edges: tuple = DEFAULT_AMC_EDGES
    name: Optional[str] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if self.prebinning not in PREBINNINGS:
            raise ConfigError(f"unknown prebinning {self.prebinning!r}")
        if self.degenerate not in ("auto", "drop", "zero"):
            raise ConfigError(f"unknown degenerate policy {self.degenerate!r}")
        if self.algorithm in ("kmeans", "som_kmeans"):
            if self.m is None or self.m < 1:
                raise ConfigError(f"{self.algorithm} needs m >= 1, got {self.m}")
        if self.algorithm in ("som", "som_kmeans"):
            if self.s is None or self.s < 1:
                raise ConfigError(f"{self.algorithm} needs s >= 1, got {self.s}")
        if self.algorithm == "som_kmeans" and self.s * self.s <= self.m:
            raise ConfigError(
                f"som_kmeans needs s*s > m, got s={self.s} m={self.m}"
            )
        if self.prebinning != "none" and self.n_bins < 1:
            raise ConfigError(f"n_bins must be >= 1, got {self.n_bins}")
        if self.n_init < 1:
            raise ConfigError(f"n_init must be >= 1, got {self.n_init}")
        if self.name is None:
            object.__setattr__(self, "name", self.slug())

    def slug(self) -> str:
        parts = [self.algorithm]
        if self.m is not None:
            parts.append(f"m{self.m}")
        if self.s is not None:
            parts.append(f"s{self.s}")
        parts.append(self.normalization)
        if self.prebinning == "none":
            parts.append("unbinned")
        else:
            parts.append(f"{self.prebinning}{self.n_bins}")
        parts.append("keepz" if self.keep_zeros else "dropz")
        return "_".join(parts)

    def degenerate_policy(self) -> str:
        if self.degenerate != "auto":
            return self.degenerate
        return "zero" if self.keep_zeros else "drop"

    def slots_per_bin(self) -> int:
        """Cluster id slots each non-empty bin occupies."""
        return self.s * self.s if self.algorithm == "som" else self.m

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "algorithm": self.algorithm,
            "normalization": self.normalization,
            "m": self.m,
            "s": self.s,
            "prebinning": self.prebinning,
            "n_bins": self.n_bins,
            "keep_zeros": self.keep_zeros,
            "seed": self.seed,
            "n_init": self.n_init,
            "som_epochs": self.som_epochs,
            "degenerate": self.degenerate,
            "bin_edges": list(self.bin_edges),
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        known = {
            "name", "algorithm", "normalization", "m", "s", "prebinning",
            "n_bins", "keep_zeros", "seed", "n_init", "som_epochs",
            "degenerate", "bin_edges",
        }
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        if "algorithm" not in cfg:
            raise ConfigError("experiment needs an 'algorithm'")
        kwargs = dict(cfg)
        if "bin_edges" in kwargs:
            kwargs["bin_edges"] = tuple(float(e) for e in kwargs["bin_edges"])
        return cls(**kwargs)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=int(seed))


@dataclass
class PreparedData:
    """Filtered, normalized and binned rows ready for clustering."""

    dataset: ProfileDataset  # the original, unfiltered dataset
    config: ExperimentConfig
    row_index: np.ndarray  # original row of each prepared row
    norm: np.ndarray  # (m, 24) clustering-space vectors
    bins: BinAssignment
    removed_zero: int
    removed_degenerate: int


@dataclass
class BinModel:
    bin_id: int
    offset: int  # first global cluster id of this bin
    n_slots: int
    centroids: np.ndarray  # (n_slots, 24), clustering space
    counts: np.ndarray  # (n_slots,) members per local cluster
    seed: int


@dataclass
class ClusterModel:
    config: ExperimentConfig
    bins: list
    labels: np.ndarray  # (n_original,) global cluster id, -1 = not clustered
    n_rows_clustered: int
    removed_zero: int
    removed_degenerate: int

    @property
    def n_slots_total(self) -> int:
        return sum(b.n_slots for b in self.bins)

    def cluster_ids(self) -> np.ndarray:
        """Global ids of non-empty clusters, ascending."""
        mask = self.labels >= 0
        return np.unique(self.labels[mask])

    def bin_of_cluster(self, cluster_id: int) -> int:
        for b in self.bins:
            if b.offset <= cluster_id < b.offset + b.n_slots:
                return b.bin_id
        raise ConfigError(f"cluster id {cluster_id} out of range")


def _bin_seeds(seed: int, n: int) -> np.ndarray:
    """Derive n+1 stable sub-seeds (index 0 feeds the binning stage)."""
    return np.random.SeedSequence(seed).generate_state(n + 1, dtype=np.uint32)


def prepare(dataset: ProfileDataset, config: ExperimentConfig) -> PreparedData:
    """Filter, normalize and bin a dataset according to the config."""
    fr = filter_zeros(dataset, config.keep_zeros)
    policy = config.degenerate_policy()
    normed, degenerate = normalize_rows(
        fr.dataset.values, config.normalization, degenerate=policy
    )
    if policy == "drop" and degenerate.any():
        keep = ~degenerate
        row_index = fr.kept_rows[keep]
        normed = normed[keep]
        removed_degenerate = int(degenerate.sum())
        working = fr.dataset.select(np.flatnonzero(keep))
    else:
        row_index = fr.kept_rows
        removed_degenerate = 0
        working = fr.dataset

    seeds = _bin_seeds(config.seed, config.n_bins)
    if config.prebinning == "none":
        bins = single_bin(len(working))
    elif config.prebinning == "amc":
        bins = assign_amc_bins(working, edges=config.bin_edges)
    else:
        bins = integral_kmeans_bins(working, config.n_bins, seed=int(seeds[0]))
    return PreparedData(
        dataset=dataset,
        config=config,
        row_index=row_index,
        norm=normed,
        bins=bins,
        removed_zero=fr.removed,
        removed_degenerate=removed_degenerate,
    )


def cluster_prepared(prep: PreparedData) -> ClusterModel:
    """Cluster each bin independently and stitch global labels together."""
    config = prep.config
    seeds = _bin_seeds(config.seed, config.n_bins)
    labels = np.full(len(prep.dataset), -1, dtype=np.intp)
    bin_models = []
    offset = 0
    for bin_id in range(1, prep.bins.n_bins + 1):
        members = np.flatnonzero(prep.bins.labels == bin_id)
        if len(members) == 0:
            continue
        data = prep.norm[members]
        seed = int(seeds[bin_id])
        try:
            local, centroids, n_slots = _run_engine(data, config, seed)
        except ConfigError as exc:
            raise ConfigError(f"bin {bin_id} ({len(members)} rows): {exc}") from None
        labels[prep.row_index[members]] = offset + local
        counts = np.bincount(local, minlength=n_slots)
        bin_models.append(
            BinModel(bin_id, offset, n_slots, centroids, counts, seed)
        )
        offset += n_slots
    return ClusterModel(
        config=config,
        bins=bin_models,
        labels=labels,
        n_rows_clustered=int((labels >= 0).sum()),
        removed_zero=prep.removed_zero,
        removed_degenerate=prep.removed_degenerate,
    )


def _run_engine(data, config: ExperimentConfig, seed: int):
    if config.algorithm == "kmeans":
        res = fit_kmeans(data, config.m, seed=seed, n_init=config.n_init)
        return res.labels, res.centroids, config.m
    if config.algorithm == "som":
        res = fit_som(data, config.s, seed=seed, epochs=config.som_epochs)
        return res.bmu, res.codebook, config.s * config.s
    res = fit_som_kmeans(
        data, config.s, config.m, seed=seed, epochs=config.som_epochs
    )
    return res.labels, res.kmeans.centroids, config.m


def run_experiment(dataset: ProfileDataset, config: ExperimentConfig) -> ClusterModel:
    """Full pipeline: prepare then cluster."""
    return cluster_prepared(prepare(dataset, config))


@dataclass(frozen=True)
class RDLP:
    """Representative daily load profile: raw-space mean of a cluster."""

    cluster_id: int
    values: np.ndarray  # (24,)
    member_count: int


def build_rdlps(model: ClusterModel, dataset: ProfileDataset) -> list:
    """RDLP of every non-empty cluster of a fitted model.

    ``dataset`` must be the one the model was fitted on (same row order);
    RDLPs always average raw (unnormalized) profiles.
    """
    return rdlps_from_labels(model.labels, dataset)


def rdlps_from_labels(labels, dataset: ProfileDataset) -> list:
    """RDLPs from a bare label vector (-1 = not clustered), ascending by id."""
    labels = np.asarray(labels)
    if len(labels) != len(dataset):
        raise ConfigError(
            f"label vector has {len(labels)} rows, dataset has {len(dataset)}"
        )
    mask = labels >= 0
    if not mask.any():
        return []
    total = int(labels.max()) + 1
    clustered = labels[mask]
    counts = np.bincount(clustered, minlength=total)
    sums = np.zeros((total, dataset.values.shape[1]))
    values = dataset.values[mask]
    for d in range(values.shape[1]):
        sums[:, d] = np.bincount(clustered, weights=values[:, d], minlength=total)
    out = []
    for cid in np.flatnonzero(counts > 0):
        out.append(RDLP(int(cid), sums[cid] / counts[cid], int(counts[cid])))
    return out
