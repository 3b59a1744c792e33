"""Clustering pipeline and evaluation toolkit for daily household load profiles."""

from .data import (
    DailyLoadProfile,
    HouseholdStats,
    ProfileDataset,
    TemporalAttributes,
    compute_all_amc,
    compute_amc,
    load_profiles,
    save_profiles,
    temporal_attributes,
)
from .cluster import (
    ExperimentConfig,
    RDLP,
    build_rdlps,
    prepare,
    run_experiment,
)
from .errors import (
    ConfigError,
    CoincidentCentroidsError,
    DataError,
    DegenerateProfileError,
    LoadShapesError,
    MetricError,
)
from .internal import ci_score, dbi, evaluate_internal, ix_index, mia, silhouette_index
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "CoincidentCentroidsError",
    "DailyLoadProfile",
    "DataError",
    "DegenerateProfileError",
    "ExperimentConfig",
    "HouseholdStats",
    "LoadShapesError",
    "MetricError",
    "ProfileDataset",
    "RDLP",
    "TemporalAttributes",
    "build_rdlps",
    "ci_score",
    "compute_all_amc",
    "compute_amc",
    "dbi",
    "evaluate_internal",
    "ix_index",
    "load_profiles",
    "mia",
    "prepare",
    "run_experiment",
    "save_profiles",
    "silhouette_index",
    "temporal_attributes",
    "__version__",
]
