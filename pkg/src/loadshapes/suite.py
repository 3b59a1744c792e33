"""Suite orchestration: run experiment grids, persist artifacts, score them.

A run writes everything under one output directory:

    manifest.json                     run metadata + per-cell status
    cells/<name>/model.json           config, per-bin centroids, seeds
    cells/<name>/labels.csv           row,household_id,date,bin,cluster
    cells/<name>/internal.csv         per-bin validity indices
    cells/<name>/rdlps.csv            cluster representatives (raw space)
    cells/<name>/clusters.csv         per-cluster external measures
    cells/<name>/daytype_likelihood.csv
    scorecard.json / scorecard.txt    cross-experiment rank matrix

All artifact references are relative to the output directory and floats are
written with repr precision, so two runs with the same config and seed are
bit-identical apart from the manifest timestamps.  A rerun into the same
directory skips cells whose config digest already completed.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import os
import shutil
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from . import kernels
from .cluster import ExperimentConfig, cluster_prepared, prepare, rdlps_from_labels
from .data import HOURS, ProfileDataset, load_profiles
from .errors import ConfigError, DataError, LoadShapesError
from .external import (
    DatasetMarginals,
    DemandErrors,
    ClusterMeasures,
    evaluate_clusters,
    membership_threshold,
    usability_report,
)
from .internal import SILHOUETTE_MAX_EXACT, evaluate_internal
from .scoring import (
    ERROR_SUBMETRICS,
    aggregate_experiment,
    build_scorecard,
    render_scorecard,
)

MANIFEST = "manifest.json"


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _parse(text: str):
    return None if text == "" else float(text)


@dataclass
class SuiteConfig:
    data: str  # absolute path to the profiles CSV
    experiments: list  # of ExperimentConfig, seeds resolved
    seed: int = 0
    threshold: object = None  # int | "auto" | None (package default)
    top_k: Optional[int] = None  # None = evaluate all
    weights: dict = field(default_factory=dict)
    include_zero_profile: bool = True
    silhouette_max_exact: int = SILHOUETTE_MAX_EXACT
    winter_months: Optional[frozenset] = None

    def resolve_threshold(self, n_households: int) -> int:
        if self.threshold == "auto":
            return membership_threshold(n_households=n_households)
        return membership_threshold(explicit=self.threshold)


_SUITE_KEYS = {
    "data", "experiments", "grid", "seed", "threshold", "top_k", "weights",
    "include_zero_profile", "silhouette_max_exact", "winter_months",
}


def _expand_grid(grid: dict) -> list:
    """Cartesian product of the list-valued keys of a grid mapping."""
    keys = list(grid)
    pools = [v if isinstance(v, list) else [v] for v in (grid[k] for k in keys)]
    combos = [{}]
    for key, pool in zip(keys, pools):
        combos = [dict(c, **{key: v}) for c in combos for v in pool]
    return combos


def load_suite_config(
    path, seed: Optional[int] = None, top_k: Optional[object] = None
) -> SuiteConfig:
    """Parse a suite YAML; CLI ``seed`` / ``top_k`` override the file."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: suite config must be a mapping")
    unknown = set(raw) - _SUITE_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    if "data" not in raw:
        raise ConfigError(f"{path}: missing 'data'")
    entries = list(raw.get("experiments") or [])
    if raw.get("grid"):
        entries.extend(_expand_grid(raw["grid"]))
    if not entries:
        raise ConfigError(f"{path}: no experiments defined")
    suite_seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    configs = []
    names = set()
    for idx, entry in enumerate(entries):
        entry = dict(entry)
        if "seed" not in entry:
            entry["seed"] = int(
                np.random.SeedSequence([suite_seed, idx]).generate_state(
                    1, dtype=np.uint32
                )[0]
            )
        cfg = ExperimentConfig.from_dict(entry)
        if cfg.name in names:
            raise ConfigError(f"{path}: duplicate experiment name {cfg.name!r}")
        names.add(cfg.name)
        configs.append(cfg)
    if top_k is None:
        top_k = raw.get("top_k")
    if top_k in (None, "all"):
        top_k_value = None
    else:
        top_k_value = int(top_k)
        if top_k_value < 1:
            raise ConfigError(f"top_k must be >= 1, got {top_k_value}")
    winter = raw.get("winter_months")
    return SuiteConfig(
        data=os.path.join(os.path.dirname(os.path.abspath(path)), raw["data"]),
        experiments=configs,
        seed=suite_seed,
        threshold=raw.get("threshold"),
        top_k=top_k_value,
        weights=dict(raw.get("weights") or {}),
        include_zero_profile=bool(raw.get("include_zero_profile", True)),
        silhouette_max_exact=int(
            raw.get("silhouette_max_exact", SILHOUETTE_MAX_EXACT)
        ),
        winter_months=frozenset(winter) if winter else None,
    )


def _cell_digest(cfg: ExperimentConfig, data_sha: str, suite: SuiteConfig) -> str:
    payload = {
        "experiment": cfg.to_dict(),
        "data_sha256": data_sha,
        "silhouette_max_exact": suite.silhouette_max_exact,
    }
    return _sha256_text(_canon(payload))


def _write_labels_csv(path, dataset: ProfileDataset, model) -> None:
    bin_of = {}
    for b in model.bins:
        for local in range(b.n_slots):
            bin_of[b.offset + local] = b.bin_id
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "household_id", "date", "bin", "cluster"])
        for row in range(len(dataset)):
            cid = int(model.labels[row])
            writer.writerow(
                [
                    row,
                    dataset.household_ids[row],
                    str(dataset.dates[row]),
                    bin_of.get(cid, 0),
                    cid,
                ]
            )


def read_labels_csv(path, n_rows: int) -> np.ndarray:
    labels = np.full(n_rows, -1, dtype=np.intp)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for entry in reader:
            labels[int(entry["row"])] = int(entry["cluster"])
    return labels


def _write_model_json(path, model) -> None:
    _write_json(
        path,
        {
            "config": model.config.to_dict(),
            "n_rows_clustered": model.n_rows_clustered,
            "removed_zero": model.removed_zero,
            "removed_degenerate": model.removed_degenerate,
            "bins": [
                {
                    "bin_id": b.bin_id,
                    "offset": b.offset,
                    "n_slots": b.n_slots,
                    "seed": b.seed,
                    "counts": [int(c) for c in b.counts],
                    "centroids": [[float(v) for v in row] for row in b.centroids],
                }
                for b in model.bins
            ],
        },
    )


def _write_internal_csv(path, scores) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["bin", "n_rows", "n_clusters", "dbi", "mia", "silhouette", "ix", "note"]
        )
        for b in scores.per_bin:
            writer.writerow(
                [
                    b.bin_id,
                    b.n_rows,
                    b.n_clusters,
                    _fmt(b.dbi),
                    _fmt(b.mia),
                    _fmt(b.silhouette),
                    _fmt(b.ix),
                    b.note,
                ]
            )


def _write_rdlps_csv(path, rdlps) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["cluster", "member_count"] + [f"h{i:02d}" for i in range(HOURS)]
        )
        for r in rdlps:
            writer.writerow(
                [r.cluster_id, r.member_count] + [repr(float(v)) for v in r.values]
            )


_CLUSTER_COLUMNS = (
    ["cluster", "member_count"]
    + [f"total_{k}" for k in ERROR_SUBMETRICS]
    + ["total_excluded"]
    + [f"peak_{k}" for k in ERROR_SUBMETRICS]
    + ["peak_excluded"]
    + [
        "peak_coincidence",
        "entropy_daytype",
        "entropy_month",
        "entropy_total_demand",
        "entropy_peak_demand",
    ]
)


def _write_clusters_csv(path, measures) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CLUSTER_COLUMNS)
        for c in measures:
            row = [c.cluster_id, c.member_count]
            row += [_fmt(c.total.values()[k]) for k in ERROR_SUBMETRICS]
            row.append(c.total.excluded)
            row += [_fmt(c.peak.values()[k]) for k in ERROR_SUBMETRICS]
            row.append(c.peak.excluded)
            row += [
                _fmt(c.peak_coincidence),
                _fmt(c.entropy_daytype),
                _fmt(c.entropy_month),
                _fmt(c.entropy_total_demand),
                _fmt(c.entropy_peak_demand),
            ]
            writer.writerow(row)


def read_clusters_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for entry in csv.DictReader(fh):
            total = DemandErrors(
                *(_parse(entry[f"total_{k}"]) for k in ERROR_SUBMETRICS),
                excluded=int(entry["total_excluded"]),
            )
            peak = DemandErrors(
                *(_parse(entry[f"peak_{k}"]) for k in ERROR_SUBMETRICS),
                excluded=int(entry["peak_excluded"]),
            )
            out.append(
                ClusterMeasures(
                    cluster_id=int(entry["cluster"]),
                    member_count=int(entry["member_count"]),
                    total=total,
                    peak=peak,
                    peak_coincidence=_parse(entry["peak_coincidence"]),
                    entropy_daytype=_parse(entry["entropy_daytype"]),
                    entropy_month=_parse(entry["entropy_month"]),
                    entropy_total_demand=_parse(entry["entropy_total_demand"]),
                    entropy_peak_demand=_parse(entry["entropy_peak_demand"]),
                    daytype_likelihood=np.zeros(7),
                )
            )
    return out


def _write_daytype_csv(path, measures) -> None:
    from .data import DAYTYPES

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster"] + list(DAYTYPES))
        for c in measures:
            writer.writerow(
                [c.cluster_id] + [repr(float(v)) for v in c.daytype_likelihood]
            )


@dataclass
class CellOutcome:
    name: str
    record: dict
    labels: Optional[np.ndarray] = None


def _run_cell(dataset, cfg, suite, cell_dir) -> CellOutcome:
    record = {"seed": cfg.seed, "config": cfg.to_dict()}
    try:
        prep = prepare(dataset, cfg)
        model = cluster_prepared(prep)
        scores = evaluate_internal(prep, model, max_exact=suite.silhouette_max_exact)
    except LoadShapesError as exc:
        record.update({"status": "failed", "error": str(exc), "ci": None})
        return CellOutcome(cfg.name, record)
    os.makedirs(cell_dir, exist_ok=True)
    _write_model_json(os.path.join(cell_dir, "model.json"), model)
    _write_labels_csv(os.path.join(cell_dir, "labels.csv"), dataset, model)
    _write_internal_csv(os.path.join(cell_dir, "internal.csv"), scores)
    record.update(
        {
            "status": "completed",
            "error": None,
            "ci": scores.ci,
            "n_clusters": int(len(np.unique(model.labels[model.labels >= 0]))),
            "n_rows_clustered": model.n_rows_clustered,
            "removed_zero": model.removed_zero,
            "removed_degenerate": model.removed_degenerate,
        }
    )
    return CellOutcome(cfg.name, record, labels=model.labels)


def run_suite(suite: SuiteConfig, out_dir, threads: int = 1) -> dict:
    """Run all cells, evaluate external measures, score, persist.

    Returns the manifest dict; cell failures are recorded there rather than
    raised (callers translate them into a partial-failure exit code).
    """
    started = dt.datetime.now(dt.timezone.utc).isoformat()
    os.makedirs(out_dir, exist_ok=True)
    dataset = load_profiles(suite.data)
    if len(dataset) == 0:
        raise DataError(f"{suite.data}: dataset is empty")
    data_sha = _sha256_file(suite.data)
    threshold = suite.resolve_threshold(len(dataset.households()))

    previous = {}
    manifest_path = os.path.join(out_dir, MANIFEST)
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            previous = json.load(fh).get("cells", {})

    digests = {
        cfg.name: _cell_digest(cfg, data_sha, suite) for cfg in suite.experiments
    }
    cells: dict = {}
    labels_cache: dict = {}
    lock = threading.Lock()

    def _stage1(cfg: ExperimentConfig) -> None:
        cell_dir = os.path.join(out_dir, "cells", cfg.name)
        old = previous.get(cfg.name)
        if (
            old
            and old.get("digest") == digests[cfg.name]
            and old.get("status") == "completed"
            and os.path.exists(os.path.join(cell_dir, "labels.csv"))
        ):
            record = dict(old)
            record["resumed"] = True
            outcome = CellOutcome(cfg.name, record)
        else:
            outcome = _run_cell(dataset, cfg, suite, cell_dir)
            outcome.record["digest"] = digests[cfg.name]
            outcome.record["resumed"] = False
        with lock:
            cells[cfg.name] = outcome.record
            if outcome.labels is not None:
                labels_cache[cfg.name] = outcome.labels

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_stage1, suite.experiments))
    else:
        for cfg in suite.experiments:
            _stage1(cfg)

    completed = [c for c in suite.experiments if cells[c.name]["status"] == "completed"]
    selected = _select_top_k(completed, cells, suite.top_k)

    measures_list = []
    ci_values = []
    for cfg in selected:
        cell_dir = os.path.join(out_dir, "cells", cfg.name)
        labels = labels_cache.get(cfg.name)
        if labels is None:
            labels = read_labels_csv(
                os.path.join(cell_dir, "labels.csv"), len(dataset)
            )
        rdlps = rdlps_from_labels(labels, dataset)
        clustered = np.flatnonzero(labels >= 0)
        marginals = DatasetMarginals.build(dataset, rows=clustered)
        cluster_measures = evaluate_clusters(
            dataset, labels, rdlps, marginals, marginal_rows=clustered
        )
        usability = usability_report(dataset, rdlps, threshold)
        _write_rdlps_csv(os.path.join(cell_dir, "rdlps.csv"), rdlps)
        _write_clusters_csv(
            os.path.join(cell_dir, "clusters.csv"), cluster_measures
        )
        _write_daytype_csv(
            os.path.join(cell_dir, "daytype_likelihood.csv"), cluster_measures
        )
        cells[cfg.name]["external"] = True
        cells[cfg.name]["usability"] = {
            "zero_profile_represented": usability.zero_profile_represented,
            "membership_threshold_ratio": usability.membership_threshold_ratio,
            "threshold": usability.threshold,
            "n_clusters": usability.n_clusters,
            "n_above_threshold": usability.n_above_threshold,
        }
        measures_list.append(
            aggregate_experiment(cfg.name, cluster_measures, usability)
        )
        ci_values.append(cells[cfg.name]["ci"])
    for cfg in suite.experiments:
        cells[cfg.name].setdefault("external", False)

    scorecard_note = None
    if len(measures_list) >= 2:
        card = build_scorecard(
            measures_list,
            weights=suite.weights,
            include_zero_profile=suite.include_zero_profile,
            ci=ci_values,
        )
        _persist_scorecard(out_dir, card)
    else:
        card = None
        scorecard_note = "scoring needs at least two externally evaluated cells"

    manifest = {
        "backend": kernels.BACKEND,
        "cells": cells,
        "config_digest": _sha256_text(
            _canon(
                {
                    "data_sha256": data_sha,
                    "experiments": [c.to_dict() for c in suite.experiments],
                    "seed": suite.seed,
                }
            )
        ),
        "data": os.path.abspath(suite.data),
        "data_sha256": data_sha,
        "finished_at": dt.datetime.now(dt.timezone.utc).isoformat(),
        "n_households": len(dataset.households()),
        "n_rows": len(dataset),
        "scorecard": "scorecard.json" if card else None,
        "scorecard_note": scorecard_note,
        "seed": suite.seed,
        "started_at": started,
        "threshold": threshold,
        "top_k": suite.top_k,
        "winner": card.winner() if card else None,
    }
    _write_json(manifest_path, manifest)
    return manifest


def _select_top_k(completed, cells, top_k):
    if top_k is None:
        return completed
    def key(cfg):
        ci = cells[cfg.name]["ci"]
        return (ci is None, ci if ci is not None else 0.0)
    return sorted(completed, key=key)[:top_k]


def _persist_scorecard(out_dir, card) -> None:
    payload = {
        "experiments": card.experiments,
        "measures": {
            name: {
                "weight": mr.weight,
                "higher_better": mr.higher_better,
                "values": _jsonable(mr.values),
                "ranks": [float(r) for r in mr.ranks],
            }
            for name, mr in card.measures.items()
        },
        "totals": [float(t) for t in card.totals],
        "final_ranks": [float(r) for r in card.final_ranks()],
        "order": list(card.order),
        "winner": card.winner(),
        "ci": card.ci,
    }
    _write_json(os.path.join(out_dir, "scorecard.json"), payload)
    with open(os.path.join(out_dir, "scorecard.txt"), "w") as fh:
        fh.write(render_scorecard(card) + "\n")


def _jsonable(values):
    out = []
    for v in values:
        if isinstance(v, dict):
            out.append({k: (None if x is None else float(x)) for k, x in v.items()})
        elif isinstance(v, (bool, type(None))):
            out.append(v)
        else:
            out.append(float(v))
    return out


def score_run(out_dir) -> str:
    """Rebuild the scorecard from persisted per-cluster artifacts.

    Lets the matrix be re-rendered (or re-weighted via a fresh
    ``run``) without re-clustering; returns the rendered text.
    """
    manifest_path = os.path.join(out_dir, MANIFEST)
    if not os.path.exists(manifest_path):
        raise ConfigError(f"{out_dir}: no {MANIFEST}; run the suite first")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    measures_list = []
    ci_values = []
    for name, record in manifest["cells"].items():
        if not record.get("external"):
            continue
        cell_dir = os.path.join(out_dir, "cells", name)
        cluster_measures = read_clusters_csv(os.path.join(cell_dir, "clusters.csv"))
        usability = _usability_from_record(record["usability"])
        measures_list.append(aggregate_experiment(name, cluster_measures, usability))
        ci_values.append(record.get("ci"))
    if len(measures_list) < 2:
        raise ConfigError("scoring needs at least two externally evaluated cells")
    card = build_scorecard(measures_list, ci=ci_values)
    _persist_scorecard(out_dir, card)
    return render_scorecard(card)


def _usability_from_record(record: dict):
    from .external import UsabilityReport

    return UsabilityReport(
        zero_profile_represented=bool(record["zero_profile_represented"]),
        membership_threshold_ratio=float(record["membership_threshold_ratio"]),
        threshold=int(record["threshold"]),
        n_clusters=int(record["n_clusters"]),
        n_above_threshold=int(record["n_above_threshold"]),
    )


def run_archetypes(config_path, out_dir) -> dict:
    """Fit the archetype model for one evaluated cell and assemble filters.

    The config names the experiment, the survey file (relative to the
    config) and a list of socio-economic filters; results land in
    ``<out_dir>/archetypes/``.  Returns the report payload.
    """
    from .archetypes import (
        DEFAULT_OR_THRESHOLD,
        L2_DEFAULT,
        MAX_ITER_DEFAULT,
        assemble_archetype,
        associations,
        build_training_set,
        fit_archetype_model,
        load_survey,
    )
    from .data import DAYTYPES, SEASONS, DEFAULT_WINTER_MONTHS

    with open(config_path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{config_path}: archetype config must be a mapping")
    for key in ("experiment", "survey"):
        if key not in raw:
            raise ConfigError(f"{config_path}: missing {key!r}")
    entries = raw.get("filters") or []
    if not isinstance(entries, list) or not all(
        isinstance(e, dict) for e in entries
    ):
        raise ConfigError(
            f"{config_path}: 'filters' must be a list of mappings like "
            "[{name: ..., <attribute>: <value>}, ...]"
        )
    manifest_path = os.path.join(out_dir, MANIFEST)
    if not os.path.exists(manifest_path):
        raise ConfigError(f"{out_dir}: no {MANIFEST}; run the suite first")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    name = raw["experiment"]
    if name not in manifest["cells"]:
        raise ConfigError(f"unknown experiment {name!r}")
    if manifest["cells"][name]["status"] != "completed":
        raise ConfigError(f"experiment {name!r} did not complete")
    dataset = load_profiles(manifest["data"])
    labels = read_labels_csv(
        os.path.join(out_dir, "cells", name, "labels.csv"), len(dataset)
    )
    config_dir = os.path.dirname(os.path.abspath(config_path))
    survey = load_survey(os.path.join(config_dir, raw["survey"]))
    winter = raw.get("winter_months")
    winter = frozenset(winter) if winter else DEFAULT_WINTER_MONTHS
    training = build_training_set(dataset, labels, survey, winter_months=winter)
    model = fit_archetype_model(
        training,
        l2=float(raw.get("l2", L2_DEFAULT)),
        max_iter=int(raw.get("max_iter", MAX_ITER_DEFAULT)),
    )
    threshold = float(raw.get("threshold", DEFAULT_OR_THRESHOLD))
    report = {
        "experiment": name,
        "or_threshold": threshold,
        "l2": float(raw.get("l2", L2_DEFAULT)),
        "n_training_rows": int(len(training.y)),
        "skipped_rows": training.skipped,
        "n_iter": model.n_iter,
        "converged": model.converged,
        "associations": [
            {"feature": a.feature, "cluster": a.cluster_id, "odds_ratio": a.odds_ratio}
            for a in associations(model, threshold)
        ],
        "archetypes": [],
    }
    for entry in entries:
        entry = dict(entry)
        label = entry.pop("name", None)
        archetype = assemble_archetype(model, entry, threshold=threshold, name=label)
        report["archetypes"].append(
            {
                "name": archetype.name,
                "filters": archetype.filters,
                "clusters": [
                    {
                        "cluster": c.cluster_id,
                        "daytypes": c.daytypes,
                        "seasons": c.seasons,
                    }
                    for c in archetype.clusters
                ],
                "coverage": {
                    season: {
                        day: bool(archetype.coverage[si, di])
                        for di, day in enumerate(DAYTYPES)
                    }
                    for si, season in enumerate(SEASONS)
                },
                "warnings": archetype.warnings,
            }
        )
    dest = os.path.join(out_dir, "archetypes")
    os.makedirs(dest, exist_ok=True)
    _write_json(os.path.join(dest, "archetypes.json"), report)
    return report


def export_daytype_likelihood(out_dir, experiment: str, dest=None) -> str:
    """Copy one cell's day-type likelihood table to ``dest`` and return it."""
    src = os.path.join(out_dir, "cells", experiment, "daytype_likelihood.csv")
    if not os.path.exists(src):
        raise ConfigError(
            f"no daytype likelihoods for {experiment!r}; was it evaluated?"
        )
    if dest is None:
        exports = os.path.join(out_dir, "exports")
        os.makedirs(exports, exist_ok=True)
        dest = os.path.join(exports, f"{experiment}_daytype_likelihood.csv")
    shutil.copyfile(src, dest)
    return dest
