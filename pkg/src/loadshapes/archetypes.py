"""Customer archetypes: link clusters to household context via odds ratios.

A multinomial logistic regression predicts a profile's cluster from one-hot
socio-economic survey answers plus day type and season.  Each coefficient's
odds ratio says how strongly a feature value pulls toward a cluster; values
at or above a threshold are "associated".  An archetype is the set of
clusters associated with every value of a socio-economic filter, annotated
with the day types and seasons each cluster leans toward.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import DAYTYPES, SEASONS, DEFAULT_WINTER_MONTHS, ProfileDataset
from .errors import ConfigError, DataError

WATER_VALUES = ("river/dam", "street taps", "tap in yard", "tap in house")
WALL_VALUES = ("daub/mud/clay", "corr.iron/zinc", "asbestos", "blocks", "brick")
FLOOR_VALUES = ("0-50", "50-80", "80-150", "150-250")
INCOME_VALUES = (
    "R0-R1.8k",
    "R1.8-R3.2k",
    "R3.2k-R7.8k",
    "R7.8k-R11.6k",
    "R19k-R24.5k",
)

SOCIO_ATTRIBUTES = {
    "water": WATER_VALUES,
    "wall": WALL_VALUES,
    "floor_band": FLOOR_VALUES,
    "income_band": INCOME_VALUES,
}

#: Odds ratio at or above which a feature value counts as associated.
DEFAULT_OR_THRESHOLD = 1.05

L2_DEFAULT = 1.0
MAX_ITER_DEFAULT = 500
GRAD_TOL = 1e-5


@dataclass(frozen=True)
class SurveyRecord:
    household_id: str
    water: str
    wall: str
    floor_band: str
    income_band: str

    def __post_init__(self):
        for attr, vocab in SOCIO_ATTRIBUTES.items():
            value = getattr(self, attr)
            if value not in vocab:
                raise DataError(
                    f"household {self.household_id!r}: {attr} value {value!r} "
                    f"not in vocabulary {vocab}"
                )


def load_survey(path) -> dict:
    """Read a survey CSV (household_id,water,wall,floor_band,income_band)."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"household_id", *SOCIO_ATTRIBUTES}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(f"{path}: expected columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                record = SurveyRecord(
                    household_id=row["household_id"],
                    water=row["water"],
                    wall=row["wall"],
                    floor_band=row["floor_band"],
                    income_band=row["income_band"],
                )
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            out[record.household_id] = record
    return out


def feature_names() -> list:
    """Ordered one-hot feature tokens: socio vocab, then day types, seasons."""
    names = []
    for attr, vocab in SOCIO_ATTRIBUTES.items():
        names.extend(f"{attr}={v}" for v in vocab)
    names.extend(f"daytype={d}" for d in DAYTYPES)
    names.extend(f"season={s}" for s in SEASONS)
    return names


@dataclass
class TrainingSet:
    X: np.ndarray  # (n, f) one-hot features
    y: np.ndarray  # (n,) class index into class_ids
    feature_names: list
    class_ids: np.ndarray  # global cluster id per class index
    skipped: int  # labeled rows without a survey record


def build_training_set(
    dataset: ProfileDataset,
    labels,
    survey: dict,
    winter_months=DEFAULT_WINTER_MONTHS,
) -> TrainingSet:
    """One training row per clustered profile whose household has a survey."""
    labels = np.asarray(labels)
    names = feature_names()
    col = {name: i for i, name in enumerate(names)}
    daytype_idx = dataset.daytype_indices()
    winter = dataset.seasons(winter_months)
    rows, targets = [], []
    skipped = 0
    for row in np.flatnonzero(labels >= 0):
        record = survey.get(dataset.household_ids[row])
        if record is None:
            skipped += 1
            continue
        x = np.zeros(len(names))
        for attr in SOCIO_ATTRIBUTES:
            x[col[f"{attr}={getattr(record, attr)}"]] = 1.0
        x[col[f"daytype={DAYTYPES[daytype_idx[row]]}"]] = 1.0
        season = "winter" if winter[row] else "summer"
        x[col[f"season={season}"]] = 1.0
        rows.append(x)
        targets.append(labels[row])
    if not rows:
        raise DataError("no clustered rows with survey records to train on")
    class_ids, y = np.unique(targets, return_inverse=True)
    return TrainingSet(
        X=np.asarray(rows),
        y=y.astype(np.intp),
        feature_names=names,
        class_ids=class_ids,
        skipped=skipped,
    )


def softmax(logits) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row max."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(coef, intercept, X, y, l2):
    """Mean cross-entropy plus L2 penalty (intercept unpenalized).

    Returns ``(loss, grad_coef, grad_intercept)``; the penalty is
    ``l2 / (2n) * sum(coef**2)``.
    """
    n = X.shape[0]
    probs = softmax(X @ coef + intercept)
    ll = -np.log(probs[np.arange(n), y])
    loss = float(ll.mean()) + l2 / (2.0 * n) * float((coef**2).sum())
    probs[np.arange(n), y] -= 1.0
    grad_coef = X.T @ probs / n + (l2 / n) * coef
    grad_intercept = probs.sum(axis=0) / n
    return loss, grad_coef, grad_intercept


@dataclass
class ArchetypeModel:
    feature_names: list
    class_ids: np.ndarray
    coef: np.ndarray  # (f, k)
    intercept: np.ndarray  # (k,)
    n_iter: int
    converged: bool
    loss_history: list = field(default_factory=list)

    def odds_ratio(self, feature: str, cluster_id: int) -> float:
        f = self.feature_names.index(feature)
        k = int(np.flatnonzero(self.class_ids == cluster_id)[0])
        return float(np.exp(self.coef[f, k]))

    def predict_proba(self, X) -> np.ndarray:
        return softmax(np.asarray(X) @ self.coef + self.intercept)

    def predict(self, X) -> np.ndarray:
        return self.class_ids[np.argmax(self.predict_proba(X), axis=1)]


def fit_archetype_model(
    training: TrainingSet,
    l2=L2_DEFAULT,
    max_iter=MAX_ITER_DEFAULT,
    tol=GRAD_TOL,
) -> ArchetypeModel:
    """Fit the softmax regression by gradient descent with backtracking.

    Weights start at zero (deterministic); each step halves until the loss
    decreases, so the loss history is monotone non-increasing.  Training
    stops when the gradient norm falls below ``tol`` or at ``max_iter``.
    """
    if len(training.class_ids) < 2:
        raise ConfigError("archetype model needs >= 2 clusters to discriminate")
    X, y = training.X, training.y
    f, k = X.shape[1], len(training.class_ids)
    coef = np.zeros((f, k))
    intercept = np.zeros(k)
    loss, g_coef, g_int = loss_and_grad(coef, intercept, X, y, l2)
    history = [loss]
    step = 1.0
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        grad_norm = float(np.sqrt((g_coef**2).sum() + (g_int**2).sum()))
        if grad_norm < tol:
            converged = True
            break
        # Backtracking line search, reusing the last accepted step as the
        # starting guess (doubled, so the step can also grow back).
        step = min(step * 2.0, 64.0)
        while True:
            new_coef = coef - step * g_coef
            new_int = intercept - step * g_int
            new_loss, new_gc, new_gi = loss_and_grad(new_coef, new_int, X, y, l2)
            if new_loss <= loss or step < 1e-12:
                break
            step *= 0.5
        coef, intercept = new_coef, new_int
        loss, g_coef, g_int = new_loss, new_gc, new_gi
        history.append(loss)
    return ArchetypeModel(
        feature_names=training.feature_names,
        class_ids=training.class_ids,
        coef=coef,
        intercept=intercept,
        n_iter=n_iter,
        converged=converged,
        loss_history=history,
    )


@dataclass(frozen=True)
class Association:
    feature: str
    cluster_id: int
    odds_ratio: float


def associations(model: ArchetypeModel, threshold=DEFAULT_OR_THRESHOLD) -> list:
    """All (feature, cluster) pairs whose odds ratio reaches the threshold."""
    out = []
    ors = np.exp(model.coef)
    for fi, feature in enumerate(model.feature_names):
        for ki, cid in enumerate(model.class_ids):
            if ors[fi, ki] >= threshold:
                out.append(Association(feature, int(cid), float(ors[fi, ki])))
    return out


@dataclass
class ArchetypeCluster:
    cluster_id: int
    daytypes: list
    seasons: list


@dataclass
class Archetype:
    name: str
    filters: dict  # attribute -> value(s)
    clusters: list  # of ArchetypeCluster
    coverage: np.ndarray  # (2 seasons, 7 daytypes) bool
    warnings: list

    def covered(self) -> bool:
        return bool(self.coverage.all())


def assemble_archetype(
    model: ArchetypeModel,
    filters: dict,
    threshold=DEFAULT_OR_THRESHOLD,
    name: Optional[str] = None,
) -> Archetype:
    """Clusters associated with every value of the filter, with coverage.

    ``filters`` maps socio-economic attributes to a value or list of
    values; unknown attribute names or vocabulary values raise
    :class:`DataError`.  The coverage matrix marks which (season, daytype)
    cells are claimed by at least one matching cluster.
    """
    wanted = []
    for attr, values in filters.items():
        if attr not in SOCIO_ATTRIBUTES:
            raise DataError(f"unknown archetype attribute {attr!r}")
        if isinstance(values, str):
            values = [values]
        for value in values:
            if value not in SOCIO_ATTRIBUTES[attr]:
                raise DataError(
                    f"unknown {attr} value {value!r}; expected one of "
                    f"{SOCIO_ATTRIBUTES[attr]}"
                )
            wanted.append(f"{attr}={value}")
    if not wanted:
        raise ConfigError("archetype filter selects nothing")
    assoc = associations(model, threshold)
    by_cluster = {}
    for a in assoc:
        by_cluster.setdefault(a.cluster_id, set()).add(a.feature)
    clusters = []
    coverage = np.zeros((len(SEASONS), len(DAYTYPES)), dtype=bool)
    for cid in sorted(by_cluster):
        features = by_cluster[cid]
        if not all(w in features for w in wanted):
            continue
        daytypes = [d for d in DAYTYPES if f"daytype={d}" in features]
        seasons = [s for s in SEASONS if f"season={s}" in features]
        clusters.append(ArchetypeCluster(cid, daytypes, seasons))
        for s in seasons:
            si = SEASONS.index(s)
            for d in daytypes:
                coverage[si, DAYTYPES.index(d)] = True
    warnings = []
    if not clusters:
        warnings.append("no cluster is associated with all filter values")
    for si, s in enumerate(SEASONS):
        missing = [DAYTYPES[di] for di in range(7) if not coverage[si, di]]
        if missing:
            warnings.append(f"{s}: no coverage for {', '.join(missing)}")
    return Archetype(
        name=name or "+".join(wanted),
        filters=dict(filters),
        clusters=clusters,
        coverage=coverage,
        warnings=warnings,
    )
