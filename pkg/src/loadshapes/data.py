"""Core data model: daily load profiles, temporal context and consumption stats.

A daily load profile is a vector of 24 hourly mean currents (amperes) drawn
by one household on one calendar day.  Datasets are stored column-oriented
(one ``(n, 24)`` float array plus parallel id/date arrays) so the clustering
and evaluation stages can work on contiguous numpy memory.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

HOURS = 24
VOLTAGE = 230.0

DAYTYPES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
SEASONS = ("winter", "summer")

#: Months treated as the cool / high-demand season by default (May-August).
DEFAULT_WINTER_MONTHS = frozenset({5, 6, 7, 8})


@dataclass(frozen=True)
class DailyLoadProfile:
    """One household-day: 24 non-negative hourly mean amperes."""

    household_id: str
    date: dt.date
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (HOURS,):
            raise DataError(
                f"profile for {self.household_id}/{self.date} has shape "
                f"{values.shape}, expected ({HOURS},)"
            )
        if not np.all(np.isfinite(values)):
            raise DataError(
                f"profile for {self.household_id}/{self.date} has non-finite values"
            )
        if np.any(values < 0):
            raise DataError(
                f"profile for {self.household_id}/{self.date} has negative values"
            )
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class TemporalAttributes:
    """Calendar context of one profile: day of week, month, season."""

    daytype: str
    month: int
    season: str


@dataclass(frozen=True)
class HouseholdStats:
    """Average monthly consumption of one household over its observed span."""

    household_id: str
    amc_kwh: float
    n_days: int
    n_months: int


def temporal_attributes(date, winter_months=DEFAULT_WINTER_MONTHS):
    """Return the :class:`TemporalAttributes` of a calendar date."""
    season = "winter" if date.month in winter_months else "summer"
    return TemporalAttributes(DAYTYPES[date.weekday()], date.month, season)


class ProfileDataset:
    """Immutable column-oriented collection of daily load profiles.

    Rows keep their load order; ``household_rows`` gives the row indices of
    one household so per-household aggregation never re-scans the table.
    """

    def __init__(self, household_ids, dates, values):
        ids = np.asarray(household_ids, dtype=object)
        values = np.ascontiguousarray(values, dtype=np.float64)
        dates = np.asarray(dates, dtype="datetime64[D]")
        n = len(ids)
        if values.shape != (n, HOURS) or dates.shape != (n,):
            raise DataError(
                f"inconsistent dataset shapes: {n} ids, {dates.shape[0]} dates, "
                f"values {values.shape}"
            )
        if n and not np.all(np.isfinite(values)):
            raise DataError("dataset contains non-finite values")
        if n and values.size and values.min() < 0:
            raise DataError("dataset contains negative values")
        self._ids = ids
        self._dates = dates
        self._values = values
        for arr in (self._ids, self._dates, self._values):
            arr.setflags(write=False)
        index: dict = {}
        for row, hid in enumerate(ids):
            index.setdefault(hid, []).append(row)
        self._household_index = {
            hid: np.asarray(rows, dtype=np.intp) for hid, rows in index.items()
        }

    def __len__(self):
        return len(self._ids)

    def __getitem__(self, row) -> DailyLoadProfile:
        date = self._dates[row].astype(dt.date)
        return DailyLoadProfile(self._ids[row], date, np.array(self._values[row]))

    @property
    def values(self) -> np.ndarray:
        """(n, 24) float64 array of hourly amperes; read-only."""
        return self._values

    @property
    def household_ids(self) -> np.ndarray:
        return self._ids

    @property
    def dates(self) -> np.ndarray:
        """(n,) datetime64[D] array; read-only."""
        return self._dates

    def households(self) -> list:
        """Household ids in order of first appearance."""
        return list(self._household_index)

    def household_rows(self, household_id) -> np.ndarray:
        try:
            return self._household_index[household_id]
        except KeyError:
            raise DataError(f"unknown household id {household_id!r}") from None

    def select(self, rows) -> "ProfileDataset":
        """New dataset containing ``rows`` (index array) in the given order."""
        rows = np.asarray(rows, dtype=np.intp)
        return ProfileDataset(self._ids[rows], self._dates[rows], self._values[rows])

    def daytype_indices(self) -> np.ndarray:
        """(n,) int array, 0=Mon .. 6=Sun."""
        # datetime64 epoch (1970-01-01) fell on a Thursday, i.e. weekday 3.
        return ((self._dates.astype(np.int64) + 3) % 7).astype(np.intp)

    def months(self) -> np.ndarray:
        """(n,) int array of calendar months, 1..12."""
        m = self._dates.astype("datetime64[M]")
        y = self._dates.astype("datetime64[Y]")
        return (m - y.astype("datetime64[M]")).astype(np.int64) + 1

    def seasons(self, winter_months=DEFAULT_WINTER_MONTHS) -> np.ndarray:
        """(n,) bool array, True where the row falls in a winter month."""
        return np.isin(self.months(), list(winter_months))


def from_profiles(profiles: Iterable[DailyLoadProfile]) -> ProfileDataset:
    profiles = list(profiles)
    ids = [p.household_id for p in profiles]
    dates = [p.date for p in profiles]
    values = (
        np.stack([p.values for p in profiles])
        if profiles
        else np.empty((0, HOURS))
    )
    return ProfileDataset(ids, dates, values)


_CSV_HEADER = ["household_id", "date"] + [f"h{i:02d}" for i in range(HOURS)]


def load_profiles(path) -> ProfileDataset:
    """Read a profiles CSV (``household_id,date,h00..h23``).

    Malformed rows are rejected with their file line number rather than
    silently dropped.
    """
    ids, dates, rows = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _CSV_HEADER:
            raise DataError(f"{path}: unexpected header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 + HOURS:
                raise DataError(f"{path}:{lineno}: expected {2 + HOURS} fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[1])
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(values)):
                raise DataError(f"{path}:{lineno}: non-finite value")
            if min(values) < 0:
                raise DataError(f"{path}:{lineno}: negative value")
            ids.append(row[0])
            dates.append(date)
            rows.append(values)
    values = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, HOURS))
    return ProfileDataset(ids, dates, values)


def save_profiles(dataset: ProfileDataset, path) -> None:
    """Inverse of :func:`load_profiles`; floats are written with repr precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for hid, date, values in zip(
            dataset.household_ids, dataset.dates, dataset.values
        ):
            writer.writerow([hid, str(date)] + [repr(float(v)) for v in values])


def compute_amc(dataset: ProfileDataset, household_id) -> HouseholdStats:
    """Average monthly consumption (kWh) of one household.

    Hourly amperes are converted at 230 V, summed over every observed day and
    divided by the number of distinct observed (year, month) pairs.
    """
    rows = dataset.household_rows(household_id)
    total_kwh = float(dataset.values[rows].sum()) * VOLTAGE / 1000.0
    months = np.unique(dataset.dates[rows].astype("datetime64[M]"))
    return HouseholdStats(household_id, total_kwh / len(months), len(rows), len(months))


def compute_all_amc(dataset: ProfileDataset) -> Mapping[str, HouseholdStats]:
    """AMC stats for every household in the dataset."""
    return {hid: compute_amc(dataset, hid) for hid in dataset.households()}


def percentile_bins(values: Sequence[float]) -> np.ndarray:
    """Assign each value to one of 100 equal-frequency bins (1..100).

    Tied values share the bin of the lower rank: a value's bin is
    ``floor(100 * count_strictly_less / n) + 1``.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n == 0:
        return np.empty(0, dtype=np.intp)
    ordered = np.sort(values)
    count_less = np.searchsorted(ordered, values, side="left")
    return (count_less * 100 // n + 1).astype(np.intp)
