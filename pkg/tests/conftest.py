import numpy as np
import pytest

from loadshapes.synth import spec_from_dict, synthesize

# Four context templates, peak-normalized to about 1.0, chosen to be far
# apart after unit normalization.
WINTER_WEEKDAY = (
    [0.10] * 5
    + [0.35, 0.70, 1.00, 0.80, 0.40]
    + [0.25] * 6
    + [0.45, 0.90, 1.00, 1.00, 0.80, 0.50, 0.25, 0.15]
)
WINTER_WEEKEND = (
    [0.12] * 7
    + [0.30, 0.50, 0.70, 0.90, 1.00, 0.90, 0.70, 0.55, 0.50, 0.50]
    + [0.65, 0.80, 0.90, 0.70, 0.45, 0.25, 0.15]
)
SUMMER_WEEKDAY = (
    [0.08] * 6
    + [0.20, 0.30, 0.22, 0.20, 0.20, 0.20]
    + [0.20] * 5
    + [0.30, 0.55, 0.70, 0.60, 0.40, 0.20, 0.10]
)
SUMMER_WEEKEND = (
    [0.10] * 8
    + [0.35, 0.60, 0.80, 0.90, 0.85, 0.70, 0.50, 0.40]
    + [0.35] * 4
    + [0.45, 0.40, 0.25, 0.12]
)

GROUP_SURVEY = {
    "low": {
        "water": "river/dam",
        "wall": "daub/mud/clay",
        "floor_band": "0-50",
        "income_band": "R0-R1.8k",
    },
    "mid": {
        "water": "street taps",
        "wall": "corr.iron/zinc",
        "floor_band": "50-80",
        "income_band": "R3.2k-R7.8k",
    },
    "high": {
        "water": "tap in house",
        "wall": "brick",
        "floor_band": "150-250",
        "income_band": "R19k-R24.5k",
    },
}

GROUP_AMPLITUDES = {"low": [0.9, 1.1], "mid": [7.0, 9.0], "high": [38.0, 46.0]}


def planted_spec_dict(households_per_group=100, noise=0.04):
    """3 consumption groups x 4 temporal patterns, winter + summer month."""
    templates = [
        {"name": "wd_winter", "when": {"season": "winter", "daytype": "weekday"},
         "shape": WINTER_WEEKDAY},
        {"name": "we_winter", "when": {"season": "winter", "daytype": "weekend"},
         "shape": WINTER_WEEKEND},
        {"name": "wd_summer", "when": {"season": "summer", "daytype": "weekday"},
         "shape": SUMMER_WEEKDAY},
        {"name": "we_summer", "when": {"season": "summer", "daytype": "weekend"},
         "shape": SUMMER_WEEKEND},
    ]
    return {
        "seed": 2013,
        "dates": [
            {"start": "2013-06-01", "end": "2013-06-30"},
            {"start": "2013-10-01", "end": "2013-10-30"},
        ],
        "groups": [
            {
                "name": name,
                "households": households_per_group,
                "amplitude": GROUP_AMPLITUDES[name],
                "noise": noise,
                "survey": GROUP_SURVEY[name],
                "templates": templates,
            }
            for name in ("low", "mid", "high")
        ],
    }


@pytest.fixture(scope="session")
def planted():
    """The 18 000-profile planted dataset shared by the heavier tests."""
    return synthesize(spec_from_dict(planted_spec_dict()), seed=2013)


@pytest.fixture
def rng():
    return np.random.default_rng(99)


@pytest.fixture
def small_dataset():
    """Tiny two-household dataset with hand-checkable values."""
    from loadshapes.data import ProfileDataset
    import datetime as dt

    values = np.zeros((4, 24))
    values[0, :] = 1.0
    values[1, 8] = 2.0
    values[2, :] = 0.5
    values[3, 12] = 3.0
    ids = ["a", "a", "b", "b"]
    dates = [
        dt.date(2013, 6, 3),
        dt.date(2013, 6, 4),
        dt.date(2013, 6, 3),
        dt.date(2013, 10, 5),
    ]
    return ProfileDataset(ids, dates, values)
