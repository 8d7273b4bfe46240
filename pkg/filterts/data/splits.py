"""Chronological train/val/test splits with train-only z-scoring.

Val and test views borrow the ``window_len`` steps that precede them as lookback
context; their targets never reach past their own split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from filterts.data.dataset import RATIO_PROTOCOL, Dataset
from filterts.errors import ContractError

STATS_FORMAT_VERSION = 1

# rows per split in the month-based ETT protocol (12/4/4 months of 30 days)
_ETT_HOUR_BORDERS = (12 * 30 * 24, 4 * 30 * 24, 4 * 30 * 24)


@dataclass(frozen=True)
class ScalerStats:
    mean: np.ndarray
    std: np.ndarray
    variables: tuple[str, ...] = ()

    @classmethod
    def fit(cls, train: np.ndarray, variables=()) -> ScalerStats:
        mean = train.mean(axis=-1)
        std = train.std(axis=-1)
        std = np.where(std > 0, std, 1.0)
        return cls(mean=mean, std=std, variables=tuple(variables))

    def standardize(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean[:, None]) / self.std[:, None]

    def destandardize(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std[:, None] + self.mean[:, None]

    def to_dict(self) -> dict:
        return {
            "format_version": STATS_FORMAT_VERSION,
            "variables": list(self.variables),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> ScalerStats:
        if raw.get("format_version") != STATS_FORMAT_VERSION:
            raise ContractError(f"unsupported stats format version {raw.get('format_version')!r}")
        return cls(
            mean=np.asarray(raw["mean"], dtype=np.float64),
            std=np.asarray(raw["std"], dtype=np.float64),
            variables=tuple(raw.get("variables", ())),
        )


def save_stats(stats: ScalerStats, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(stats.to_dict(), indent=2) + "\n")
    return path


def load_stats(path: Path | str) -> ScalerStats:
    return ScalerStats.from_dict(json.loads(Path(path).read_text()))


@dataclass
class SplitView:
    name: str
    values: np.ndarray
    context: int
    start: int

    @property
    def length(self) -> int:
        """Steps owned by this split, without the borrowed lookback context."""
        return self.values.shape[-1] - self.context


def split_lengths(total: int, ratios=(0.7, 0.1, 0.2), protocol: str = RATIO_PROTOCOL) -> tuple[int, int, int]:
    """Rows in (train, val, test)."""
    if protocol == RATIO_PROTOCOL:
        ratios = tuple(float(r) for r in ratios)
        if len(ratios) != 3 or min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
            raise ContractError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
        n_train = int(np.floor(total * ratios[0] + 1e-9))
        n_test = int(np.floor(total * ratios[2] + 1e-9))
        return n_train, total - n_train - n_test, n_test

    if protocol == "ett_hour":
        lengths = _ETT_HOUR_BORDERS
    elif protocol == "ett_minute":
        lengths = tuple(4 * n for n in _ETT_HOUR_BORDERS)
    else:
        raise ContractError(f"unknown split protocol {protocol!r}")
    if sum(lengths) > total:
        raise ContractError(f"{protocol} split needs {sum(lengths)} rows, dataset has {total}")
    return lengths


def split_and_standardize(
    dataset: Dataset, window_len: int, horizon: int
) -> tuple[SplitView, SplitView, SplitView, ScalerStats]:
    values = dataset.array
    n_train, n_val, n_test = split_lengths(dataset.length, dataset.split_ratios, dataset.split_protocol)

    for split, owned, need in (
        ("train", n_train, window_len + horizon),
        ("val", n_val, horizon),
        ("test", n_test, horizon),
    ):
        if owned < need:
            raise ContractError(
                f"{split} split has {owned} steps, too short for one window "
                f"(lookback {window_len} + horizon {horizon})"
            )

    stats = ScalerStats.fit(values[:, :n_train], dataset.variables)
    scaled = stats.standardize(values)

    val_start = n_train - window_len
    test_start = n_train + n_val - window_len
    train = SplitView("train", scaled[:, :n_train], context=0, start=0)
    val = SplitView("val", scaled[:, val_start : n_train + n_val], context=window_len, start=val_start)
    test = SplitView(
        "test", scaled[:, test_start : n_train + n_val + n_test], context=window_len, start=test_start
    )
    return train, val, test, stats
