import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tone(length: int, cycles: float, amplitude: float = 1.0, phase: float = 0.0) -> np.ndarray:
    t = np.arange(length)
    return amplitude * np.cos(2 * np.pi * cycles * t / length + phase)


def sinusoids(length: int, periods, amplitudes=None) -> np.ndarray:
    t = np.arange(length)
    amplitudes = amplitudes or [1.0] * len(periods)
    return sum(a * np.sin(2 * np.pi * t / p) for a, p in zip(amplitudes, periods))


@pytest.fixture
def write_csv(tmp_path):
    """Write an N x T array as a dataset CSV with an hourly timestamp column."""

    def _write(values, name: str = "toy", columns=None) -> Path:
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        columns = columns or [f"v{i}" for i in range(values.shape[0])]
        frame = pd.DataFrame(dict(zip(columns, values)))
        stamps = pd.date_range("2020-01-01", periods=values.shape[1], freq="h")
        frame.insert(0, "date", stamps.strftime("%Y-%m-%d %H:%M:%S"))
        path = tmp_path / f"{name}.csv"
        frame.to_csv(path, index=False)
        return path

    return _write


@pytest.fixture
def write_config(tmp_path):
    """Small-model run config pointing at ``csv_path``."""

    def _write(csv_path: Path, name: str = "run", **overrides) -> Path:
        config = {
            "data": {"path": str(csv_path), "split_ratios": [0.8, 0.1, 0.1]},
            "model": {
                "window_len": 16,
                "horizon": 4,
                "n_vars": 2,
                "d_model": 16,
                "n_layers": 1,
                "n_static_filters": 2,
                "delta_f": 1,
            },
            "train": {"lr": 0.005, "epochs": 1, "batch_size": 16, "progress": False, "prefetch": 0},
            "output_dir": str(tmp_path / "runs"),
            "seed": 7,
        }
        for section, values in overrides.items():
            if isinstance(values, dict):
                config[section].update(values)
            else:
                config[section] = values
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        return path

    return _write
