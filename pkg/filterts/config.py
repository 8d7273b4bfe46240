"""Run configuration: a JSON file parsed into nested dataclasses.

Precedence is command-line flag > config file > dataclass default. Every run writes its
effective configuration to ``<run_dir>/config.json``; feeding that file back in
reproduces the run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from filterts.data.dataset import SPLIT_PROTOCOLS, CSVSchema, Dataset, load_csv
from filterts.errors import ConfigError
from filterts.model import ModelConfig
from filterts.train.loop import TrainConfig

MODES = ("build-bank", "train", "eval", "inspect")
# keys that name where or how often a run happens, not what it computes
_UNHASHED = ("output_dir", "seed", "mode")


def _reject_unknown(cls, raw: dict, prefix: str) -> None:
    if not isinstance(raw, dict):
        raise ConfigError(f"{prefix or 'config'} must be a JSON object, got {type(raw).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        key = f"{prefix}.{unknown[0]}" if prefix else unknown[0]
        raise ConfigError(f"unknown key {key}")


@dataclass
class DataConfig:
    path: str = "data/ETTh1.csv"
    name: str | None = None
    timestamp_column: str | None = None
    variables: list[str] | None = None
    split_ratios: list[float] | None = None
    split_protocol: str | None = None

    def validate(self) -> DataConfig:
        if self.split_ratios is not None:
            if len(self.split_ratios) != 3 or abs(sum(self.split_ratios) - 1.0) > 1e-9:
                raise ConfigError(f"data.split_ratios must be three values summing to 1, got {self.split_ratios}")
        if self.split_protocol is not None and self.split_protocol not in SPLIT_PROTOCOLS:
            raise ConfigError(f"data.split_protocol must be one of {SPLIT_PROTOCOLS}, got {self.split_protocol!r}")
        return self

    @property
    def dataset_name(self) -> str:
        return self.name or Path(self.path).stem

    def load(self) -> Dataset:
        schema = CSVSchema(
            timestamp_column=self.timestamp_column,
            variables=tuple(self.variables) if self.variables else None,
        )
        return load_csv(
            self.path,
            schema,
            name=self.dataset_name,
            split_ratios=tuple(self.split_ratios) if self.split_ratios else None,
            split_protocol=self.split_protocol,
        )


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    horizons: list[int] | None = None
    output_dir: str = "runs"
    seed: int = 0
    mode: str = "train"

    def __post_init__(self):
        if self.horizons is None:
            self.horizons = [self.model.horizon]

    def validate(self) -> RunConfig:
        self.data.validate()
        self.model.validate()
        self.train.validate()
        if not self.horizons or any(int(h) < 1 for h in self.horizons):
            raise ConfigError(f"horizons must be a non-empty list of positive ints, got {self.horizons}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        return self

    def model_for(self, horizon: int) -> ModelConfig:
        return replace(self.model, horizon=int(horizon))

    def warnings(self) -> list[str]:
        notes = []
        for h in self.horizons:
            notes += [n for n in self.model_for(h).grid_warnings() if n not in notes]
        return notes + self.train.grid_warnings()

    def to_dict(self) -> dict:
        return {
            "data": asdict(self.data),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "horizons": [int(h) for h in self.horizons],
            "output_dir": self.output_dir,
            "seed": self.seed,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> RunConfig:
        _reject_unknown(cls, raw, "")
        try:
            data_raw = raw.get("data", {})
            _reject_unknown(DataConfig, data_raw, "data")
            config = cls(
                data=DataConfig(**data_raw),
                model=ModelConfig.from_dict(raw.get("model", {})),
                train=TrainConfig.from_dict(raw.get("train", {})),
                horizons=raw.get("horizons"),
                output_dir=raw.get("output_dir", "runs"),
                seed=int(raw.get("seed", 0)),
                mode=raw.get("mode", "train"),
            )
        except TypeError as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc
        return config.validate()

    def fingerprint(self) -> str:
        """First 12 hex digits of the sha256 of everything that shapes the results."""
        payload = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        payload["train"] = {k: v for k, v in payload["train"].items() if k != "progress"}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.output_dir) / f"{self.data.dataset_name}-{self.fingerprint()}-seed{self.seed}"


def load_config(path: Path | str | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return RunConfig.from_dict(raw)


def apply_overrides(
    config: RunConfig,
    seed: int | None = None,
    horizon: int | None = None,
    out: Path | str | None = None,
    mode: str | None = None,
) -> RunConfig:
    if seed is not None:
        config.seed = seed
    if horizon is not None:
        config.horizons = [horizon]
    if out is not None:
        config.output_dir = str(out)
    if mode is not None:
        config.mode = mode
    return config.validate()


def echo_config(config: RunConfig, run_dir: Path | str) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / "config.json"
    path.write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    return path
