"""Training and evaluation loop.

One model is fitted per horizon. Every epoch runs over shuffled training windows with
Adam at ``lr * lr_decay**epoch``, then scores the validation split. Records go to two
JSON-lines files in the run directory: ``metrics.jsonl`` (deterministic for a fixed seed)
and ``timings.jsonl`` (wall-clock seconds).
"""

from __future__ import annotations

import copy
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from tqdm import tqdm

from filterts.autodiff.tensor import Tensor, mul, reduce_mean, sub
from filterts.data.splits import SplitView
from filterts.data.windows import prefetch, window_count, window_iter
from filterts.errors import ConfigError, ContractError, DimensionError, NonFiniteError
from filterts.io.checkpoint import Checkpoint
from filterts.layers.sgfilter import SplitFingerprint
from filterts.model import FilterTS
from filterts.train.optim import AdamState, adam_step, clip_grad_norm, collect_grads

LR_GRID = (1e-4, 5e-4, 1e-3, 5e-3)
SELECTIONS = ("best_val", "last")
METRICS_FILE = "metrics.jsonl"
TIMINGS_FILE = "timings.jsonl"


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    lr_decay: float = 0.5
    betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    clip_norm: float | None = None
    selection: str = "best_val"
    shuffle: bool = True
    prefetch: int = 2
    progress: bool = True

    def validate(self) -> TrainConfig:
        if self.lr <= 0:
            raise ConfigError(f"train.lr must be positive, got {self.lr}")
        if self.epochs < 0:
            raise ConfigError(f"train.epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"train.batch_size must be >= 1, got {self.batch_size}")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError(f"train.lr_decay must lie in (0, 1], got {self.lr_decay}")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ConfigError(f"train.betas must be two values in [0, 1), got {self.betas}")
        if self.adam_eps <= 0:
            raise ConfigError(f"train.adam_eps must be positive, got {self.adam_eps}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(f"train.clip_norm must be positive or null, got {self.clip_norm}")
        if self.selection not in SELECTIONS:
            raise ConfigError(f"train.selection must be one of {SELECTIONS}, got {self.selection!r}")
        if self.prefetch < 0:
            raise ConfigError(f"train.prefetch must be >= 0, got {self.prefetch}")
        return self

    def grid_warnings(self) -> list[str]:
        notes = []
        if self.lr not in LR_GRID:
            notes.append(f"learning rate {self.lr} not in {LR_GRID}")
        if self.epochs != 10:
            notes.append(f"{self.epochs} epochs (benchmark protocol trains 10)")
        if self.batch_size != 32:
            notes.append(f"batch size {self.batch_size} (benchmark protocol uses 32)")
        return notes

    @classmethod
    def from_dict(cls, raw: dict, prefix: str = "train") -> TrainConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown key {prefix}.{unknown[0]}")
        raw = dict(raw)
        if "betas" in raw:
            raw["betas"] = tuple(raw["betas"])
        return cls(**raw).validate()

    def to_dict(self) -> dict:
        out = asdict(self)
        out["betas"] = list(self.betas)
        return out


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_mse: float
    train_mae: float
    val_mse: float
    val_mae: float
    seconds: float


@dataclass
class HorizonMetrics:
    horizon: int
    mse: float
    mae: float


@dataclass
class EvalReport:
    test: dict[int, HorizonMetrics] = field(default_factory=dict)
    history: dict[int, list[EpochRecord]] = field(default_factory=dict)

    def merge(self, other: EvalReport) -> EvalReport:
        self.test.update(other.test)
        self.history.update(other.history)
        return self

    def average(self) -> HorizonMetrics | None:
        if not self.test:
            return None
        rows = list(self.test.values())
        return HorizonMetrics(
            horizon=0,
            mse=float(np.mean([r.mse for r in rows])),
            mae=float(np.mean([r.mae for r in rows])),
        )

    def rows(self) -> list[dict]:
        """Table rows sorted by horizon, plus an ``Avg`` row when there is more than one."""
        out = [
            {"horizon": h, "mse": self.test[h].mse, "mae": self.test[h].mae}
            for h in sorted(self.test)
        ]
        if len(out) > 1:
            avg = self.average()
            out.append({"horizon": "Avg", "mse": avg.mse, "mae": avg.mae})
        return out


class RunLog:
    """Append-only JSON-lines writer for one run directory."""

    def __init__(self, run_dir: Path | str | None):
        self.run_dir = Path(run_dir) if run_dir is not None else None

    def reset(self) -> None:
        if self.run_dir is None:
            return
        for name in (METRICS_FILE, TIMINGS_FILE):
            (self.run_dir / name).unlink(missing_ok=True)

    def _append(self, name: str, record: dict) -> None:
        if self.run_dir is None:
            return
        self.run_dir.mkdir(parents=True, exist_ok=True)
        with open(self.run_dir / name, "a") as fh:
            fh.write(json.dumps(record) + "\n")

    def metrics(self, **record) -> None:
        self._append(METRICS_FILE, record)

    def timing(self, **record) -> None:
        self._append(TIMINGS_FILE, record)


def mse_loss(pred, target) -> Tensor:
    pred = pred if isinstance(pred, Tensor) else Tensor(pred)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = sub(pred, target)
    return reduce_mean(mul(diff, diff))


def evaluate(model: FilterTS, split: SplitView, batch_size: int = 32) -> tuple[float, float]:
    """MSE and MAE over every window of the split, in window order."""
    horizon, window_len = model.config.horizon, model.config.window_len
    sq_err, abs_err, count = 0.0, 0.0, 0
    for batch in window_iter(split, window_len, horizon, batch_size):
        err = model.predict(batch.inputs) - batch.targets
        sq_err += float(np.sum(err * err))
        abs_err += float(np.sum(np.abs(err)))
        count += err.size
    return sq_err / count, abs_err / count


def _check_split_bank(model: FilterTS, train: SplitView) -> None:
    if model.bank.fingerprint != SplitFingerprint.of(train.values):
        raise ContractError(
            "filter bank was not built from this training split "
            f"(bank T={model.bank.fingerprint.length}, split T={train.values.shape[-1]})"
        )


def fit(
    model: FilterTS,
    train: SplitView,
    val: SplitView,
    test: SplitView,
    config: TrainConfig,
    seed: int = 0,
    run_dir: Path | str | None = None,
    optimizer: AdamState | None = None,
) -> tuple[Checkpoint, EvalReport]:
    """
    Train ``model`` in place and score it on the test split.

    Parameters
    ----------
    model : FilterTS
        Model whose bank was built from ``train``.
    train, val, test : SplitView
        Standardised splits from :func:`filterts.data.splits.split_and_standardize`.
    config : TrainConfig
        Optimiser and loop settings.
    seed : int
        Seeds the window shuffling.
    run_dir : Path | str, optional
        Where ``metrics.jsonl`` / ``timings.jsonl`` are appended.
    optimizer : AdamState, optional
        Resume from a saved optimiser state.

    Returns
    -------
    tuple[Checkpoint, EvalReport]
        Checkpoint of the selected epoch and the test metrics for this horizon.
    """
    config.validate()
    _check_split_bank(model, train)
    horizon, window_len = model.config.horizon, model.config.window_len
    log = RunLog(run_dir)
    rng = np.random.default_rng(seed)
    params = model.parameters()
    state = optimizer if optimizer is not None else AdamState()
    n_batches = math.ceil(window_count(train, window_len, horizon) / config.batch_size)

    history: list[EpochRecord] = []
    best_mse = math.inf
    best_epoch = None
    best_state: tuple[dict, AdamState] | None = None

    for epoch in range(config.epochs):
        lr = config.lr * config.lr_decay**epoch
        started = time.perf_counter()
        sq_err, abs_err, count = 0.0, 0.0, 0

        batches = window_iter(
            train, window_len, horizon, config.batch_size, shuffle=config.shuffle, rng=rng
        )
        bar = tqdm(
            prefetch(batches, config.prefetch),
            total=n_batches,
            desc=f"F={horizon} epoch {epoch + 1}/{config.epochs}",
            unit="batch",
            disable=not config.progress,
            leave=False,
        )
        for index, batch in enumerate(bar):
            model.zero_grad()
            pred = model(batch.inputs)
            loss = mse_loss(pred, batch.targets)
            value = float(loss.re)
            if not math.isfinite(value):
                raise NonFiniteError(f"non-finite loss at epoch {epoch}, batch {index}")
            loss.backward()

            grads = collect_grads(params)
            if config.clip_norm is not None:
                clip_grad_norm(grads, config.clip_norm)
            try:
                adam_step(params, grads, state, lr, config.betas, config.adam_eps)
            except NonFiniteError as exc:
                raise NonFiniteError(f"epoch {epoch}, batch {index}: {exc}") from exc

            err = pred.re - batch.targets
            sq_err += float(np.sum(err * err))
            abs_err += float(np.sum(np.abs(err)))
            count += err.size
            bar.set_postfix(loss=f"{value:.4f}")

        val_mse, val_mae = evaluate(model, val, config.batch_size)
        seconds = time.perf_counter() - started
        record = EpochRecord(epoch, lr, sq_err / count, abs_err / count, val_mse, val_mae, seconds)
        history.append(record)
        log.metrics(epoch=epoch, split="train", horizon=horizon, mse=record.train_mse, mae=record.train_mae, lr=lr)
        log.metrics(epoch=epoch, split="val", horizon=horizon, mse=val_mse, mae=val_mae, lr=lr)
        log.timing(epoch=epoch, horizon=horizon, seconds=seconds)
        print(
            f"📉 F={horizon} epoch {epoch + 1}/{config.epochs} | lr={lr:.2e} | "
            f"train={record.train_mse:.4f} | val={val_mse:.4f} | {seconds:.1f}s"
        )

        if config.selection == "best_val" and val_mse < best_mse:
            best_mse, best_epoch = val_mse, epoch
            best_state = (model.state_dict(), copy.deepcopy(state))

    if config.selection == "best_val" and best_state is not None:
        model.load_state_dict(best_state[0])
        state = best_state[1]
        selected = best_epoch
    else:
        selected = config.epochs - 1 if config.epochs > 0 else None

    test_mse, test_mae = evaluate(model, test, config.batch_size)
    log.metrics(epoch=selected, split="test", horizon=horizon, mse=test_mse, mae=test_mae, lr=None)
    print(f"✅ F={horizon} test MSE={test_mse:.4f} MAE={test_mae:.4f} (epoch {selected})")

    checkpoint = Checkpoint.capture(
        model, state, horizon=horizon, seed=seed, epoch=selected, test_mse=test_mse, test_mae=test_mae
    )
    report = EvalReport(
        test={horizon: HorizonMetrics(horizon, test_mse, test_mae)},
        history={horizon: history},
    )
    return checkpoint, report
