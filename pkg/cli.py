import json
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np
import pandas as pd
import typer
from typer.core import TyperGroup

from filterts.autodiff.tensor import Tensor
from filterts.config import RunConfig, apply_overrides, echo_config, load_config
from filterts.data.splits import save_stats, split_and_standardize
from filterts.errors import ConfigError, ContractError, CSVParseError, DimensionError
from filterts.io.bank import load_bank, save_bank
from filterts.io.checkpoint import load_checkpoint, save_checkpoint
from filterts.layers.dcfilter import build_dynamic_filters
from filterts.layers.embedding import instance_normalize, t2f_embed
from filterts.layers.sgfilter import (
    SplitFingerprint,
    build_filter_bank,
    downsample_magnitudes,
    global_magnitudes,
)
from filterts.model import FilterTS
from filterts.train.loop import EvalReport, HorizonMetrics, RunLog, evaluate, fit

USAGE_ERRORS = (ConfigError, ContractError, DimensionError, CSVParseError, FileNotFoundError)


@contextmanager
def usage_exit_code():
    try:
        yield
    except click.UsageError as exc:
        # click defaults to 2, which is reserved for failures during a run
        exc.exit_code = 1
        raise


class UsageErrorGroup(TyperGroup):
    """Bad flags, missing options and unparsable values exit with 1."""

    def make_context(self, *args, **kwargs):
        with usage_exit_code():
            return super().make_context(*args, **kwargs)

    def invoke(self, ctx):
        with usage_exit_code():
            return super().invoke(ctx)


app = typer.Typer(cls=UsageErrorGroup, help="FilterTS: frequency-domain multivariate forecasting")

CONFIG_OPTION = typer.Option(
    Path("configs/etth1.json"), "--config", "-c", help="Run configuration (JSON)"
)
SEED_OPTION = typer.Option(None, "--seed", "-s", help="Override the config seed")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Override the output directory")
HORIZON_OPTION = typer.Option(None, "--horizon", "-f", help="Run a single forecast horizon")


@contextmanager
def exit_codes():
    """Usage and contract problems exit with 1, failures during a run with 2."""
    try:
        yield
    except typer.Exit:
        raise
    except USAGE_ERRORS as exc:
        typer.secho(f"❌ {exc}", fg="red", err=True)
        raise typer.Exit(code=1)
    except Exception as exc:
        typer.secho(f"❌ {type(exc).__name__}: {exc}", fg="red", err=True)
        raise typer.Exit(code=2)


def prepare(config_path: Path, seed, horizon, out, mode: str) -> tuple[RunConfig, Path]:
    config = apply_overrides(load_config(config_path), seed=seed, horizon=horizon, out=out, mode=mode)
    for note in config.warnings():
        typer.secho(f"⚠️ off-grid setting: {note}", fg="yellow")
    run_dir = config.run_dir()
    echo_config(config, run_dir)
    typer.echo(f"📁 Run directory: {run_dir}")
    return config, run_dir


def build_bank_for(config: RunConfig, dataset, run_dir: Path):
    model = config.model
    train, _, _, stats = split_and_standardize(dataset, model.window_len, max(config.horizons))
    save_stats(stats, run_dir / "stats.json")
    print(f"🧱 Building static filter bank from {train.values.shape[-1]} training steps")
    bank = build_filter_bank(
        train.values, model.window_len, model.d_model, model.n_static_filters, model.delta_f
    )
    save_bank(bank, run_dir / "bank.json")
    return bank


def print_bank(bank, variables) -> None:
    for i, name in enumerate(variables):
        centers = ", ".join(
            f"{c}:{m:.4g}" for c, m in zip(bank.centers[i], bank.center_magnitudes[i])
        )
        typer.echo(f"  {name}: {centers}")


def print_report(report: EvalReport) -> None:
    typer.echo(f"{'horizon':>8} {'mse':>10} {'mae':>10}")
    for row in report.rows():
        typer.echo(f"{row['horizon']!s:>8} {row['mse']:>10.4f} {row['mae']:>10.4f}")


def write_report(report: EvalReport, path: Path) -> None:
    path.write_text(json.dumps(report.rows(), indent=2) + "\n")


@app.command()
def build_bank(
    config_path: Path = CONFIG_OPTION,
    seed: int | None = SEED_OPTION,
    out: Path | None = OUT_OPTION,
):
    """Build the static filter bank from the training split and save it to the run directory."""
    with exit_codes():
        config, run_dir = prepare(config_path, seed, None, out, "build-bank")
        dataset = config.data.load()
        bank = build_bank_for(config, dataset, run_dir)
        typer.echo(
            f"✅ Bank N={bank.n_vars} K={bank.n_filters} delta_f={bank.delta_f} -> {run_dir / 'bank.json'}"
        )
        print_bank(bank, dataset.variables)


@app.command()
def train(
    config_path: Path = CONFIG_OPTION,
    seed: int | None = SEED_OPTION,
    horizon: int | None = HORIZON_OPTION,
    out: Path | None = OUT_OPTION,
    bank_path: Path | None = typer.Option(
        None, "--bank", "-b", help="Existing bank file; built inline when omitted"
    ),
):
    """Train one model per configured horizon and report test MSE/MAE."""
    with exit_codes():
        config, run_dir = prepare(config_path, seed, horizon, out, "train")
        dataset = config.data.load()
        bank = load_bank(bank_path) if bank_path else build_bank_for(config, dataset, run_dir)

        RunLog(run_dir).reset()
        report = EvalReport()
        for h in config.horizons:
            train_split, val, test, _ = split_and_standardize(dataset, config.model.window_len, h)
            model = FilterTS(config.model_for(h), bank, seed=config.seed)
            typer.echo(f"🚀 F={h}: {model.n_parameters()} parameters")
            checkpoint, part = fit(
                model, train_split, val, test, config.train, seed=config.seed, run_dir=run_dir
            )
            save_checkpoint(checkpoint, run_dir / f"checkpoint-F{h}.json")
            report.merge(part)

        write_report(report, run_dir / "report.json")
        print_report(report)


def _checkpoints_to_eval(checkpoint: Path, horizons: list[int], explicit: bool) -> dict[int, Path]:
    if checkpoint.is_dir():
        found = {int(p.stem.split("-F")[-1]): p for p in sorted(checkpoint.glob("checkpoint-F*.json"))}
        if not found:
            raise FileNotFoundError(f"no checkpoint-F*.json in {checkpoint}")
        wanted = horizons if explicit else sorted(found)
        missing = [h for h in wanted if h not in found]
        if missing:
            raise ConfigError(f"horizon {missing[0]} not in checkpoints (have {sorted(found)})")
        return {h: found[h] for h in wanted}
    return {horizons[0] if explicit else -1: checkpoint}


@app.command("eval")
def evaluate_checkpoint(
    config_path: Path = CONFIG_OPTION,
    checkpoint: Path = typer.Option(
        ..., "--checkpoint", "-k", help="Checkpoint file or a run directory holding checkpoints"
    ),
    seed: int | None = SEED_OPTION,
    horizon: int | None = HORIZON_OPTION,
    out: Path | None = OUT_OPTION,
):
    """Score saved checkpoints on the test split."""
    with exit_codes():
        config, run_dir = prepare(config_path, seed, horizon, out, "eval")
        dataset = config.data.load()
        report = EvalReport()
        for h, path in _checkpoints_to_eval(checkpoint, config.horizons, horizon is not None).items():
            ckpt = load_checkpoint(path)
            if h != -1 and ckpt.config.horizon != h:
                raise ConfigError(f"horizon {h} not in checkpoint {path} (has {ckpt.config.horizon})")
            if ckpt.config.n_vars != dataset.n_vars:
                raise DimensionError(
                    f"checkpoint N={ckpt.config.n_vars} but dataset N={dataset.n_vars}"
                )
            if ckpt.config.window_len != config.model.window_len:
                raise DimensionError(
                    f"checkpoint L={ckpt.config.window_len} but config L={config.model.window_len}"
                )
            train_split, _, test, _ = split_and_standardize(
                dataset, ckpt.config.window_len, ckpt.config.horizon
            )
            if ckpt.bank.fingerprint != SplitFingerprint.of(train_split.values):
                typer.secho("⚠️ checkpoint bank was built from a different training split", fg="yellow")
            model = ckpt.build_model()
            mse, mae = evaluate(model, test, config.train.batch_size)
            h = ckpt.config.horizon
            report.test[h] = HorizonMetrics(h, mse, mae)

        write_report(report, run_dir / "eval.json")
        print_report(report)


@app.command()
def inspect(
    config_path: Path = CONFIG_OPTION,
    variable: str = typer.Option("0", "--variable", "-v", help="Variable index or column name"),
    window_start: int = typer.Option(
        0, "--window-start", "-w", help="First step of the inspected lookback window (training split)"
    ),
    seed: int | None = SEED_OPTION,
    out: Path | None = OUT_OPTION,
):
    """Write global, pooled and window spectra of one variable as CSV."""
    with exit_codes():
        config, run_dir = prepare(config_path, seed, None, out, "inspect")
        dataset = config.data.load()
        model = config.model
        train_split, _, _, _ = split_and_standardize(dataset, model.window_len, max(config.horizons))

        names = dataset.variables
        if variable in names:
            index = names.index(variable)
        elif variable.lstrip("-").isdigit() and 0 <= int(variable) < len(names):
            index = int(variable)
        else:
            raise ContractError(f"variable {variable!r} out of range (0..{len(names) - 1} or {names})")
        last_start = train_split.values.shape[-1] - model.window_len
        if not 0 <= window_start <= last_start:
            raise ContractError(f"window start {window_start} out of range (0..{last_start})")

        series = train_split.values[index : index + 1]
        magnitudes = global_magnitudes(series)[0]
        pooled = downsample_magnitudes(magnitudes[None], model.window_len)[0]

        window = train_split.values[:, window_start : window_start + model.window_len]
        normed, _ = instance_normalize(window, model.eps)
        freq = t2f_embed(Tensor(normed), model.d_model)
        filters = build_dynamic_filters(freq, model.quantile)
        band = freq.band
        window_mags = np.abs(freq.values.value[index, :band])
        tau = float(filters.tau[index])

        report_dir = run_dir / "inspect"
        report_dir.mkdir(parents=True, exist_ok=True)
        label = names[index]
        pd.DataFrame({"bin": np.arange(magnitudes.size), "magnitude": magnitudes}).to_csv(
            report_dir / f"global_{label}.csv", index=False
        )
        pd.DataFrame({"group": np.arange(pooled.size), "magnitude": pooled}).to_csv(
            report_dir / f"pooled_{label}.csv", index=False
        )
        pd.DataFrame(
            {
                "bin": np.arange(band),
                "magnitude": window_mags,
                "retained": filters.keep[index, :band].astype(int),
                "tau": tau,
            }
        ).to_csv(report_dir / f"window_{label}_{window_start}.csv", index=False)

        peak = int(np.argmax(magnitudes[: magnitudes.size // 2 + 1]))
        typer.echo(f"🔎 {label}: global peak bin {peak}, window tau = {tau!r}")
        typer.echo(f"💾 Spectra written to {report_dir}")


if __name__ == "__main__":
    app()
