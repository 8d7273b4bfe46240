import json
from pathlib import Path

import numpy as np
import pytest

from conftest import sinusoids
from filterts.autodiff.tensor import Tensor
from filterts.data.dataset import Dataset, load_csv
from filterts.data.splits import split_and_standardize
from filterts.errors import ConfigError, ContractError, DimensionError, NonFiniteError
from filterts.layers.sgfilter import build_filter_bank
from filterts.model import FilterTS, ModelConfig
from filterts.train.loop import EvalReport, HorizonMetrics, TrainConfig, evaluate, fit, mse_loss
from filterts.train.optim import AdamState, adam_step, clip_grad_norm


def scalar_param(value, name="p", real_only=True):
    return Tensor.parameter(np.array([value]), name=name, real_only=real_only)


def test_adam_zero_gradient_leaves_parameters():
    p = scalar_param(0.7)
    adam_step({"p": p}, {"p": np.zeros(1)}, AdamState(), lr=0.1)
    assert p.re[0] == 0.7


def test_adam_first_step_moves_by_lr():
    p = scalar_param(0.0)
    state = adam_step({"p": p}, {"p": np.ones(1)}, AdamState(), lr=0.1)
    assert p.re[0] == pytest.approx(-0.1, abs=1e-8)
    assert state.step == 1


def test_adam_matches_reference_recurrence():
    p = scalar_param(0.3)
    state = AdamState()
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    theta, m, v = 0.3, 0.0, 0.0
    for t, g in enumerate([0.5, -0.8], start=1):
        adam_step({"p": p}, {"p": np.array([g])}, state, lr=lr)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    assert abs(p.re[0] - theta) < 1e-12


def test_adam_treats_real_and_imaginary_parts_independently():
    p = Tensor.parameter(np.array([1.0 + 1.0j]), name="z")
    adam_step({"z": p}, {"z": np.array([2.0 + 0.0j])}, AdamState(), lr=0.1)
    assert p.re[0] == pytest.approx(0.9, abs=1e-8)
    assert p.im[0] == 1.0


def test_adam_rejects_non_finite_gradient():
    p = scalar_param(1.0, name="layers.0.alpha")
    with pytest.raises(NonFiniteError, match="layers.0.alpha"):
        adam_step({"layers.0.alpha": p}, {"layers.0.alpha": np.array([np.nan])}, AdamState(), lr=0.1)


def test_clip_grad_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0j])}
    assert clip_grad_norm(grads, 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(grads["a"], [0.6])
    np.testing.assert_allclose(grads["b"], [0.8j])


def test_mse_loss_examples():
    assert float(mse_loss(Tensor(np.ones((2, 2))), np.ones((2, 2))).re) == 0.0
    assert float(mse_loss(Tensor(np.full(3, 2.0)), np.ones(3)).re) == 1.0
    assert float(mse_loss(Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])), np.ones((2, 2))).re) == 3.5
    with pytest.raises(DimensionError):
        mse_loss(Tensor(np.ones(3)), np.ones(4))


def test_mse_loss_gradient():
    pred = Tensor.parameter(np.array([1.0, 2.0, 3.0, 4.0]), name="pred", real_only=True)
    mse_loss(pred, np.ones(4)).backward()
    np.testing.assert_allclose(pred.grad_re, [0.0, 0.5, 1.0, 1.5])


def test_train_config_parsing():
    config = TrainConfig.from_dict({"lr": 5e-4, "betas": [0.8, 0.99]})
    assert config.betas == (0.8, 0.99) and config.grid_warnings() == []
    assert TrainConfig(lr=2e-3).grid_warnings()
    with pytest.raises(ConfigError, match="train.momentum"):
        TrainConfig.from_dict({"momentum": 0.9})
    with pytest.raises(ConfigError):
        TrainConfig(selection="best").validate()


def test_report_average_row():
    report = EvalReport(test={96: HorizonMetrics(96, 0.4, 0.4), 192: HorizonMetrics(192, 0.6, 0.5)})
    rows = report.rows()
    assert [r["horizon"] for r in rows] == [96, 192, "Avg"]
    assert rows[-1]["mse"] == pytest.approx(0.5)
    assert rows[-1]["mae"] == pytest.approx(0.45)


SMALL = dict(window_len=16, horizon=4, n_vars=2, d_model=16, n_layers=1, n_static_filters=2)


def setup_run(values, seed=0, **model_kwargs):
    config = ModelConfig(**{**SMALL, **model_kwargs})
    data = Dataset.from_array(values)
    train, val, test, _ = split_and_standardize(data, config.window_len, config.horizon)
    bank = build_filter_bank(
        train.values, config.window_len, config.d_model, config.n_static_filters, config.delta_f
    )
    return FilterTS(config, bank, seed=seed), train, val, test


def quiet(**kwargs):
    return TrainConfig(**{"batch_size": 16, "progress": False, **kwargs})


def test_constant_series_is_learned_at_once():
    model, train, val, test = setup_run(np.full((2, 300), 3.0))
    _, report = fit(model, train, val, test, quiet(epochs=1))
    assert report.history[4][0].val_mse < 1e-12
    assert report.test[4].mse < 1e-12


def test_lr_schedule_and_metrics_log(tmp_path):
    values = np.stack([sinusoids(400, [24]), sinusoids(400, [12])])
    model, train, val, test = setup_run(values)
    fit(model, train, val, test, quiet(epochs=3, lr=1e-3), seed=1, run_dir=tmp_path)
    records = [json.loads(line) for line in (tmp_path / "metrics.jsonl").read_text().splitlines()]
    train_records = [r for r in records if r["split"] == "train"]
    assert [r["lr"] for r in train_records] == [1e-3, 1e-3 * 0.5, 1e-3 * 0.25]
    assert [r["epoch"] for r in train_records] == [0, 1, 2]
    assert records[-1]["split"] == "test"
    assert set(records[0]) == {"epoch", "split", "horizon", "mse", "mae", "lr"}
    timings = (tmp_path / "timings.jsonl").read_text().splitlines()
    assert len(timings) == 3 and "seconds" in json.loads(timings[0])


def test_seeded_runs_are_identical(tmp_path):
    values = np.stack([sinusoids(400, [24]), sinusoids(400, [12], [0.5])])
    for name in ("a", "b"):
        model, train, val, test = setup_run(values, seed=3)
        fit(model, train, val, test, quiet(epochs=2), seed=3, run_dir=tmp_path / name)
    assert (tmp_path / "a" / "metrics.jsonl").read_bytes() == (tmp_path / "b" / "metrics.jsonl").read_bytes()


def test_selection_modes():
    values = np.stack([sinusoids(400, [24]), sinusoids(400, [12])])
    for selection in ("best_val", "last"):
        model, train, val, test = setup_run(values)
        ckpt, report = fit(model, train, val, test, quiet(epochs=2, selection=selection))
        history = report.history[4]
        if selection == "last":
            assert ckpt.meta["epoch"] == 1
        else:
            best = min(range(2), key=lambda e: history[e].val_mse)
            assert ckpt.meta["epoch"] == best
        mse, _ = evaluate(ckpt.build_model(), test, batch_size=16)
        assert mse == report.test[4].mse


def test_zero_epochs_scores_the_untrained_model():
    values = np.stack([sinusoids(400, [24]), sinusoids(400, [12])])
    model, train, val, test = setup_run(values)
    ckpt, report = fit(model, train, val, test, quiet(epochs=0))
    assert np.isfinite(report.test[4].mse) and np.isfinite(report.test[4].mae)
    assert report.history[4] == [] and ckpt.meta["epoch"] is None


def test_non_finite_loss_names_epoch_and_batch():
    values = np.stack([sinusoids(400, [24]), sinusoids(400, [12])])
    model, train, val, test = setup_run(values)
    model.head.Q.re[0, 0] = np.nan
    with pytest.raises(NonFiniteError, match="epoch 0, batch 0"):
        fit(model, train, val, test, quiet(epochs=1))


def test_bank_must_come_from_the_training_split(rng):
    values = np.stack([sinusoids(400, [24]), sinusoids(400, [12])])
    _, train, val, test = setup_run(values)
    config = ModelConfig(**SMALL)
    other = build_filter_bank(rng.normal(size=(2, 320)), 16, 16, 2, 1)
    with pytest.raises(ContractError):
        fit(FilterTS(config, other), train, val, test, quiet(epochs=1))


def test_first_epoch_loss_decreases():
    values = np.stack([sinusoids(1200, [24, 12]), sinusoids(1200, [24], [2.0])])
    model, train, val, test = setup_run(values)
    ckpt, report = fit(model, train, val, test, quiet(epochs=2, lr=5e-3))
    history = report.history[4]
    assert history[1].train_mse < history[0].train_mse


@pytest.mark.slow
def test_sinusoids_are_forecast_accurately():
    values = np.stack([sinusoids(3000, [24, 12]), sinusoids(3000, [12, 24], [1.0, 0.5])])
    config = ModelConfig(window_len=96, horizon=96, n_vars=2, d_model=128, n_layers=1)
    data = Dataset.from_array(values)
    train, val, test, _ = split_and_standardize(data, 96, 96)
    bank = build_filter_bank(train.values, 96, 128, 10, 1)
    model = FilterTS(config, bank, seed=0)
    _, report = fit(model, train, val, test, TrainConfig(lr=5e-3, progress=False), seed=0)
    assert report.test[96].mse < 0.05


@pytest.mark.slow
@pytest.mark.skipif(not Path("data/ETTh1.csv").exists(), reason="data/ETTh1.csv not available")
def test_etth1_desk_scale():
    data = load_csv("data/ETTh1.csv")
    assert (data.n_vars, data.length) == (7, 17420)
    results = []
    for d_model in (128, 256):
        for n_layers in (1, 2):
            config = ModelConfig(window_len=96, horizon=96, n_vars=7, d_model=d_model, n_layers=n_layers)
            train, val, test, _ = split_and_standardize(data, 96, 96)
            bank = build_filter_bank(train.values, 96, d_model, 10, 1)
            _, report = fit(FilterTS(config, bank, seed=2024), train, val, test, TrainConfig(progress=False), seed=2024)
            results.append(report.test[96])
    best = min(results, key=lambda r: r.mse)
    assert best.mse <= 0.42 and best.mae <= 0.43
