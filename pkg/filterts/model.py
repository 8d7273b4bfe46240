"""FilterTS: stacked dynamic/static spectral filtering with a frequency-to-time head.

forward(X):
    instance-normalise -> embed (2L FFT, width D)
    repeat e times:
        O = dynamic cross-variable filter(X_f)
        P = static global filter(X_f)
        X_f = CLayerNorm(alpha * X_f + beta * O + gamma * P)
    real-pair complex linear map (U) -> [Re || Im] @ Q -> de-normalise
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from filterts.autodiff import ops
from filterts.autodiff.tensor import Tensor, add, matmul, mul
from filterts.errors import ConfigError, ContractError, DimensionError
from filterts.layers.complex_nn import ComplexLayerNorm, ComplexLinear, uniform_init
from filterts.layers.dcfilter import DCFilterParams, build_dynamic_filters, dc_filter_forward
from filterts.layers.embedding import FreqRepr, denormalize, instance_normalize, t2f_embed
from filterts.layers.sgfilter import FilterBank, SGFilterParams, sg_filter_forward

BENCHMARK_HORIZONS = (96, 192, 336, 720)
BENCHMARK_WIDTHS = (128, 256, 512)


@dataclass
class ModelConfig:
    window_len: int = 96
    horizon: int = 96
    n_vars: int = 7
    d_model: int = 128
    n_layers: int = 1
    quantile: float = 0.9
    n_static_filters: int = 10
    delta_f: int = 1
    eps: float = 1e-5

    def validate(self) -> ModelConfig:
        for name in ("window_len", "horizon", "n_vars", "d_model", "n_static_filters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"model.{name} must be >= 1, got {getattr(self, name)}")
        if self.window_len < 2:
            raise ConfigError(f"model.window_len must be >= 2, got {self.window_len}")
        if self.n_layers < 0:
            raise ConfigError(f"model.n_layers must be >= 0, got {self.n_layers}")
        if not 0.0 < self.quantile < 1.0:
            raise ConfigError(f"model.quantile must lie in (0, 1), got {self.quantile}")
        if self.delta_f < 0:
            raise ConfigError(f"model.delta_f must be >= 0, got {self.delta_f}")
        if self.eps <= 0:
            raise ConfigError(f"model.eps must be positive, got {self.eps}")
        return self

    def grid_warnings(self) -> list[str]:
        notes = []
        if self.window_len != 96:
            notes.append(f"lookback {self.window_len} (benchmark protocol uses 96)")
        if self.horizon not in BENCHMARK_HORIZONS:
            notes.append(f"horizon {self.horizon} not in {BENCHMARK_HORIZONS}")
        if self.d_model not in BENCHMARK_WIDTHS:
            notes.append(f"hidden width {self.d_model} not in {BENCHMARK_WIDTHS}")
        if not 1 <= self.n_layers <= 4:
            notes.append(f"{self.n_layers} layers outside 1..4")
        return notes

    @classmethod
    def from_dict(cls, raw: dict, prefix: str = "model") -> ModelConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown key {prefix}.{unknown[0]}")
        return cls(**raw).validate()

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LayerParams:
    alpha: Tensor
    beta: Tensor
    gamma: Tensor
    dc: DCFilterParams
    sg: SGFilterParams
    norm: ComplexLayerNorm

    @classmethod
    def create(cls, config: ModelConfig, name: str) -> LayerParams:
        def scalar(value: float, label: str) -> Tensor:
            return Tensor.parameter(np.array(value), name=f"{name}.{label}", real_only=True)

        return cls(
            alpha=scalar(1.0, "alpha"),
            beta=scalar(0.5, "beta"),
            gamma=scalar(0.5, "gamma"),
            dc=DCFilterParams.create(config.n_vars, config.d_model, f"{name}.dc"),
            sg=SGFilterParams.create(
                config.n_vars, config.d_model, config.n_static_filters, f"{name}.sg"
            ),
            norm=ComplexLayerNorm.create(config.d_model, f"{name}.norm"),
        )

    def parameters(self) -> list[Tensor]:
        return [
            self.alpha,
            self.beta,
            self.gamma,
            *self.dc.parameters(),
            *self.sg.parameters(),
            *self.norm.parameters(),
        ]


@dataclass
class OutputHead:
    U: ComplexLinear
    Q: Tensor

    @classmethod
    def create(cls, rng: np.random.Generator, d_model: int, horizon: int) -> OutputHead:
        return cls(
            U=ComplexLinear.create(rng, d_model, d_model, name="head.U"),
            Q=Tensor.parameter(
                uniform_init(rng, (2 * d_model, horizon), 2 * d_model), name="head.Q", real_only=True
            ),
        )

    def parameters(self) -> list[Tensor]:
        return [*self.U.parameters(), self.Q]


def f2t_project(x_sigma, head: OutputHead) -> Tensor:
    """Complex map by U, then [Re || Im] (width 2D) times Q (2D x F)."""
    projected = head.U(x_sigma)
    stacked = ops.concat([ops.real_part(projected), ops.imag_part(projected)], axis=-1)
    if stacked.shape[-1] != head.Q.shape[0]:
        raise DimensionError(f"head Q expects width {head.Q.shape[0]}, got {stacked.shape}")
    return matmul(stacked, head.Q)


def filter_layer(freq: FreqRepr, layer: LayerParams, bank: FilterBank, quantile: float) -> FreqRepr:
    filters = build_dynamic_filters(freq, quantile)
    dynamic = dc_filter_forward(freq, layer.dc, filters)
    static = sg_filter_forward(freq, layer.sg, bank)
    mixed = add(
        add(mul(freq.values, layer.alpha), mul(dynamic, layer.beta)), mul(static, layer.gamma)
    )
    return FreqRepr(values=layer.norm(mixed), window_len=freq.window_len)


def count_parameters(config: ModelConfig) -> int:
    """Trainable real scalars; a complex entry counts twice."""
    n, d, k = config.n_vars, config.d_model, config.n_static_filters
    per_layer = (
        3  # alpha, beta, gamma
        + 2 * n * d  # A_o
        + 2 * n * n  # W
        + 2 * n * d  # A_p
        + 2 * n * k  # V
        + 4 * d  # layer norm gains and biases, both parts
    )
    head = 4 * d * d + 2 * d * config.horizon
    return config.n_layers * per_layer + head


class FilterTS:
    def __init__(self, config: ModelConfig, bank: FilterBank, seed: int = 0):
        config.validate()
        check_bank(config, bank)
        self.config = config
        self.bank = bank
        rng = np.random.default_rng(seed)
        self.layers = [LayerParams.create(config, f"layers.{i}") for i in range(config.n_layers)]
        self.head = OutputHead.create(rng, config.d_model, config.horizon)

    def parameters(self) -> dict[str, Tensor]:
        params = [p for layer in self.layers for p in layer.parameters()]
        params += self.head.parameters()
        return {p.name: p for p in params}

    def n_parameters(self) -> int:
        return sum(p.size * (1 if p.real_only else 2) for p in self.parameters().values())

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {
            name: (p.re.copy() if p.real_only else p.value)
            for name, p in self.parameters().items()
        }

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise ContractError(f"parameter names differ: missing {missing}, unexpected {unexpected}")
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise DimensionError(f"{name}: checkpoint shape {value.shape}, model shape {p.shape}")
            p.re[...] = value.real
            if not p.real_only:
                p.im[...] = value.imag if np.iscomplexobj(value) else 0.0

    def forward(self, x) -> Tensor:
        """Forecast for one window (N x L) or a batch (B x N x L); returns ... x N x F."""
        x = np.asarray(x, dtype=np.float64)
        expected = (self.config.n_vars, self.config.window_len)
        if x.ndim < 2 or x.shape[-2:] != expected:
            raise DimensionError(f"input windows must end in {expected}, got {x.shape}")
        normed, stats = instance_normalize(x, self.config.eps)
        freq = t2f_embed(Tensor(normed), self.config.d_model)
        for layer in self.layers:
            freq = filter_layer(freq, layer, self.bank, self.config.quantile)
        return denormalize(f2t_project(freq.values, self.head), stats)

    __call__ = forward

    def predict(self, x) -> np.ndarray:
        return self.forward(x).re


def check_bank(config: ModelConfig, bank: FilterBank) -> None:
    pairs = {
        "N": (config.n_vars, bank.n_vars),
        "K": (config.n_static_filters, bank.n_filters),
        "D": (config.d_model, bank.d_model),
        "delta_f": (config.delta_f, bank.delta_f),
        "L": (config.window_len, bank.window_len),
    }
    for label, (want, got) in pairs.items():
        if want != got:
            raise ContractError(f"filter bank {label}={got} does not match model {label}={want}")
