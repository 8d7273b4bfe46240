"""Static global filtering.

The filter bank is built once, offline, from the training split: the spectrum of the
whole series is pooled down to the lookback resolution, the K strongest groups per
variable become centres, and each centre gets a binary band-pass mask of half width
``delta_f``. Online, the scaled window spectrum is masked by every band and the bands
are mixed with ``csoftmax(crelu(V))``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from filterts import spectral
from filterts.autodiff.tensor import Tensor, matmul, mul
from filterts.errors import ContractError, DimensionError
from filterts.layers.complex_nn import sparse_weights
from filterts.layers.embedding import FreqRepr


@dataclass(frozen=True)
class SplitFingerprint:
    length: int
    n_vars: int
    sha256: str

    @classmethod
    def of(cls, series: np.ndarray) -> SplitFingerprint:
        series = np.ascontiguousarray(series, dtype=np.float64)
        return cls(
            length=int(series.shape[-1]),
            n_vars=int(series.shape[0]),
            sha256=hashlib.sha256(series.tobytes()).hexdigest(),
        )


@dataclass(eq=False)
class FilterBank:
    centers: np.ndarray
    center_magnitudes: np.ndarray
    d_model: int
    delta_f: int
    window_len: int
    fingerprint: SplitFingerprint

    @property
    def n_vars(self) -> int:
        return self.centers.shape[0]

    @property
    def n_filters(self) -> int:
        return self.centers.shape[1]

    @cached_property
    def masks(self) -> np.ndarray:
        """Binary band-pass masks, N x K x D."""
        return band_masks(self.centers, self.delta_f, self.d_model)


@dataclass
class SGFilterParams:
    A_p: Tensor
    V: Tensor

    @classmethod
    def create(cls, n_vars: int, d_model: int, n_filters: int, name: str) -> SGFilterParams:
        return cls(
            A_p=Tensor.parameter(np.ones((n_vars, d_model), dtype=np.complex128), name=f"{name}.A_p"),
            V=Tensor.parameter(
                np.full((n_vars, n_filters), 1.0 / n_filters, dtype=np.complex128), name=f"{name}.V"
            ),
        )

    def parameters(self) -> list[Tensor]:
        return [self.A_p, self.V]


def band_masks(centers: np.ndarray, delta_f: int, d_model: int) -> np.ndarray:
    """Z[i, s, f] = 1 iff |f - centers[i, s]| <= delta_f, clipped to 0..D-1."""
    bins = np.arange(d_model)
    return (np.abs(bins - centers[..., None]) <= delta_f).astype(np.float64)


def global_magnitudes(train_series: np.ndarray) -> np.ndarray:
    """Magnitude of the DFT of every full training series, N x T."""
    return spectral.magnitude(spectral.fft(np.asarray(train_series, dtype=np.float64)))


def downsample_magnitudes(magnitudes: np.ndarray, window_len: int) -> np.ndarray:
    """Sum T bins into L contiguous groups with edges floor(m*T/L)."""
    length = magnitudes.shape[-1]
    if length < window_len:
        raise ContractError(f"training split ({length}) shorter than the lookback ({window_len})")
    starts = (np.arange(window_len) * length) // window_len
    return np.add.reduceat(magnitudes, starts, axis=-1)


def build_filter_bank(
    train_series,
    window_len: int,
    d_model: int,
    n_filters: int,
    delta_f: int,
) -> FilterBank:
    train_series = np.asarray(train_series, dtype=np.float64)
    if n_filters < 1:
        raise ContractError(f"need at least one static filter, got {n_filters}")
    if delta_f < 0:
        raise ContractError(f"half bandwidth must be non-negative, got {delta_f}")

    pooled = downsample_magnitudes(global_magnitudes(train_series), window_len)
    # groups above L/2 mirror the lower ones for a real series
    candidates = min(window_len // 2 + 1, d_model)
    if n_filters > candidates:
        raise ContractError(
            f"{n_filters} static filters requested but only {candidates} distinct bins available"
        )
    order = np.argsort(-pooled[:, :candidates], axis=-1, kind="stable")[:, :n_filters]
    return FilterBank(
        centers=order.astype(np.int64),
        center_magnitudes=np.take_along_axis(pooled, order, axis=-1),
        d_model=d_model,
        delta_f=delta_f,
        window_len=window_len,
        fingerprint=SplitFingerprint.of(train_series),
    )


def sg_filter_forward(x_freq: FreqRepr, params: SGFilterParams, bank: FilterBank) -> Tensor:
    """P_i = sum_s (X_i * A_p_i * Z_is) V*_is with V* = csoftmax(crelu(V)) over s."""
    x = x_freq.values
    n_vars, d_model = x.shape[-2:]
    if (bank.n_vars, bank.d_model) != (n_vars, d_model):
        raise ContractError(
            f"filter bank is {bank.n_vars}x{bank.d_model} but the spectrum is {n_vars}x{d_model}"
        )
    if params.A_p.shape != (n_vars, d_model) or params.V.shape != (n_vars, bank.n_filters):
        raise DimensionError(
            f"static filter params A_p {params.A_p.shape}, V {params.V.shape} "
            f"do not fit N={n_vars}, D={d_model}, K={bank.n_filters}"
        )

    scaled = mul(x, params.A_p)
    v_star = sparse_weights(params.V, axis=-1)
    band_gain = matmul(v_star.reshape(n_vars, 1, bank.n_filters), Tensor(bank.masks))
    return mul(scaled, band_gain.reshape(n_vars, d_model))
