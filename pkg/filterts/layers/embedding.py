"""Time-to-frequency embedding: instance norm, 2L zero-padded FFT, resize to width D."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from filterts.autodiff import ops
from filterts.autodiff.tensor import Tensor, add, as_tensor, mul
from filterts.errors import ContractError


@dataclass(frozen=True)
class InstanceStats:
    """Per-window, per-variable moments, kept for de-normalising the forecast."""

    mu: np.ndarray
    sigma: np.ndarray
    eps: float


@dataclass
class FreqRepr:
    values: Tensor
    window_len: int

    @property
    def band(self) -> int:
        """Number of leading bins that carry information (bins 0..L)."""
        return min(self.window_len + 1, self.values.shape[-1])


def instance_normalize(x, eps: float = 1e-5) -> tuple[np.ndarray, InstanceStats]:
    """Z-score every series along its last (time) axis."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 2:
        raise ContractError(f"instance norm needs a window of at least 2 steps, got {x.shape}")
    mu = x.mean(axis=-1)
    sigma = x.std(axis=-1)
    normed = (x - mu[..., None]) / (sigma[..., None] + eps)
    return normed, InstanceStats(mu=mu, sigma=sigma, eps=eps)


def denormalize(y, stats: InstanceStats):
    """Inverse of :func:`instance_normalize` for arrays or tensors (time on the last axis)."""
    scale = (stats.sigma + stats.eps)[..., None]
    shift = stats.mu[..., None]
    if isinstance(y, Tensor):
        return add(mul(y, scale), shift)
    return np.asarray(y) * scale + shift


def t2f_embed(x_norm, d_model: int) -> FreqRepr:
    """FFT of each row padded to 2L; keep bins 0..L, then truncate or zero-fill to D."""
    if d_model < 1:
        raise ContractError(f"model width must be positive, got {d_model}")
    x_norm = as_tensor(x_norm)
    window_len = x_norm.shape[-1]
    spectrum = ops.fft(x_norm, n=2 * window_len)
    keep = min(window_len + 1, d_model)
    values = spectrum[..., :keep]
    if keep < d_model:
        values = ops.pad(values, d_model, axis=-1)
    return FreqRepr(values=values, window_len=window_len)
