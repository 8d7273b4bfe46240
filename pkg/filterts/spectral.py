"""FFT, magnitude spectra and FFT-based linear convolution.

The transform runs along the last axis of an array of any rank. Power-of-two lengths
use an iterative radix-2 Cooley-Tukey pass; every other length goes through
Bluestein's chirp-z identity on a power-of-two grid, so window lengths such as 96,
192 or 8640 cost O(n log n) as well.

Normalisation: forward is the plain sum ``X_f = sum_t x_t exp(-2j*pi*f*t/n)``, the
inverse carries the ``1/n`` factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from filterts.errors import ContractError


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=64)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return _frozen(rev)


@lru_cache(maxsize=256)
def _twiddles(size: int) -> np.ndarray:
    half = size // 2
    return _frozen(np.exp(-2j * np.pi * np.arange(half) / size))


@lru_cache(maxsize=64)
def _chirp(n: int) -> np.ndarray:
    # k^2 mod 2n keeps the exponent small for long transforms
    k = np.arange(n, dtype=np.int64)
    return _frozen(np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n))


@lru_cache(maxsize=64)
def _chirp_filter_spectrum(n: int, m: int) -> np.ndarray:
    w = np.conj(_chirp(n))
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = w
    b[m - n + 1 :] = w[1:][::-1]
    return _frozen(_radix2(b))


def _is_power_of_two(n: int) -> bool:
    return n & (n - 1) == 0


def _radix2(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    lead = x.shape[:-1]
    y = x[..., _bit_reverse(n)]
    size = 2
    while size <= n:
        half = size // 2
        blocks = y.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(size)
        y = np.concatenate([even + odd, even - odd], axis=-1).reshape(*lead, n)
        size *= 2
    return y


def _bluestein(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    m = 1 << (2 * n - 2).bit_length()
    w = _chirp(n)
    a = np.zeros(x.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = x * w
    conv = _radix2_inverse(_radix2(a) * _chirp_filter_spectrum(n, m))
    return conv[..., :n] * w


def _radix2_inverse(x: np.ndarray) -> np.ndarray:
    return np.conj(_radix2(np.conj(x))) / x.shape[-1]


def fft(x, inverse: bool = False) -> np.ndarray:
    """Discrete Fourier transform along the last axis (inverse scaled by 1/n)."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ContractError("fft needs a non-empty last axis")
    n = x.shape[-1]
    if inverse:
        return np.conj(fft(np.conj(x))) / n
    if n == 1:
        return x.copy()
    if _is_power_of_two(n):
        return _radix2(x)
    return _bluestein(x)


def ifft(x) -> np.ndarray:
    return fft(x, inverse=True)


def magnitude(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    return np.hypot(s.real, s.imag)


def linear_convolve_via_fft(x, h) -> np.ndarray:
    """Full linear convolution of two real sequences (length N+M-1)."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.size == 0 or h.size == 0:
        raise ContractError("convolution needs two non-empty sequences")
    out_len = x.size + h.size - 1
    size = 1 << max(out_len - 1, 0).bit_length()
    xp = np.zeros(size)
    hp = np.zeros(size)
    xp[: x.size] = x
    hp[: h.size] = h
    return ifft(fft(xp) * fft(hp)).real[:out_len]


@dataclass(frozen=True)
class Spectrum:
    """DFT of a sequence; indices only, no physical frequency units."""

    values: np.ndarray

    @classmethod
    def of(cls, x) -> Spectrum:
        return cls(fft(x))

    @property
    def magnitude(self) -> np.ndarray:
        return magnitude(self.values)

    def is_conjugate_symmetric(self, atol: float = 1e-12) -> bool:
        v = self.values
        mirrored = np.conj(v[..., 1:][..., ::-1])
        return bool(np.allclose(v[..., 1:], mirrored, rtol=0.0, atol=atol))
