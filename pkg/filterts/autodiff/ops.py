"""Structural and nonlinear ops on top of :mod:`filterts.autodiff.tensor`."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from filterts import spectral
from filterts.autodiff.tensor import Tensor, as_tensor, make_node
from filterts.errors import ContractError, DimensionError


def _axis(a: Tensor, axis: int) -> int:
    if not -a.ndim <= axis < a.ndim:
        raise DimensionError(f"axis {axis} out of range for shape {a.shape}")
    return axis % a.ndim


def pad(a, length: int, axis: int = -1) -> Tensor:
    """Append zeros along ``axis`` until it has ``length`` entries."""
    a = as_tensor(a)
    axis = _axis(a, axis)
    extra = length - a.shape[axis]
    if extra < 0:
        raise DimensionError(f"cannot pad axis of length {a.shape[axis]} down to {length}")
    widths = [(0, 0)] * a.ndim
    widths[axis] = (0, extra)
    keep = [slice(None)] * a.ndim
    keep[axis] = slice(0, a.shape[axis])
    keep = tuple(keep)
    return make_node(
        np.pad(a.re, widths),
        (a,),
        lambda g: (g[keep],),
        "pad",
        imag=np.pad(a.im, widths),
    )


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    axis = _axis(tensors[0], axis)
    rest = [t.shape[:axis] + t.shape[axis + 1 :] for t in tensors]
    if any(r != rest[0] for r in rest):
        raise DimensionError(f"concat along axis {axis}: shapes {[t.shape for t in tensors]}")
    cuts = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return np.split(g, cuts, axis=axis)

    return make_node(
        np.concatenate([t.re for t in tensors], axis=axis),
        tensors,
        _backward,
        "concat",
        imag=np.concatenate([t.im for t in tensors], axis=axis),
    )


def real_part(a) -> Tensor:
    a = as_tensor(a)
    return make_node(a.re, (a,), lambda g: (g.real + 0j,), "real")


def imag_part(a) -> Tensor:
    a = as_tensor(a)
    return make_node(a.im, (a,), lambda g: (1j * g.real,), "imag")


def complex_from(re, im) -> Tensor:
    """Assemble ``re + i*im`` from two real-typed tensors."""
    re, im = as_tensor(re), as_tensor(im)
    if not (re.is_real and im.is_real):
        raise ContractError("complex_from takes two real-typed tensors")
    if re.shape != im.shape:
        raise DimensionError(f"complex_from: {re.shape} vs {im.shape}")
    return make_node(
        re.re, (re, im), lambda g: (g.real + 0j, g.imag + 0j), "complex", imag=im.re
    )


def relu_parts(a) -> Tensor:
    """ReLU applied to the real and the imaginary part separately."""
    a = as_tensor(a)
    keep_re = a.re > 0
    keep_im = a.im > 0

    def _backward(g):
        return (g.real * keep_re + 1j * (g.imag * keep_im),)

    return make_node(
        np.where(keep_re, a.re, 0.0), (a,), _backward, "relu", imag=np.where(keep_im, a.im, 0.0)
    )


def standardize(a, axis: int = -1, eps: float = 1e-5) -> Tensor:
    """``(x - mean) / sqrt(var + eps)`` along ``axis`` for a real-typed tensor."""
    a = as_tensor(a)
    if not a.is_real:
        raise ContractError("standardize takes a real-typed tensor")
    axis = _axis(a, axis)
    centred = a.re - a.re.mean(axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt((centred**2).mean(axis=axis, keepdims=True) + eps)
    xhat = centred * inv_std

    def _backward(g):
        g = g.real
        dx = inv_std * (
            g - g.mean(axis=axis, keepdims=True) - xhat * (g * xhat).mean(axis=axis, keepdims=True)
        )
        return (dx + 0j,)

    return make_node(xhat, (a,), _backward, "standardize")


def _unit_phase(z: np.ndarray, r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    np.divide(z, r, out=out, where=r > 0)
    return out


def magnitude(a) -> Tensor:
    a = as_tensor(a)
    r = np.hypot(a.re, a.im)
    phase = _unit_phase(a.value, r)
    return make_node(r, (a,), lambda g: (g.real * phase,), "abs")


def softmax_magnitude(a, axis: int = -1) -> Tensor:
    """Softmax over magnitudes with each entry keeping its phase.

    Zero entries have no phase; they take part in the denominator and map to 0.
    """
    a = as_tensor(a)
    axis = _axis(a, axis)
    z = a.value
    r = np.hypot(a.re, a.im)
    shifted = np.exp(r - r.max(axis=axis, keepdims=True))
    s = shifted / shifted.sum(axis=axis, keepdims=True)
    u = _unit_phase(z, r)

    def _backward(g):
        # through the softmax weights
        ds = np.real(np.conj(g) * u)
        dr = s * (ds - (ds * s).sum(axis=axis, keepdims=True))
        # through the phase factor, which only moves orthogonally to z
        scale = np.zeros_like(r)
        np.divide(s, r, out=scale, where=r > 0)
        tangential = scale * (g - np.real(np.conj(g) * u) * u)
        return (dr * u + tangential,)

    return make_node(s * u, (a,), _backward, "csoftmax")


def fft(a, n: int | None = None) -> Tensor:
    """Un-normalised DFT along the last axis, zero-padding the input to ``n``."""
    a = as_tensor(a)
    length = a.shape[-1]
    n = length if n is None else n
    if n < length:
        raise DimensionError(f"fft length {n} shorter than input axis {length}")
    if n != length:
        a = pad(a, n, axis=-1)

    def _backward(g):
        # adjoint of the unnormalised DFT is n * inverse DFT
        return (n * spectral.fft(g, inverse=True),)

    return make_node(spectral.fft(a.value), (a,), _backward, "fft")
