"""Complex linear map, layer norm, ReLU and magnitude softmax."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from filterts.autodiff import ops
from filterts.autodiff.tensor import Tensor, add, as_tensor, matmul, mul
from filterts.errors import DimensionError


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class ComplexLinear:
    """``x @ (W_real + i W_imag) (+ bias)``, weights stored Din x Dout."""

    weight_real: Tensor
    weight_imag: Tensor
    bias: Tensor | None = None

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        d_in: int,
        d_out: int,
        name: str,
        bias: bool = False,
    ) -> ComplexLinear:
        return cls(
            weight_real=Tensor.parameter(
                uniform_init(rng, (d_in, d_out), d_in), name=f"{name}.weight_real", real_only=True
            ),
            weight_imag=Tensor.parameter(
                uniform_init(rng, (d_in, d_out), d_in), name=f"{name}.weight_imag", real_only=True
            ),
            bias=Tensor.parameter(np.zeros(d_out, dtype=np.complex128), name=f"{name}.bias")
            if bias
            else None,
        )

    @property
    def d_in(self) -> int:
        return self.weight_real.shape[0]

    @property
    def d_out(self) -> int:
        return self.weight_real.shape[1]

    @property
    def n_parameters(self) -> int:
        """Real scalars; the complex bias counts twice."""
        return sum(p.size * (1 if p.real_only else 2) for p in self.parameters())

    def parameters(self) -> list[Tensor]:
        params = [self.weight_real, self.weight_imag]
        return params + ([self.bias] if self.bias is not None else [])

    def __call__(self, x) -> Tensor:
        return clinear_apply(self, x)


def clinear_apply(layer: ComplexLinear, x) -> Tensor:
    """Re(out) = Re(x) W_real - Im(x) W_imag, Im(out) = Re(x) W_imag + Im(x) W_real."""
    x = as_tensor(x)
    if x.shape[-1] != layer.d_in:
        raise DimensionError(f"complex linear expects last axis {layer.d_in}, got {x.shape}")
    weight = ops.complex_from(layer.weight_real, layer.weight_imag)
    if x.ndim == 1:
        out = matmul(x.reshape(1, -1), weight).reshape(-1)
    else:
        out = matmul(x, weight)
    if layer.bias is not None:
        out = add(out, layer.bias)
    return out


@dataclass
class ComplexLayerNorm:
    """Per-part standardisation with learnable real gain and bias for each part."""

    gain_re: Tensor
    gain_im: Tensor
    bias_re: Tensor
    bias_im: Tensor
    eps: float = 1e-5

    @classmethod
    def create(cls, width: int, name: str, eps: float = 1e-5) -> ComplexLayerNorm:
        def param(value: float, part: str) -> Tensor:
            return Tensor.parameter(np.full(width, value), name=f"{name}.{part}", real_only=True)

        return cls(
            gain_re=param(1.0, "gain_re"),
            gain_im=param(1.0, "gain_im"),
            bias_re=param(0.0, "bias_re"),
            bias_im=param(0.0, "bias_im"),
            eps=eps,
        )

    def parameters(self) -> list[Tensor]:
        return [self.gain_re, self.gain_im, self.bias_re, self.bias_im]

    def __call__(self, x) -> Tensor:
        return clayernorm(x, axis=-1, eps=self.eps, norm=self)


def clayernorm(x, axis: int = -1, eps: float = 1e-5, norm: ComplexLayerNorm | None = None) -> Tensor:
    """Standardise Re and Im independently along ``axis``; gains/biases act on the last axis."""
    x = as_tensor(x)
    if x.shape[axis] < 2:
        raise DimensionError(f"layer norm needs at least 2 entries along axis {axis}, got {x.shape}")
    re = ops.standardize(ops.real_part(x), axis=axis, eps=eps)
    im = ops.standardize(ops.imag_part(x), axis=axis, eps=eps)
    if norm is not None:
        re = add(mul(re, norm.gain_re), norm.bias_re)
        im = add(mul(im, norm.gain_im), norm.bias_im)
    return ops.complex_from(re, im)


def crelu(x) -> Tensor:
    return ops.relu_parts(x)


def csoftmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if x.shape[axis] < 1:
        raise DimensionError(f"softmax over an empty axis of {x.shape}")
    return ops.softmax_magnitude(x, axis=axis)


def sparse_weights(w, axis: int = -1) -> Tensor:
    """Aggregation weights ``csoftmax(crelu(w))``."""
    return csoftmax(crelu(w), axis=axis)
