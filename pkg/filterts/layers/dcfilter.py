"""Dynamic cross-variable filtering.

Every variable's window spectrum, thresholded at its own alpha-quantile, becomes a
filter that is applied (conjugated) to every other variable. A learnable complex
matrix, made sparse by ``csoftmax(crelu(.))``, decides how much each source filter
contributes to each target variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from filterts import spectral
from filterts.autodiff.tensor import Tensor, conj, matmul, mul
from filterts.errors import ContractError, DimensionError
from filterts.layers.complex_nn import sparse_weights
from filterts.layers.embedding import FreqRepr


@dataclass
class DynamicFilterSet:
    """Thresholded window spectra.

    ``keep`` is the retained-bin mask and stays a constant of the window; the kept
    spectrum values themselves remain differentiable in :func:`dc_filter_forward`.
    """

    H: np.ndarray
    tau: np.ndarray
    keep: np.ndarray


@dataclass
class DCFilterParams:
    A_o: Tensor
    W: Tensor

    @classmethod
    def create(cls, n_vars: int, d_model: int, name: str) -> DCFilterParams:
        return cls(
            A_o=Tensor.parameter(np.ones((n_vars, d_model), dtype=np.complex128), name=f"{name}.A_o"),
            W=Tensor.parameter(
                np.full((n_vars, n_vars), 1.0 / n_vars, dtype=np.complex128), name=f"{name}.W"
            ),
        )

    def parameters(self) -> list[Tensor]:
        return [self.A_o, self.W]


def build_dynamic_filters(x_freq: FreqRepr, alpha: float) -> DynamicFilterSet:
    """Keep bins whose magnitude strictly exceeds the per-variable alpha-quantile.

    The quantile (linear interpolation between order statistics) is taken over the
    informative band 0..L only; the zero-filled tail never enters a filter.
    """
    if not 0.0 < alpha < 1.0:
        raise ContractError(f"quantile level must lie in (0, 1), got {alpha}")
    z = x_freq.values.value
    band = x_freq.band
    mags = spectral.magnitude(z)
    tau = np.quantile(mags[..., :band], alpha, axis=-1)
    keep = mags > tau[..., None]
    keep[..., band:] = False
    return DynamicFilterSet(H=np.where(keep, z, 0.0), tau=tau, keep=keep)


def dc_filter_forward(x_freq: FreqRepr, params: DCFilterParams, filters: DynamicFilterSet) -> Tensor:
    """O_i = sum_k (X_i * A_o_i * conj(H_k)) W*_ik with W* = csoftmax(crelu(W)) over k."""
    x = x_freq.values
    n_vars, d_model = x.shape[-2:]
    if params.A_o.shape != (n_vars, d_model) or params.W.shape != (n_vars, n_vars):
        raise DimensionError(
            f"dynamic filter params A_o {params.A_o.shape}, W {params.W.shape} "
            f"do not fit a {n_vars}x{d_model} spectrum"
        )
    if filters.keep.shape != x.shape:
        raise DimensionError(f"filters {filters.keep.shape} vs spectrum {x.shape}")

    scaled = mul(x, params.A_o)
    w_star = sparse_weights(params.W, axis=-1)
    # sum over k folds into one matmul since the scaled spectrum does not depend on k
    kept = mul(x, Tensor(filters.keep.astype(np.float64)))
    mixed_filters = matmul(w_star, conj(kept))
    return mul(scaled, mixed_filters)
