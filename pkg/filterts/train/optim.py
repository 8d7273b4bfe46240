"""Adam with bias correction.

A complex parameter is two independent real coordinates. Moments are packed the same
way as the parameter: the real part of ``m``/``v`` belongs to the real coordinate, the
imaginary part to the imaginary one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from filterts.autodiff.tensor import Tensor
from filterts.errors import NonFiniteError


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def collect_grads(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: p.grad_re.copy() if p.real_only else p.grad for name, p in params.items()}


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Rescale all gradients in place so their joint norm is at most ``max_norm``."""
    total = float(np.sqrt(sum(np.sum(np.abs(g) ** 2) for g in grads.values())))
    if total > max_norm > 0:
        scale = max_norm / total
        for name in grads:
            grads[name] = grads[name] * scale
    return total


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> AdamState:
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient in parameter {name}")

    beta1, beta2 = betas
    state.step += 1
    bc1 = 1.0 - beta1**state.step
    bc2 = 1.0 - beta2**state.step

    for name, p in params.items():
        g = grads[name]
        g_re = np.real(g)
        g_im = np.imag(g) if not p.real_only else np.zeros_like(g_re)
        if name not in state.m:
            state.m[name] = np.zeros(p.shape, dtype=np.complex128)
            state.v[name] = np.zeros(p.shape, dtype=np.complex128)

        m = beta1 * state.m[name] + (1.0 - beta1) * (g_re + 1j * g_im)
        v = beta2 * state.v[name] + (1.0 - beta2) * (g_re * g_re + 1j * (g_im * g_im))
        state.m[name], state.v[name] = m, v

        p.re -= lr * (m.real / bc1) / (np.sqrt(v.real / bc2) + eps)
        if not p.real_only:
            p.im -= lr * (m.imag / bc1) / (np.sqrt(v.imag / bc2) + eps)
    return state
