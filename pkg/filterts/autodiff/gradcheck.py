"""Central finite-difference checks for the autodiff engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from filterts.autodiff.tensor import Tensor


@dataclass
class GradCheckResult:
    name: str
    part: str
    index: tuple[int, ...]
    analytic: float
    numeric: float

    @property
    def relative_error(self) -> float:
        scale = max(abs(self.analytic), abs(self.numeric), 1e-8)
        return abs(self.analytic - self.numeric) / scale


def numeric_gradient(
    loss_fn: Callable[[], Tensor],
    leaf: Tensor,
    part: str,
    index: tuple[int, ...],
    step: float = 1e-6,
) -> float:
    buffer = leaf.re if part == "re" else leaf.im
    original = buffer[index]
    buffer[index] = original + step
    plus = float(loss_fn().re)
    buffer[index] = original - step
    minus = float(loss_fn().re)
    buffer[index] = original
    return (plus - minus) / (2 * step)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    leaves: Iterable[Tensor],
    samples: int | None = None,
    step: float = 1e-6,
    rng: np.random.Generator | None = None,
) -> list[GradCheckResult]:
    """Compare backward() against central differences on real and imaginary coordinates.

    ``loss_fn`` must rebuild the graph from the current leaf values on every call.
    With ``samples`` set, that many coordinates are drawn per leaf; otherwise all are
    checked.
    """
    leaves = list(leaves)
    for leaf in leaves:
        leaf.zero_grad()
    loss_fn().backward()

    rng = rng or np.random.default_rng(0)
    results = []
    for leaf in leaves:
        parts = ["re"] if leaf.real_only else ["re", "im"]
        coords = [(p, idx) for p in parts for idx in np.ndindex(leaf.shape)]
        if samples is not None and samples < len(coords):
            picks = rng.choice(len(coords), size=samples, replace=False)
            coords = [coords[i] for i in sorted(picks)]
        for part, idx in coords:
            analytic = (leaf.grad_re if part == "re" else leaf.grad_im)[idx]
            numeric = numeric_gradient(loss_fn, leaf, part, idx, step)
            results.append(
                GradCheckResult(leaf.name or "?", part, idx, float(analytic), numeric)
            )
    return results
