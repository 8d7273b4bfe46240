from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

import numpy as np

from filterts.data.splits import SplitView
from filterts.errors import ContractError

T = TypeVar("T")
_DONE = object()


@dataclass
class WindowBatch:
    inputs: np.ndarray  # B x N x L
    targets: np.ndarray  # B x N x F
    origins: np.ndarray  # B, offsets into the split view

    def __len__(self) -> int:
        return len(self.origins)


def window_count(split: SplitView | np.ndarray, window_len: int, horizon: int) -> int:
    values = split.values if isinstance(split, SplitView) else np.asarray(split)
    return max(values.shape[-1] - window_len - horizon + 1, 0)


def window_iter(
    split: SplitView | np.ndarray,
    window_len: int,
    horizon: int,
    batch_size: int,
    shuffle: bool = False,
    rng: np.random.Generator | None = None,
) -> Iterator[WindowBatch]:
    """Every (lookback, target) window of the split exactly once, in batches."""
    values = split.values if isinstance(split, SplitView) else np.asarray(split, dtype=np.float64)
    if batch_size < 1:
        raise ContractError(f"batch size must be positive, got {batch_size}")
    count = window_count(values, window_len, horizon)
    if count < 1:
        raise ContractError(
            f"split of {values.shape[-1]} steps holds no window of {window_len}+{horizon}"
        )

    span = np.lib.stride_tricks.sliding_window_view(values, window_len + horizon, axis=-1)
    if shuffle:
        order = (rng or np.random.default_rng(0)).permutation(count)
    else:
        order = np.arange(count)

    for first in range(0, count, batch_size):
        origins = order[first : first + batch_size]
        windows = np.ascontiguousarray(span[:, origins, :].transpose(1, 0, 2))
        yield WindowBatch(
            inputs=windows[..., :window_len],
            targets=windows[..., window_len:],
            origins=origins,
        )


def prefetch(items: Iterable[T], depth: int = 2) -> Iterator[T]:
    """Pull up to ``depth`` items ahead on a single worker thread, order preserved."""
    if depth <= 0:
        yield from items
        return
    source = iter(items)
    with ThreadPoolExecutor(max_workers=1) as pool:
        pending = deque(pool.submit(next, source, _DONE) for _ in range(depth))
        while pending:
            item = pending.popleft().result()
            if item is _DONE:
                break
            pending.append(pool.submit(next, source, _DONE))
            yield item
