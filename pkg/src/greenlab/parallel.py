"""Index-sharded execution with worker-count-independent results.

Work is cut into fixed-size chunks by global index; the chunk layout never
depends on the number of workers, and reductions use exactly rounded sums.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK = 1024


def chunk_bounds(n: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    return [(i, min(i + chunk, n)) for i in range(0, n, chunk)]


def map_chunks(fn: Callable[[int, int], object], n: int, workers: int = 1, chunk: int = CHUNK) -> list:
    bounds = chunk_bounds(n, chunk)
    if workers <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda ab: fn(*ab), bounds))


def concat_map(fn: Callable[[int, int], np.ndarray], n: int, workers: int = 1, chunk: int = CHUNK) -> np.ndarray:
    parts = map_chunks(fn, n, workers, chunk)
    return np.concatenate(parts) if parts else np.empty(0)


def det_sum(x) -> float:
    return math.fsum(np.ravel(np.asarray(x, dtype=float)).tolist())


def det_mean(x) -> float:
    x = np.ravel(np.asarray(x, dtype=float))
    return det_sum(x) / len(x) if len(x) else float("nan")
