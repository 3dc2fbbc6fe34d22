from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

MASK64 = (1 << 64) - 1
THREADS_ENV = "SFILES_FORGE_THREADS"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(seed: int, counter: int) -> int:
    """Derive an independent 64-bit seed for record ``counter``."""
    return splitmix64((seed & MASK64) ^ splitmix64(counter & MASK64))


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, requested)
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1, chunksize: int = 64) -> list[R]:
    """``map`` that may fan out to processes; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) < 2 * chunksize:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
