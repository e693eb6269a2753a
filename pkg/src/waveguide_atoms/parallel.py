"""Order-preserving parallel map used by the sweeps.

LAPACK releases the GIL, so a thread pool is enough for the small dense
problems here. Output order always follows input order, and every item is
computed by the same code path whatever the worker count, so results do not
depend on the degree of parallelism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def chunked(n: int, n_chunks: int) -> list[slice]:
    """Split ``range(n)`` into at most ``n_chunks`` contiguous slices."""
    n_chunks = max(1, min(n_chunks, n))
    bounds = [round(i * n / n_chunks) for i in range(n_chunks + 1)]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
