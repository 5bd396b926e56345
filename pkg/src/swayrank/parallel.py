"""Order-preserving worker pool helpers.

Work units derive their own random streams, so results are identical for any
worker count; the pool only bounds concurrency.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "SWAYRANK_THREADS"


def worker_count(threads: int | None = None) -> int:
    """Resolve a worker count: explicit argument, else the environment, else 1."""
    if threads is None:
        raw = os.environ.get(ENV_THREADS, "")
        threads = int(raw) if raw else 1
    return max(1, int(threads))


def pmap(fn, items, threads: int = 1) -> list:
    """map() preserving order; runs on a thread pool when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
