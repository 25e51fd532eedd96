"""Deterministic fan-out for restarts and sweep trials.

Results are collected by index, so the reduction is independent of thread
scheduling; ENTLAB_THREADS caps the pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_threads(requested: int | None = None) -> int:
    cap = os.environ.get("ENTLAB_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    if requested is None:
        requested = 1
    return max(1, min(int(requested), cap))


def indexed_map(fn, count: int, threads: int = 1) -> list:
    """Evaluate ``fn(i)`` for i in range(count), in index order."""
    threads = max_threads(threads)
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))
