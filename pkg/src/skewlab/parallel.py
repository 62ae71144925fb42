"""Order-preserving parallel map for sample loops.

Work items are keyed by index and every random draw comes from a
counter-based stream keyed by that index, so the schedule (worker count,
chunking) cannot change any result; only wall time varies.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def indexed_map(fn, count: int, workers: int = 1) -> list:
    """[fn(0), fn(1), ..., fn(count-1)], optionally on a thread pool.

    Threads suffice here: the compiled kernels release the GIL for the
    duration of each inner loop.
    """
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))
