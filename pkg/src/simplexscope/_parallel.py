"""Chunked work splitting with per-chunk random streams.

Every chunk draws from its own generator seeded by ``(seed, chunk_index)``,
so results do not depend on how many workers run the chunks.
``SIMPLEXSCOPE_THREADS`` caps the worker count (default 1).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 1 << 16


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("SIMPLEXSCOPE_THREADS", "1")))
    except ValueError:
        return 1


def chunk_sizes(n: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def chunk_rng(seed, index: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(index)]))


def pmap(fn, items):
    """``list(map(fn, items))``, threaded when more than one worker is allowed."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
