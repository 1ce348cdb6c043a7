"""Chunked thread-pool helpers.

Work is always split into fixed-size chunks, independent of the thread
count, so every chunk sees identical inputs and results do not depend on
how many workers ran them.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_SIZE = 256


def default_threads():
    env = os.environ.get("MUYGPS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def chunk_slices(n, chunk=CHUNK_SIZE):
    return [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]


def chunked_map(fn, n, threads=None, chunk=CHUNK_SIZE):
    """Call ``fn(slice)`` over ``range(n)`` in fixed chunks; return results in order."""
    slices = chunk_slices(n, chunk)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(slices) <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, slices))


def concat(parts, axis=0):
    if not parts:
        return None
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p, axis=axis) for p in zip(*parts))
    return np.concatenate(parts, axis=axis)
