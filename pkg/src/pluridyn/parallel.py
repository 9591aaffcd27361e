"""Deterministic chunked parallelism.

Work is cut into chunks whose boundaries depend only on the problem size, and
results are concatenated in chunk order, so outputs are identical for any
thread count.
"""
import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "PLURIDYN_THREADS"


def resolve_threads(threads=None):
    """Thread count: the environment variable wins over the argument."""
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, int(threads or 1))


def chunk_ranges(n, chunk):
    return [(s, min(s + chunk, n)) for s in range(0, n, chunk)]


def map_chunks(func, n, chunk=256, threads=None):
    """Evaluate ``func(start, stop)`` over fixed chunks of ``range(n)``, in order."""
    ranges = chunk_ranges(n, chunk)
    t = resolve_threads(threads)
    if t == 1 or len(ranges) <= 1:
        return [func(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=t) as ex:
        return list(ex.map(lambda r: func(*r), ranges))
