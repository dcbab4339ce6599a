"""Thread-pool plumbing with deterministic reductions.

Parallelism never changes results here: work is split into fixed chunks whose
outputs are recombined in input order, so a report produced with one thread is
byte-identical to one produced with eight.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

THREADS_ENV_VAR = "RSNN_LAB_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(requested: int | None = None) -> int:
    """Thread count: explicit argument, then RSNN_LAB_THREADS, then CPU count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return max(1, os.cpu_count() or 1)


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int | None = None) -> list[R]:
    """Map preserving input order; single-threaded fast path avoids pool overhead."""
    count = resolve_threads(threads)
    if count <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, items))


def chunked(seq: Sequence[T], size: int) -> Iterable[Sequence[T]]:
    for start in range(0, len(seq), size):
        yield seq[start:start + size]
