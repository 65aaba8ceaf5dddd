"""Replicate-loop helper: map a pure function over replicate indices.

Every replicate derives its RNG stream from (seed, index), so results are
identical whatever the worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def replicate_map(fn: Callable[[int], T], n: int, threads: int = 1) -> list[T]:
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))
