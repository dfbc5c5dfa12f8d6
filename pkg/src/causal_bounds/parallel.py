"""Per-replicate random streams and an order-preserving parallel map."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional

import numpy as np

THREADS_ENV = "CAUSAL_BOUNDS_THREADS"


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Philox stream keyed by (seed, index); independent of execution order."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def worker_count(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def map_ordered(fn: Callable, jobs: Iterable, workers: Optional[int] = None) -> list:
    """``[fn(j) for j in jobs]``, optionally spread over worker processes.

    Results come back in job order, so reductions over them do not depend on
    scheduling.
    """
    jobs = list(jobs)
    k = min(worker_count(workers), max(len(jobs), 1))
    if k == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * k))))
