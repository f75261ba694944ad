"""Replicated Monte Carlo: one stream per replicate, order-independent aggregation."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial

from .rng import RngStream

THREADS_ENV = "DP_LAB_THREADS"


@dataclass(frozen=True)
class McEstimate:
    """Mean and standard error (sample sd / sqrt(reps)) of a replicated statistic."""

    mean: float
    se: float
    reps: int
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "se": self.se, "reps": self.reps, "seed": self.seed}


def mc_estimate(values, seed: int) -> McEstimate:
    """Summarize replicate values with compensated (``fsum``) sums."""
    values = [float(v) for v in values]
    n = len(values)
    if n < 2:
        raise ValueError("need at least 2 replicates for a standard error")
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return McEstimate(mean, math.sqrt(var / n), n, int(seed))


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def _run_one(fn, seed, pass_factory, i):
    if pass_factory:
        return fn(partial(RngStream, seed, i))
    return fn(RngStream(seed, i))


def replicate_map(fn, seed: int, reps: int, pass_factory: bool = False) -> list:
    """Evaluate ``fn`` on replicate streams ``0..reps-1``; results in replicate order.

    With ``pass_factory`` the function receives a zero-argument callable that
    builds a fresh copy of its stream, for paired re-draws.  Parallelism is
    capped by ``DP_LAB_THREADS``; results never depend on scheduling.
    """
    job = partial(_run_one, fn, seed, pass_factory)
    threads = thread_count()
    if threads == 1 or reps < 2:
        return [job(i) for i in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(reps), chunksize=1))
