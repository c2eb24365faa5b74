"""Seeded random streams and the variance estimators shared by every harness."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``; same key, same draws, any schedule."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))))


def uniform_angles(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    return rng.uniform(-math.pi, math.pi, size=(count, dim))


def default_threads() -> int:
    env = os.environ.get("QKONC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[int], T], count: int, threads: int | None = None) -> list[T]:
    """``[fn(i) for i in range(count)]`` on a thread pool; output order is by index."""
    threads = 1 if threads is None else threads
    if threads <= 1 or count < 2:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


@dataclass(frozen=True)
class VarianceEstimate:
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    count: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "se_mean": self.se_mean,
            "se_variance": self.se_variance,
            "count": self.count,
        }


def estimate(values: Iterable[float] | np.ndarray) -> VarianceEstimate:
    """Bessel-corrected variance with a normal-approximation standard error.

    SE of the sample variance uses the fourth central moment:
    ``Var(s^2) ~ (m4 - s^4 (N-3)/(N-1)) / N``.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    n = v.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mean = math.fsum(v) / n
    mean += math.fsum(v - mean) / n  # corrected two-pass mean; exact for constant samples
    dev = v - mean
    s2 = math.fsum(dev * dev) / (n - 1)
    m4 = math.fsum(dev**4) / n
    var_s2 = max(m4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n
    return VarianceEstimate(mean, s2, math.sqrt(s2 / n), math.sqrt(var_s2), n)


def sample_variance(values: Sequence[float] | np.ndarray) -> float:
    return estimate(values).variance
