"""Estimator output and the seeded replication engine shared by all estimators."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["EstimatorResult", "run_replicates", "default_workers"]

CHUNK = 50_000


@dataclass(frozen=True)
class EstimatorResult:
    """Outcome of one estimator run.

    ``estimate == asym_prefactor * correction``. Baselines report
    ``asym_prefactor = 1`` and ``correction = estimate``.
    """

    estimate: float
    rel_err: float
    R: int
    asym_prefactor: float
    correction: float
    seed: int
    std: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def default_workers() -> int:
    env = os.environ.get("POLARTAIL_THREADS")
    return max(1, int(env)) if env else 1


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _moments(values: np.ndarray) -> tuple[int, float, float]:
    n = values.size
    mean = math.fsum(values) / n
    m2 = math.fsum((values - mean) ** 2)
    return n, mean, m2


def _merge(a, b):
    # Chan et al. pairwise update of (count, mean, M2)
    na, ma, m2a = a
    nb, mb, m2b = b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * nb / n
    return n, mean, m2a + m2b + delta * delta * na * nb / n


def run_replicates(draw, R: int, seed=None, workers: int | None = None):
    """Evaluate ``draw(rng, n) -> array of n replicate values`` ``R`` times.

    The work is split over ``workers`` threads, each with its own stream
    spawned from ``seed``; the per-worker moments are merged in worker order,
    so the result depends only on ``(seed, workers)``.

    Returns
    -------
    mean, std, seed : float, float, int
        Replicate mean, replicate sample standard deviation (``ddof=1``) and
        the integer entropy actually used.
    """
    if R < 2:
        raise ValueError("need at least two replicates")
    ss = _seed_sequence(seed)
    workers = default_workers() if workers is None else max(1, int(workers))
    workers = min(workers, R)
    sizes = [R // workers + (1 if w < R % workers else 0) for w in range(workers)]
    children = ss.spawn(workers)

    def work(w):
        rng = np.random.default_rng(children[w])
        acc = None
        left = sizes[w]
        while left > 0:
            n = min(CHUNK, left)
            vals = np.asarray(draw(rng, n), dtype=float)
            bad = ~np.isfinite(vals)
            if bad.any():
                idx = int(np.flatnonzero(bad)[0])
                raise FloatingPointError(
                    f"non-finite replicate value {vals[idx]!r} "
                    f"(worker {w}, replicate {sizes[w] - left + idx})")
            mom = _moments(vals)
            acc = mom if acc is None else _merge(acc, mom)
            left -= n
        return acc

    if workers == 1:
        parts = [work(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(workers)))
    total = parts[0]
    for p in parts[1:]:
        total = _merge(total, p)
    n, mean, m2 = total
    std = math.sqrt(max(m2, 0.0) / (n - 1))
    entropy = ss.entropy if isinstance(ss.entropy, int) else int(np.asarray(ss.entropy).ravel()[0])
    return mean, std, entropy


def relative_error(mean: float, std: float, R: int) -> float:
    if mean == 0.0:
        return math.inf
    return std / (math.sqrt(R) * abs(mean))
