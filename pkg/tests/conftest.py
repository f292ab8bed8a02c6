"""Shared fixtures and independent oracles used across the suite.

The oracles here deliberately stay naive (full enumeration, all-pairs
distances) so they never share code paths with the implementations they
check.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from maintseg.core import LifeCycle
from maintseg.costs import CostCache, SegmentCost

EPOCH = datetime(2021, 6, 1, tzinfo=timezone.utc)


def make_cycle(samples, atm_id="atm1", cycle_index=0, period=24.0,
               feature_names=None) -> LifeCycle:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    names = feature_names or tuple(f"f{i}" for i in range(samples.shape[1]))
    return LifeCycle(
        atm_id=atm_id, cycle_index=cycle_index, start_time=EPOCH,
        end_time=EPOCH + timedelta(hours=period * samples.shape[0]),
        feature_names=names, samples=samples, period=period)


def mp_brute_force(x: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """O(n^2 m) all-pairs z-normalized distances, smallest index on ties.

    Deliberately materializes every normalized window and every pairwise
    distance; no sliding dot products anywhere.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    excl = (m + 1) // 2
    n_sub = n - m + 1
    z = np.empty((n_sub, m))
    for i in range(n_sub):
        w = x[i:i + m]
        sd = w.std()
        z[i] = 0.0 if sd < 1e-8 else (w - w.mean()) / sd
    profile = np.empty(n_sub)
    index = np.empty(n_sub, dtype=int)
    for i in range(n_sub):
        d = np.sqrt(((z - z[i]) ** 2).sum(axis=1))
        d[max(i - excl, 0):i + excl + 1] = np.inf  # exclusion zone
        j = int(np.argmin(d))  # first minimum -> smallest index on ties
        profile[i] = d[j]
        index[i] = j
    return profile, index


def exhaustive_segmentation(x: np.ndarray, spec: SegmentCost, penalty: float,
                            min_size: int) -> tuple[float, list[tuple[int, ...]]]:
    """Enumerate every admissible breakpoint set; return (best cost, argmin sets).

    Sets within 1e-9 of the optimum all count as argmins (equal-cost ties).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    cache = CostCache(x, spec)
    positions = list(range(min_size, n - min_size + 1))
    best_cost = np.inf
    best_sets: list[tuple[int, ...]] = []

    def walk(prefix: list[int], start: int) -> None:
        nonlocal best_cost, best_sets
        bounds = [0, *prefix, n]
        if all(b - a >= min_size for a, b in zip(bounds, bounds[1:])) or not prefix:
            total = sum(cache.value(a, b) for a, b in zip(bounds, bounds[1:]))
            total += penalty * len(prefix)
            if total < best_cost - 1e-9:
                best_cost = total
                best_sets = [tuple(prefix)]
            elif abs(total - best_cost) <= 1e-9:
                best_sets.append(tuple(prefix))
                best_cost = min(best_cost, total)
        for p in positions:
            if p < start:
                continue
            if prefix and p - prefix[-1] < min_size:
                continue
            walk(prefix + [p], p + 1)

    walk([], 0)
    return best_cost, best_sets


def two_regime_series(n=160, change=80, seed=3) -> np.ndarray:
    """Univariate series switching from a period-8 sine to a square-ish wave."""
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    first = np.sin(2 * np.pi * t / 8.0) + 0.05 * rng.normal(size=n)
    second = np.sign(np.sin(2 * np.pi * t / 16.0)) * 1.5 + 0.05 * rng.normal(size=n)
    return np.where(t < change, first, second)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
