'''
Quality indicators for bi-objective minimization fronts.
'''
from __future__ import annotations

import logging
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from downlink_tools.exceptions import MetricError
from downlink_tools.scheduling.model import TOLERANCE, ObjectivePoint

LOGGER = logging.getLogger(__name__)

REFERENCE = (1.0, 1.0)


def _as_array(front: Iterable) -> np.ndarray:
    rows = [p.as_tuple() if isinstance(p, ObjectivePoint) else tuple(p) for p in front]
    points = np.asarray(rows, dtype=float).reshape(-1, 2)
    if points.size and ((points < -TOLERANCE).any() or (points > 1.0 + TOLERANCE).any()):
        raise MetricError('front points must lie in the unit box')
    return points


def hypervolume_hso(front: Iterable, reference: Sequence[float] = REFERENCE) -> float:
    '''Exact dominated area below the reference point, by slicing along f1'''
    points = _as_array(front)
    ref = np.asarray(reference, dtype=float)
    if points.size == 0:
        return 0.0
    points = points[(points < ref).all(axis=1)]
    if points.size == 0:
        return 0.0

    order = np.lexsort((points[:, 1], points[:, 0]))
    volume = 0.0
    best_f2 = ref[1]
    for f1, f2 in points[order]:
        if f2 >= best_f2:
            continue
        volume += (ref[0] - f1) * (best_f2 - f2)
        best_f2 = f2
    return float(volume)


def hypervolume_mc(front: Iterable, reference: Sequence[float] = REFERENCE, samples: int = 100_000,
                   rng: np.random.Generator | int | None = None) -> tuple[float, float]:
    '''Monte-Carlo estimate of the hypervolume and its standard error'''
    if samples < 1:
        raise MetricError(f'samples must be at least 1, got {samples}')
    points = _as_array(front)
    ref = np.asarray(reference, dtype=float)
    box = float(np.prod(ref))
    if points.size == 0:
        return 0.0, 0.0

    rng = np.random.default_rng(rng)
    draws = rng.random((samples, 2)) * ref

    # a draw is dominated when some point with f1 <= x has f2 <= y: prefix minima over f1
    order = np.argsort(points[:, 0], kind='stable')
    sorted_f1 = points[order, 0]
    prefix_min_f2 = np.minimum.accumulate(points[order, 1])
    reach = np.searchsorted(sorted_f1, draws[:, 0], side='right')
    covered = np.zeros(samples, dtype=bool)
    has_any = reach > 0
    covered[has_any] = prefix_min_f2[reach[has_any] - 1] <= draws[has_any, 1]

    share = covered.mean()
    stderr = float(np.sqrt(share * (1.0 - share) / samples)) * box
    return float(share * box), stderr


def front_stats(front: Iterable) -> tuple[float, float]:
    '''Mean f1 and mean f2 over the front'''
    points = _as_array(front)
    if points.size == 0:
        raise MetricError('front statistics need at least one point')
    means = points.mean(axis=0)
    return float(means[0]), float(means[1])


def pareto_filter(front: Iterable) -> list[int]:
    '''Indices of the nondominated points; duplicates collapse to their first occurrence'''
    points = _as_array(front)
    keep = []
    for i, p in enumerate(points):
        dominated = False
        for j, q in enumerate(points):
            if i == j:
                continue
            if (q <= p).all() and ((q < p).any() or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def sign_test(a: Sequence[float], b: Sequence[float]) -> tuple[int, int, float]:
    '''Paired one-sided sign test of a > b; ties dropped'''
    if len(a) != len(b):
        raise MetricError('sign test needs paired samples of equal length')
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    wins = int((diff > 0).sum())
    losses = int((diff < 0).sum())
    if wins + losses == 0:
        return 0, 0, 1.0
    result = stats.binomtest(wins, wins + losses, p=0.5, alternative='greater')
    return wins, losses, float(result.pvalue)
