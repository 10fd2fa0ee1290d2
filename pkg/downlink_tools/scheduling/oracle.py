'''
Exhaustive ground truth for tiny instances.

Every subset of data is tried with every grid-discretized way of cutting its members over
their admissible windows; a choice counts when some ordering of the resulting tasks packs
left-earliest without violating any constraint. The best service balance per subset gives
one candidate point; the nondominated candidates are the exact front.
'''
from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict

from downlink_tools.exceptions import OracleLimitError
from downlink_tools.scheduling.metrics import pareto_filter
from downlink_tools.scheduling.model import (
    GRID, TOLERANCE, DownlinkTask, Instance, ObjectivePoint, Schedule, SegmentationPlan,
    SolveMode, evaluate, on_grid)

LOGGER = logging.getLogger(__name__)

MAX_DATA = 6
MAX_WINDOWS = 4


def split_options(instance: Instance, datum_id: str, mode: SolveMode, grid: float) -> list[tuple]:
    '''Every way to cut the datum into ((window, seconds), ...) pieces'''
    datum = instance.datum(datum_id)
    d0 = instance.d0_of(datum_id)
    windows = instance.admissible_windows(datum_id)
    whole = [((w,), (datum.duration,)) for w in windows
             if datum.duration <= instance.window(w).length + TOLERANCE]
    if not mode.segmented:
        return [tuple(zip(ws, ds)) for ws, ds in whole]

    options = []
    smallest = math.ceil(d0 / grid - 1e-9)
    for k in range(1, len(windows) + 1):
        for chosen in itertools.combinations(windows, k):
            for durations in _cuts(datum.duration, k, grid, smallest, d0):
                if all(s <= instance.window(w).length + TOLERANCE for w, s in zip(chosen, durations)):
                    options.append(tuple(zip(chosen, durations)))
    return options


def _cuts(total: float, pieces: int, grid: float, smallest: int, d0: float):
    '''k-1 grid multiples of at least d0 followed by a remainder of at least d0'''
    if pieces == 1:
        if total >= d0 - TOLERANCE:
            yield (on_grid(total),)
        return
    units = smallest
    while units * grid <= total - d0 + TOLERANCE:
        head = on_grid(units * grid)
        for rest in _cuts(total - head, pieces - 1, grid, smallest, d0):
            yield (head,) + rest
        units += 1


def _pack(instance: Instance, mode: SolveMode, assignment: dict[str, list[tuple[str, float]]]) -> list[DownlinkTask] | None:
    '''Try every task order with earliest-begin placement; answer the first feasible packing'''
    loads = []
    for window_id, pieces in assignment.items():
        d_set = sorted(pieces, key=lambda p: instance.datum(p[0]).key)
        loads.append((window_id, tuple(d_set)))

    for order in itertools.permutations(loads):
        placed: list[DownlinkTask] = []
        for window_id, d_set in order:
            begin = _earliest(instance, mode, window_id, d_set, placed)
            if begin is None:
                break
            placed.append(DownlinkTask(f'dt-{window_id}', window_id, begin, d_set))
        else:
            if not mode.fofd or _release_order_holds(instance, placed):
                return placed
    return None


def _earliest(instance: Instance, mode: SolveMode, window_id: str, d_set, placed) -> float | None:
    window = instance.window(window_id)
    data = [instance.datum(d) for d, _ in d_set]
    total = on_grid(sum(s for _, s in d_set))
    begin = max([window.begin] + [d.release for d in data])
    latest_begin = min(d.expiry for d in data) - GRID

    blocked = []
    for task in placed:
        other = instance.window(task.window)
        if other.station == window.station:
            gap = instance.sigma if other.satellite != window.satellite else 0.0
            blocked.append((task.begin - gap, task.end + gap))
        elif other.satellite == window.satellite:
            blocked.append((task.begin, task.end))
        if mode.fofd and other.satellite == window.satellite:
            keys = [instance.datum(d).key for d, _ in task.d_set]
            if max(keys) < min(d.key for d in data):
                begin = max(begin, task.end)

    moved = True
    while moved:
        moved = False
        for start, stop in blocked:
            if begin + total > start + TOLERANCE and begin < stop - TOLERANCE:
                begin = stop
                moved = True
    if begin > latest_begin + TOLERANCE or begin + total > window.end + TOLERANCE:
        return None
    return begin


def _release_order_holds(instance: Instance, tasks: list[DownlinkTask]) -> bool:
    spans = {}
    for task in tasks:
        offset = task.begin
        for datum_id, seconds in task.d_set:
            first, last = spans.get(datum_id, (math.inf, -math.inf))
            spans[datum_id] = (min(first, offset), max(last, offset + seconds))
            offset += seconds
    by_satellite = defaultdict(list)
    for datum_id, (first, last) in spans.items():
        datum = instance.datum(datum_id)
        by_satellite[datum.satellite].append((datum.key, first, last))
    for entries in by_satellite.values():
        latest = -math.inf
        for _, first, last in sorted(entries):
            if first < latest - TOLERANCE:
                return False
            latest = max(latest, last)
    return True


def _best_schedule(instance: Instance, mode: SolveMode, subset: list[str], options: dict) -> Schedule | None:
    '''Feasible schedule of exactly `subset` with the lowest service balance, or None'''
    best: tuple[float, Schedule] | None = None
    length = {w.id: w.length for w in instance.windows}

    def search(position: int, chosen: list, load: dict):
        nonlocal best
        if position == len(subset):
            assignment = defaultdict(list)
            for datum_id, option in zip(subset, chosen):
                for window_id, seconds in option:
                    assignment[window_id].append((datum_id, seconds))
            tasks = _pack(instance, mode, assignment)
            if tasks is None:
                return
            schedule = Schedule(
                tuple(sorted(tasks, key=lambda t: (t.begin, t.window))),
                tuple(SegmentationPlan(d, tuple(o)) for d, o in sorted(zip(subset, chosen))),
                frozenset(subset))
            f2 = evaluate(instance, schedule).f2
            if best is None or f2 < best[0] - TOLERANCE:
                best = (f2, schedule)
            return

        for option in options[subset[position]]:
            if any(load[w] + s > length[w] + TOLERANCE for w, s in option):
                continue
            for w, s in option:
                load[w] += s
            search(position + 1, chosen + [option], load)
            for w, s in option:
                load[w] -= s

    search(0, [], defaultdict(float))
    return None if best is None else best[1]


def exact_front(instance: Instance, mode: SolveMode | str, grid: float | None = None) -> list[ObjectivePoint]:
    '''Nondominated objective points over every feasible discretized schedule, sorted by f1'''
    if len(instance.data) > MAX_DATA or len(instance.windows) > MAX_WINDOWS:
        raise OracleLimitError(
            f'oracle handles at most {MAX_DATA} data and {MAX_WINDOWS} windows, '
            f'got {len(instance.data)} and {len(instance.windows)}')
    mode = SolveMode.parse(mode)
    grid = grid or max((s.d0 for s in instance.satellites), default=1.0)
    if grid <= 0:
        raise ValueError(f'grid must be positive, got {grid}')

    ids = [d.id for d in instance.data]
    options = {d: split_options(instance, d, mode, grid) for d in ids}
    candidates = []
    for size in range(len(ids) + 1):
        for subset in itertools.combinations(ids, size):
            if any(not options[d] for d in subset):
                continue
            schedule = _best_schedule(instance, mode, list(subset), options)
            if schedule is not None:
                candidates.append(evaluate(instance, schedule))

    front = [candidates[i] for i in pareto_filter(candidates)]
    LOGGER.debug('oracle: %d feasible subsets, %d front points', len(candidates), len(front))
    return sorted(front, key=lambda p: p.as_tuple())
