'''
Mutable bookkeeping of who occupies which window.

A WindowState holds at most one task per window. Blocked time inside a window comes from
the tasks of its neighbours: tasks at the same station (plus the set-up gap when the
satellite differs) and tasks of the same satellite at other stations. Free segments are
cached per window and dropped whenever anything moves.
'''
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from downlink_tools.scheduling.model import (
    GRID, TOLERANCE, DownlinkTask, Instance, Schedule, SegmentationPlan, SolveMode,
    TransmissionWindow, on_grid)

LOGGER = logging.getLogger(__name__)


@dataclass
class _Task:
    window: str
    begin: float
    d_set: list[tuple[str, float]] = field(default_factory=list)

    @property
    def duration(self) -> float:
        return on_grid(sum(seconds for _, seconds in self.d_set))

    @property
    def end(self) -> float:
        return self.begin + self.duration

    def clone(self) -> _Task:
        return _Task(self.window, self.begin, list(self.d_set))


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for start, stop in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], stop)
        else:
            merged.append([start, stop])
    return [(start, stop) for start, stop in merged]


class WindowState:
    def __init__(self, instance: Instance, mode: SolveMode = SolveMode()):
        self.instance = instance
        self.mode = mode
        self._tasks: dict[str, _Task] = {}
        self._plans: dict[str, SegmentationPlan] = {}
        self._free: dict[str, list[tuple[float, float]]] = {}
        self._spans: dict[str, tuple[float, float]] | None = None

    # ------------------------------- conversion ------------------------------- #
    @classmethod
    def from_schedule(cls, instance: Instance, mode: SolveMode, schedule: Schedule) -> WindowState:
        state = cls(instance, mode)
        for task in schedule.tasks:
            if task.window in state._tasks:
                raise ValueError(f'two tasks in window {task.window}')
            state._tasks[task.window] = _Task(task.window, task.begin, list(task.d_set))
        state._plans = {plan.datum: plan for plan in schedule.plans}
        return state

    def to_schedule(self) -> Schedule:
        begin_of = {w.id: (w.begin, w.id) for w in self.instance.windows}
        tasks = tuple(
            DownlinkTask(id=f'dt-{task.window}', window=task.window, begin=task.begin,
                         d_set=tuple(task.d_set))
            for task in sorted(self._tasks.values(), key=lambda t: (t.begin, t.window)))
        plans = tuple(
            SegmentationPlan(datum, tuple(sorted(plan.pieces, key=lambda p: begin_of[p[0]])))
            for datum, plan in sorted(self._plans.items()))
        return Schedule(tasks=tasks, plans=plans, scheduled=frozenset(self._plans))

    def copy(self) -> WindowState:
        twin = WindowState(self.instance, self.mode)
        twin.restore(self.checkpoint())
        return twin

    def checkpoint(self):
        return ({wid: task.clone() for wid, task in self._tasks.items()}, dict(self._plans))

    def restore(self, checkpoint) -> None:
        tasks, plans = checkpoint
        self._tasks = {wid: task.clone() for wid, task in tasks.items()}
        self._plans = dict(plans)
        self._invalidate()

    # -------------------------------- queries --------------------------------- #
    @property
    def scheduled(self) -> frozenset[str]:
        return frozenset(self._plans)

    def plan(self, datum_id: str) -> SegmentationPlan | None:
        return self._plans.get(datum_id)

    def tasks(self) -> tuple[DownlinkTask, ...]:
        return self.to_schedule().tasks

    def holds(self, window_id: str, datum_id: str) -> bool:
        task = self._tasks.get(window_id)
        return task is not None and any(d == datum_id for d, _ in task.d_set)

    def free_segments(self, window_id: str) -> list[tuple[float, float]]:
        '''Parts of the window not blocked by neighbouring tasks; the window's own task is
        not counted as blocking'''
        if window_id not in self._free:
            window = self.instance.window(window_id)
            cursor = window.begin
            segments = []
            for start, stop in self._blocked(window):
                if stop <= cursor:
                    continue
                if start >= window.end:
                    break
                if start - cursor > GRID:
                    segments.append((cursor, start))
                cursor = max(cursor, stop)
            if window.end - cursor > GRID:
                segments.append((cursor, window.end))
            self._free[window_id] = segments
        return self._free[window_id]

    def free_capacity(self, window_id: str) -> float:
        '''Seconds of the window still usable, after its own task and the reserved set-up gaps'''
        task = self._tasks.get(window_id)
        used = task.duration if task else 0.0
        return max(0.0, on_grid(sum(stop - start for start, stop in self.free_segments(window_id)) - used))

    def capacity_for(self, window_id: str, datum_id: str) -> float:
        '''Most seconds of the datum this window could still take, floored to the grid'''
        if self.holds(window_id, datum_id):
            return 0.0
        task = self._tasks.get(window_id)
        data_ids = [d for d, _ in task.d_set] if task else []
        bounds = self._bounds(self.instance.window(window_id), data_ids + [datum_id])
        if bounds is None:
            return 0.0
        lo, latest_begin, end_limit = bounds

        best = 0.0
        for start, stop in self.free_segments(window_id):
            begin = max(start, lo)
            if begin > latest_begin + TOLERANCE:
                break
            best = max(best, min(stop, end_limit) - begin)
        room = best - (task.duration if task else 0.0)
        if room <= 0:
            return 0.0
        return on_grid(math.floor(room / GRID + 1e-6) * GRID)

    def latest_completion(self, window_id: str, begin: float, end_limit: float = math.inf) -> float:
        '''Latest end of a task starting at begin, found by bisection to the grid'''
        window = self.instance.window(window_id)
        upper = min(window.end, end_limit)
        if self._conflict_free(window, begin, upper):
            return upper
        lo, hi = begin, upper
        while hi - lo > GRID:
            mid = (lo + hi) / 2
            if self._conflict_free(window, begin, mid):
                lo = mid
            else:
                hi = mid
        return lo

    # -------------------------------- updates --------------------------------- #
    def place(self, window_id: str, datum_id: str, seconds: float) -> bool:
        '''Add one piece to the window's task (or open one), packed at its earliest begin.
        Answers False and leaves the state alone when the piece does not fit.'''
        window = self.instance.window(window_id)
        previous = self._tasks.get(window_id)
        if previous is not None and any(d == datum_id for d, _ in previous.d_set):
            return False

        d_set = (list(previous.d_set) if previous else []) + [(datum_id, on_grid(seconds))]
        d_set.sort(key=lambda piece: self.instance.datum(piece[0]).key)
        total = on_grid(sum(s for _, s in d_set))

        bounds = self._bounds(window, [d for d, _ in d_set])
        if bounds is None:
            return False
        begin = self._earliest(window, bounds, total)
        if begin is None:
            return False
        if begin + total > self.latest_completion(window_id, begin, bounds[2]) + GRID:
            return False

        self._tasks[window_id] = _Task(window_id, begin, d_set)
        self._invalidate()
        if self.mode.fofd and not self._release_order_holds(window.satellite):
            self._put_back(window_id, previous)
            return False
        return True

    def commit(self, plan: SegmentationPlan) -> None:
        self._plans[plan.datum] = plan

    def remove(self, datum_id: str) -> None:
        '''Take every piece of the datum out; emptied tasks disappear, others keep their begin'''
        for window_id in list(self._tasks):
            task = self._tasks[window_id]
            kept = [(d, s) for d, s in task.d_set if d != datum_id]
            if len(kept) == len(task.d_set):
                continue
            if kept:
                task.d_set = kept
            else:
                del self._tasks[window_id]
        self._plans.pop(datum_id, None)
        self._invalidate()

    def repack(self) -> None:
        '''Slide every task to its earliest feasible begin, earliest tasks first'''
        for task in sorted(self._tasks.values(), key=lambda t: (t.begin, t.window)):
            window = self.instance.window(task.window)
            bounds = self._bounds(window, [d for d, _ in task.d_set])
            if bounds is None:
                continue
            begin = self._earliest(window, bounds, task.duration)
            if begin is None or begin >= task.begin - TOLERANCE:
                continue
            old = task.begin
            task.begin = begin
            self._invalidate()
            if self.mode.fofd and not self._release_order_holds(window.satellite):
                task.begin = old
                self._invalidate()

    # -------------------------------- helpers --------------------------------- #
    def _invalidate(self) -> None:
        self._free.clear()
        self._spans = None

    def _put_back(self, window_id: str, previous: _Task | None) -> None:
        if previous is None:
            self._tasks.pop(window_id, None)
        else:
            self._tasks[window_id] = previous
        self._invalidate()

    def _blocked(self, window: TransmissionWindow) -> list[tuple[float, float]]:
        blocked = []
        for other_id in self.instance.neighbours(window.id):
            task = self._tasks.get(other_id)
            if task is None:
                continue
            other = self.instance.window(other_id)
            gap = self.instance.sigma if (
                other.station == window.station and other.satellite != window.satellite) else 0.0
            blocked.append((task.begin - gap, task.end + gap))
        return _merge(blocked)

    def _conflict_free(self, window: TransmissionWindow, begin: float, end: float) -> bool:
        if end > window.end + TOLERANCE:
            return False
        for start, stop in self._blocked(window):
            if end > start + TOLERANCE and begin < stop - TOLERANCE:
                return False
        return True

    def _span_map(self) -> dict[str, tuple[float, float]]:
        if self._spans is None:
            spans = {}
            for task in self._tasks.values():
                offset = task.begin
                for datum_id, seconds in task.d_set:
                    first, last = spans.get(datum_id, (math.inf, -math.inf))
                    spans[datum_id] = (min(first, offset), max(last, offset + seconds))
                    offset += seconds
            self._spans = spans
        return self._spans

    def _bounds(self, window: TransmissionWindow, data_ids: list[str]):
        '''(earliest begin, latest begin, latest end) for a task carrying data_ids, or None'''
        data = [self.instance.datum(d) for d in data_ids]
        lo = max([window.begin] + [d.release for d in data])
        latest_begin = min(d.expiry for d in data) - GRID
        end_limit = window.end

        if self.mode.fofd:
            members = set(data_ids)
            kmin = min(d.key for d in data)
            kmax = max(d.key for d in data)
            for other_id, (first, last) in self._span_map().items():
                if other_id in members:
                    continue
                other = self.instance.datum(other_id)
                if other.satellite != window.satellite:
                    continue
                if other.key < kmin:
                    lo = max(lo, last)
                elif other.key > kmax:
                    end_limit = min(end_limit, first)
                else:
                    return None

        if lo > latest_begin + TOLERANCE or lo >= end_limit:
            return None
        return lo, latest_begin, end_limit

    def _earliest(self, window: TransmissionWindow, bounds, total: float) -> float | None:
        lo, latest_begin, end_limit = bounds
        for start, stop in self.free_segments(window.id):
            begin = max(start, lo)
            if begin > latest_begin + TOLERANCE:
                return None
            if begin + total <= min(stop, end_limit) + TOLERANCE:
                return round(begin, 6)
        return None

    def _release_order_holds(self, satellite_id: str) -> bool:
        entries = sorted(
            (self.instance.datum(d).key, first, last)
            for d, (first, last) in self._span_map().items()
            if self.instance.datum(d).satellite == satellite_id)
        latest_end = -math.inf
        for _, first, last in entries:
            if first < latest_end - TOLERANCE:
                return False
            latest_end = max(latest_end, last)
        return True
