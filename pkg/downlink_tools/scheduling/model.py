'''
Domain types, the constraint system and the two objectives.

Everything in this module is immutable. Construction and the neighbourhood operators
work on a mutable WindowState and hand back a Schedule when they are done; this module
is what decides whether that Schedule is feasible and how good it is.

Times are seconds measured from the horizon start. Durations live on a millisecond grid
and every feasibility comparison allows TOLERANCE seconds of float noise.
'''
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from downlink_tools.exceptions import InstanceError, ScheduleResolutionError

LOGGER = logging.getLogger(__name__)

TOLERANCE = 1e-6
GRID = 1e-3
DEFAULT_SIGMA = 60.0


def due_time(priority: int) -> int:
    '''Hours a datum stays valid after its release, by priority (1 lowest, 10 highest)'''
    if isinstance(priority, bool) or int(priority) != priority or not 1 <= priority <= 10:
        raise ValueError(f'priority must be an integer in [1, 10], got {priority!r}')
    if priority <= 3:
        return 24
    if priority <= 6:
        return 12
    if priority <= 9:
        return 6
    return 3


def on_grid(seconds: float) -> float:
    return round(seconds, 3)


# ---------------------------------------------------------------------------- #
#                                 domain types                                 #
# ---------------------------------------------------------------------------- #
@dataclass(frozen=True, slots=True)
class Satellite:
    id: str
    d0: float
    elements: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.d0 > 0:
            raise InstanceError(f'satellite {self.id}: d0 must be positive, got {self.d0}')


@dataclass(frozen=True, slots=True)
class GroundStation:
    id: str
    lat: float
    lon: float
    alt: float = 0.0
    gamma: float = 90.0
    pi_angle: float = 90.0

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise InstanceError(f'station {self.id}: latitude {self.lat} outside [-90, 90]')
        if not -180.0 <= self.lon <= 180.0:
            raise InstanceError(f'station {self.id}: longitude {self.lon} outside [-180, 180]')


@dataclass(frozen=True, slots=True)
class TransmissionWindow:
    id: str
    station: str
    satellite: str
    begin: float
    end: float

    def __post_init__(self):
        if not self.begin < self.end:
            raise InstanceError(f'window {self.id}: begin {self.begin} is not before end {self.end}')

    @property
    def length(self) -> float:
        return self.end - self.begin


@dataclass(frozen=True, slots=True)
class ImageData:
    id: str
    satellite: str
    priority: int
    duration: float
    release: float
    parent: str | None = None

    def __post_init__(self):
        try:
            due_time(self.priority)
        except ValueError as err:
            raise InstanceError(f'datum {self.id}: {err}') from None
        if not self.duration > 0:
            raise InstanceError(f'datum {self.id}: duration must be positive')

    @property
    def due(self) -> int:
        return due_time(self.priority)

    @property
    def expiry(self) -> float:
        '''end of the validity window, seconds'''
        return self.release + self.due * 3600.0

    @property
    def key(self) -> tuple[float, str]:
        '''release order used by FOFD and by dSet ordering'''
        return (self.release, self.id)


@dataclass(frozen=True, slots=True)
class DownlinkTask:
    id: str
    window: str
    begin: float
    d_set: tuple[tuple[str, float], ...]

    @property
    def duration(self) -> float:
        return on_grid(sum(dur for _, dur in self.d_set))

    @property
    def end(self) -> float:
        return self.begin + self.duration

    @property
    def data(self) -> tuple[str, ...]:
        return tuple(datum for datum, _ in self.d_set)


@dataclass(frozen=True, slots=True)
class SegmentationPlan:
    '''How one original datum is cut: (window id, seconds) per piece'''
    datum: str
    pieces: tuple[tuple[str, float], ...]

    @property
    def total(self) -> float:
        return on_grid(sum(dur for _, dur in self.pieces))

    @property
    def windows(self) -> tuple[str, ...]:
        return tuple(window for window, _ in self.pieces)


class Segmentation(str, Enum):
    SEGMENT = 'segment'
    UNSEGMENT = 'unsegment'


class Ordering(str, Enum):
    REARRANGE = 'rearrange'
    FOFD = 'fofd'


@dataclass(frozen=True, slots=True)
class SolveMode:
    segmentation: Segmentation = Segmentation.SEGMENT
    ordering: Ordering = Ordering.REARRANGE

    @classmethod
    def parse(cls, text: str) -> SolveMode:
        '''"segment:rearrange", "unsegment:fofd", ...'''
        if isinstance(text, cls):
            return text
        try:
            seg, order = str(text).strip().lower().split(':')
            return cls(Segmentation(seg), Ordering(order))
        except ValueError:
            raise ValueError(
                f'mode must look like <segment|unsegment>:<rearrange|fofd>, got {text!r}') from None

    @property
    def segmented(self) -> bool:
        return self.segmentation is Segmentation.SEGMENT

    @property
    def fofd(self) -> bool:
        return self.ordering is Ordering.FOFD

    def __str__(self) -> str:
        return f'{self.segmentation.value}:{self.ordering.value}'


ALL_MODES = tuple(SolveMode(seg, order) for seg in Segmentation for order in Ordering)


@dataclass(frozen=True)
class Schedule:
    tasks: tuple[DownlinkTask, ...] = ()
    plans: tuple[SegmentationPlan, ...] = ()
    scheduled: frozenset[str] = frozenset()

    def plan_for(self, datum_id: str) -> SegmentationPlan | None:
        for plan in self.plans:
            if plan.datum == datum_id:
                return plan
        return None


@dataclass(frozen=True, slots=True, order=True)
class ObjectivePoint:
    f1: float
    f2: float

    def __post_init__(self):
        for name in ('f1', 'f2'):
            value = getattr(self, name)
            if not -TOLERANCE <= value <= 1.0 + TOLERANCE:
                raise ValueError(f'{name} = {value} outside [0, 1]')

    def dominates(self, other: ObjectivePoint) -> bool:
        return (self.f1 <= other.f1 and self.f2 <= other.f2
                and (self.f1 < other.f1 or self.f2 < other.f2))

    def as_tuple(self) -> tuple[float, float]:
        return (self.f1, self.f2)


# ---------------------------------------------------------------------------- #
#                                   instance                                   #
# ---------------------------------------------------------------------------- #
@dataclass(frozen=True)
class Instance:
    start: float
    end: float
    satellites: tuple[Satellite, ...]
    stations: tuple[GroundStation, ...]
    windows: tuple[TransmissionWindow, ...]
    data: tuple[ImageData, ...]
    sigma: float = DEFAULT_SIGMA
    name: str = ''
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for attr in ('satellites', 'stations', 'windows', 'data'):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        if not self.start < self.end:
            raise InstanceError(f'horizon start {self.start} is not before end {self.end}')
        if self.sigma < 0:
            raise InstanceError(f'set-up time must be non-negative, got {self.sigma}')

        satellites = _unique('satellite', self.satellites)
        stations = _unique('station', self.stations)
        windows = _unique('window', self.windows)
        data = _unique('datum', self.data)

        for window in self.windows:
            if window.satellite not in satellites:
                raise InstanceError(f'window {window.id}: unknown satellite {window.satellite}')
            if window.station not in stations:
                raise InstanceError(f'window {window.id}: unknown station {window.station}')
            if window.begin < self.start - TOLERANCE or window.end > self.end + TOLERANCE:
                raise InstanceError(f'window {window.id} lies outside the horizon')
        for datum in self.data:
            if datum.satellite not in satellites:
                raise InstanceError(f'datum {datum.id}: unknown satellite {datum.satellite}')
            if datum.duration < satellites[datum.satellite].d0 - TOLERANCE:
                raise InstanceError(f'datum {datum.id}: duration below the satellite d0')

        windows_of = defaultdict(list)
        for window in sorted(self.windows, key=lambda w: (w.begin, w.id)):
            windows_of[window.satellite].append(window.id)

        admissible = {}
        for datum in self.data:
            d0 = satellites[datum.satellite].d0
            admissible[datum.id] = tuple(
                wid for wid in windows_of[datum.satellite]
                if _admissible(windows[wid], datum, d0))

        # windows whose tasks can constrain each other: same station (sigma apart when the
        # satellites differ) or same satellite
        neighbours = {w.id: [] for w in self.windows}
        for i, a in enumerate(self.windows):
            for b in self.windows[i + 1:]:
                if a.station != b.station and a.satellite != b.satellite:
                    continue
                gap = self.sigma if a.station == b.station and a.satellite != b.satellite else 0.0
                if a.begin < b.end + gap and b.begin < a.end + gap:
                    neighbours[a.id].append(b.id)
                    neighbours[b.id].append(a.id)

        object.__setattr__(self, '_index', {
            'satellite': satellites,
            'station': stations,
            'window': windows,
            'datum': data,
            'windows_of': {sat: tuple(ids) for sat, ids in windows_of.items()},
            'admissible': admissible,
            'neighbours': {wid: tuple(ids) for wid, ids in neighbours.items()},
        })

    def satellite(self, satellite_id: str) -> Satellite:
        return self._index['satellite'][satellite_id]

    def station(self, station_id: str) -> GroundStation:
        return self._index['station'][station_id]

    def window(self, window_id: str) -> TransmissionWindow:
        return self._index['window'][window_id]

    def datum(self, datum_id: str) -> ImageData:
        return self._index['datum'][datum_id]

    def has(self, kind: str, some_id: str) -> bool:
        return some_id in self._index[kind]

    def d0_of(self, datum_id: str) -> float:
        return self.satellite(self.datum(datum_id).satellite).d0

    def windows_of(self, satellite_id: str) -> tuple[str, ...]:
        '''window ids of a satellite, by begin'''
        return self._index['windows_of'].get(satellite_id, ())

    def neighbours(self, window_id: str) -> tuple[str, ...]:
        return self._index['neighbours'][window_id]

    def admissible_windows(self, datum_id: str) -> tuple[str, ...]:
        '''windows of the datum's satellite where a piece of at least d0 could begin inside
        the validity window'''
        return self._index['admissible'][datum_id]


def _unique(kind: str, items: Iterable) -> dict:
    found = {}
    for item in items:
        if item.id in found:
            raise InstanceError(f'duplicate {kind} id {item.id}')
        found[item.id] = item
    return found


def _admissible(window: TransmissionWindow, datum: ImageData, d0: float) -> bool:
    earliest = max(window.begin, datum.release)
    return earliest <= window.end - d0 + TOLERANCE and earliest < datum.expiry


# ---------------------------------------------------------------------------- #
#                                  violations                                  #
# ---------------------------------------------------------------------------- #
class ViolationCode(str, Enum):
    AT_MOST_ONCE = 'at_most_once'
    COMPLETED_TRANSMISSION = 'completed_transmission'
    FOFD_ORDER = 'fofd_order'
    LOGICAL_TIME = 'logical_time'
    PLAN_MISMATCH = 'plan_mismatch'
    SATELLITE_OVERLAP = 'satellite_overlap'
    SEGMENT_SIZE = 'segment_size'
    SETUP_TIME = 'setup_time'
    STATION_OVERLAP = 'station_overlap'
    TASK_SATELLITE = 'task_satellite'
    UNSEGMENTED = 'unsegmented'
    VISIBLE_TIME = 'visible_time'
    WORK_TIME = 'work_time'


@dataclass(frozen=True, slots=True)
class Violation:
    code: ViolationCode
    subjects: tuple[str, ...]
    message: str

    @property
    def sort_key(self):
        return (self.code.value, self.subjects, self.message)

    def __str__(self):
        return f'{self.code.value} [{", ".join(self.subjects)}]: {self.message}'


def _resolve(instance: Instance, schedule: Schedule) -> None:
    missing = []
    for task in schedule.tasks:
        if not instance.has('window', task.window):
            missing.append(task.window)
        missing.extend(d for d, _ in task.d_set if not instance.has('datum', d))
    for plan in schedule.plans:
        if not instance.has('datum', plan.datum):
            missing.append(plan.datum)
        missing.extend(w for w, _ in plan.pieces if not instance.has('window', w))
    missing.extend(d for d in schedule.scheduled if not instance.has('datum', d))
    if missing:
        raise ScheduleResolutionError(missing)


def validate_schedule(instance: Instance, schedule: Schedule,
                      mode: SolveMode = SolveMode()) -> list[Violation]:
    '''Every constraint violation of the schedule, sorted by (code, subjects); empty means
    feasible. Ids that do not resolve raise ScheduleResolutionError instead.'''
    _resolve(instance, schedule)
    found: list[Violation] = []

    def report(code, subjects, message):
        found.append(Violation(code, tuple(subjects), message))

    pieces: dict[str, list[tuple[str, float, float]]] = defaultdict(list)
    for task in schedule.tasks:
        window = instance.window(task.window)
        d0 = instance.satellite(window.satellite).d0
        if task.begin < window.begin - TOLERANCE or task.end > window.end + TOLERANCE:
            report(ViolationCode.VISIBLE_TIME, [task.id],
                   f'[{task.begin}, {task.end}] leaves window [{window.begin}, {window.end}]')
        if task.duration < d0 - TOLERANCE:
            report(ViolationCode.WORK_TIME, [task.id], f'duration {task.duration} below d0 {d0}')

        seen = set()
        offset = task.begin
        for datum_id, seconds in task.d_set:
            datum = instance.datum(datum_id)
            if datum.satellite != window.satellite:
                report(ViolationCode.TASK_SATELLITE, [task.id, datum_id],
                       f'datum of {datum.satellite} sent through a {window.satellite} window')
            if datum_id in seen:
                report(ViolationCode.AT_MOST_ONCE, [task.id, datum_id], 'datum repeated in one task')
            seen.add(datum_id)
            if datum.release > task.begin + TOLERANCE or not task.begin < datum.expiry:
                report(ViolationCode.LOGICAL_TIME, [task.id, datum_id],
                       f'task begins at {task.begin}, validity is [{datum.release}, {datum.expiry})')
            if seconds < instance.d0_of(datum_id) - TOLERANCE:
                report(ViolationCode.SEGMENT_SIZE, [task.id, datum_id],
                       f'segment of {seconds} s below d0 {instance.d0_of(datum_id)}')
            pieces[datum_id].append((task.window, offset, offset + seconds))
            offset += seconds

    plans = {}
    for plan in schedule.plans:
        if plan.datum in plans:
            report(ViolationCode.AT_MOST_ONCE, [plan.datum], 'two plans for one datum')
        plans[plan.datum] = plan

    for datum_id in sorted(set(pieces) | set(plans) | set(schedule.scheduled)):
        datum = instance.datum(datum_id)
        sent = pieces.get(datum_id, [])
        total = sum(stop - begin for _, begin, stop in sent)
        if datum_id not in schedule.scheduled or abs(total - datum.duration) > TOLERANCE:
            report(ViolationCode.COMPLETED_TRANSMISSION, [datum_id],
                   f'{total:.3f} of {datum.duration} s transmitted'
                   + ('' if datum_id in schedule.scheduled else ' while not marked scheduled'))
        plan = plans.get(datum_id)
        actual = sorted((w, round(stop - begin, 3)) for w, begin, stop in sent)
        if plan is None or sorted((w, round(d, 3)) for w, d in plan.pieces) != actual:
            report(ViolationCode.PLAN_MISMATCH, [datum_id], 'plan does not match the transmitted pieces')
        if not mode.segmented and len(sent) > 1:
            report(ViolationCode.UNSEGMENTED, [datum_id], f'{len(sent)} pieces in unsegment mode')

    _check_overlaps(instance, schedule, report)
    if mode.fofd:
        _check_release_order(instance, pieces, schedule.scheduled, report)

    found.sort(key=lambda v: v.sort_key)
    return found


def _check_overlaps(instance: Instance, schedule: Schedule, report) -> None:
    by_station = defaultdict(list)
    by_satellite = defaultdict(list)
    for task in schedule.tasks:
        window = instance.window(task.window)
        by_station[window.station].append(task)
        by_satellite[window.satellite].append(task)

    for tasks in by_station.values():
        tasks.sort(key=lambda t: (t.begin, t.id))
        for prev, nxt in zip(tasks, tasks[1:]):
            prev_sat = instance.window(prev.window).satellite
            next_sat = instance.window(nxt.window).satellite
            if nxt.begin < prev.end - TOLERANCE:
                report(ViolationCode.STATION_OVERLAP, [prev.id, nxt.id], 'tasks overlap at one station')
            elif prev_sat != next_sat and nxt.begin - prev.end < instance.sigma - TOLERANCE:
                report(ViolationCode.SETUP_TIME, [prev.id, nxt.id],
                       f'gap {nxt.begin - prev.end:.3f} s below set-up time {instance.sigma}')

    for tasks in by_satellite.values():
        tasks.sort(key=lambda t: (t.begin, t.id))
        running = None
        for task in tasks:
            if running is not None and task.begin < running.end - TOLERANCE:
                report(ViolationCode.SATELLITE_OVERLAP, [running.id, task.id],
                       'one antenna transmitting twice at once')
            if running is None or task.end > running.end:
                running = task


def _check_release_order(instance: Instance, pieces: dict, scheduled: frozenset, report) -> None:
    spans = defaultdict(list)
    for datum_id in scheduled:
        sent = pieces.get(datum_id)
        if not sent:
            continue
        datum = instance.datum(datum_id)
        first = min(begin for _, begin, _ in sent)
        last = max(stop for _, _, stop in sent)
        spans[datum.satellite].append((datum.key, first, last))

    for entries in spans.values():
        entries.sort()
        latest_end, latest_id = None, None
        for (_, datum_id), first, last in entries:
            if latest_end is not None and first < latest_end - TOLERANCE:
                report(ViolationCode.FOFD_ORDER, [latest_id, datum_id],
                       f'{datum_id} starts before earlier-released {latest_id} finishes')
            if latest_end is None or last > latest_end:
                latest_end, latest_id = last, datum_id


# ---------------------------------------------------------------------------- #
#                                  objectives                                  #
# ---------------------------------------------------------------------------- #
def failure_rate(instance: Instance, schedule: Schedule) -> float:
    '''Priority-weighted share of original data left untransmitted'''
    total = sum(d.priority for d in instance.data)
    if total == 0:
        return 0.0
    sent = sum(instance.datum(d).priority for d in schedule.scheduled)
    return min(1.0, max(0.0, 1.0 - sent / total))


def service_balance(instance: Instance, schedule: Schedule) -> float:
    '''Mean over satellites that own windows of one minus their window utilization'''
    load = defaultdict(float)
    for task in schedule.tasks:
        load[task.window] += task.duration

    terms = []
    for satellite in instance.satellites:
        window_ids = instance.windows_of(satellite.id)
        if not window_ids:
            continue
        ratios = [min(1.0, load[w] / instance.window(w).length) for w in window_ids]
        terms.append(1.0 - sum(ratios) / len(ratios))
    if not terms:
        return 1.0
    return min(1.0, max(0.0, sum(terms) / len(terms)))


def evaluate(instance: Instance, schedule: Schedule) -> ObjectivePoint:
    return ObjectivePoint(failure_rate(instance, schedule), service_balance(instance, schedule))


def segments(schedule: Schedule, instance: Instance) -> list[ImageData]:
    '''One ImageData per transmitted piece, numbered by task begin, parented to the original'''
    found = defaultdict(list)
    for task in sorted(schedule.tasks, key=lambda t: (t.begin, t.id)):
        for datum_id, seconds in task.d_set:
            found[datum_id].append(seconds)

    out = []
    for datum_id in sorted(found):
        original = instance.datum(datum_id)
        for k, seconds in enumerate(found[datum_id], start=1):
            out.append(ImageData(
                id=f'{datum_id}#{k}', satellite=original.satellite, priority=original.priority,
                duration=seconds, release=original.release, parent=datum_id))
    return out
