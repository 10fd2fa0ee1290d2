'''
Hybrid chromosome (binary x, fractional y, fractional z) and its conversion to and from
schedules.

x has one gene per original datum (instance order), z one gene per window (instance order)
and y is sparse: (datum id, window id) -> share of the datum sent in that window.
'''
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

from downlink_tools.exceptions import EncodingError
from downlink_tools.scheduling.model import (
    TOLERANCE, DownlinkTask, Instance, Schedule, SegmentationPlan, SolveMode, TransmissionWindow,
    Violation, on_grid, validate_schedule)

LOGGER = logging.getLogger(__name__)

SHARE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Chromosome:
    x: tuple[int, ...]
    y: dict[tuple[str, str], float] = field(default_factory=dict)
    z: tuple[float, ...] = ()

    @classmethod
    def empty(cls, instance: Instance) -> Chromosome:
        return cls(x=(0,) * len(instance.data), y={}, z=(0.0,) * len(instance.windows))


def _check_structure(chromosome: Chromosome, instance: Instance) -> None:
    if len(chromosome.x) != len(instance.data):
        raise EncodingError(f'x has {len(chromosome.x)} genes for {len(instance.data)} data')
    if len(chromosome.z) != len(instance.windows):
        raise EncodingError(f'z has {len(chromosome.z)} genes for {len(instance.windows)} windows')
    for datum_id, window_id in chromosome.y:
        if not instance.has('datum', datum_id) or not instance.has('window', window_id):
            raise EncodingError(f'y gene ({datum_id}, {window_id}) does not resolve')


def validate_chromosome(chromosome: Chromosome, instance: Instance) -> None:
    '''Raise EncodingError unless every gene respects the encoding invariants'''
    _check_structure(chromosome, instance)
    if any(gene not in (0, 1) for gene in chromosome.x):
        raise EncodingError('x genes must be 0 or 1')
    if any(not 0.0 <= gene <= 1.0 for gene in chromosome.z):
        raise EncodingError('z genes must lie in [0, 1]')

    shares = defaultdict(float)
    for (datum_id, window_id), share in chromosome.y.items():
        if not 0.0 < share <= 1.0 + SHARE_TOLERANCE:
            raise EncodingError(f'y gene ({datum_id}, {window_id}) = {share} outside (0, 1]')
        if window_id not in instance.admissible_windows(datum_id):
            raise EncodingError(f'{window_id} cannot carry {datum_id}')
        if share * instance.datum(datum_id).duration < instance.d0_of(datum_id) - TOLERANCE:
            raise EncodingError(f'y gene ({datum_id}, {window_id}) makes a segment below d0')
        shares[datum_id] += share

    for datum, gene in zip(instance.data, chromosome.x):
        expected = 1.0 if gene else 0.0
        if abs(shares.get(datum.id, 0.0) - expected) > SHARE_TOLERANCE:
            raise EncodingError(f'y shares of {datum.id} sum to {shares.get(datum.id, 0.0)}, x = {gene}')


def begin_from_gene(z: float, window: TransmissionWindow, task_duration: float) -> float:
    '''Task begin for gene z, clamped so the task still ends inside the window'''
    if task_duration > window.length + TOLERANCE:
        raise EncodingError(f'task of {task_duration} s exceeds window {window.id}')
    if not 0.0 <= z <= 1.0:
        raise EncodingError(f'z = {z} outside [0, 1]')
    z_eff = max(0.0, min(z, 1.0 - task_duration / window.length))
    return window.begin + z_eff * window.length


def decode(chromosome: Chromosome, instance: Instance,
           mode: SolveMode = SolveMode()) -> tuple[Schedule, list[Violation]]:
    '''Build the schedule the genes describe and report its violations; nothing is repaired'''
    _check_structure(chromosome, instance)
    window_position = {w.id: i for i, w in enumerate(instance.windows)}

    per_datum = defaultdict(list)
    for (datum_id, window_id), share in sorted(chromosome.y.items()):
        if share > 0:
            per_datum[datum_id].append((window_id, share))

    plans = []
    per_window = defaultdict(list)
    for datum_id in sorted(per_datum):
        datum = instance.datum(datum_id)
        entries = sorted(per_datum[datum_id], key=lambda e: window_position[e[0]])
        pieces = [(w, on_grid(share * datum.duration)) for w, share in entries]
        if chromosome.x[instance.data.index(datum)]:
            # last piece carries the rounding remainder so the pieces sum to the duration
            last_window, _ = pieces[-1]
            pieces[-1] = (last_window, on_grid(datum.duration - sum(s for _, s in pieces[:-1])))
        plans.append(SegmentationPlan(datum_id, tuple(pieces)))
        for window_id, seconds in pieces:
            per_window[window_id].append((datum_id, seconds))

    tasks = []
    for window in instance.windows:
        d_set = per_window.get(window.id)
        if not d_set:
            continue
        d_set.sort(key=lambda piece: instance.datum(piece[0]).key)
        total = on_grid(sum(s for _, s in d_set))
        if total > window.length + TOLERANCE:
            # overloaded window: left for validate_schedule to flag as visible_time
            begin = window.begin
        else:
            begin = round(begin_from_gene(chromosome.z[window_position[window.id]], window, total), 6)
        tasks.append(DownlinkTask(f'dt-{window.id}', window.id, begin, tuple(d_set)))
    tasks.sort(key=lambda t: (t.begin, t.window))

    scheduled = frozenset(d.id for d, gene in zip(instance.data, chromosome.x) if gene)
    schedule = Schedule(tuple(tasks), tuple(plans), scheduled)
    return schedule, validate_schedule(instance, schedule, mode)


def encode(schedule: Schedule, instance: Instance) -> Chromosome:
    '''Genes of a feasible schedule with at most one task per window'''
    violations = validate_schedule(instance, schedule, SolveMode())
    if violations:
        raise EncodingError(f'cannot encode an infeasible schedule: {violations[0]}')

    z = {}
    y = {}
    for task in schedule.tasks:
        if task.window in z:
            raise EncodingError(f'more than one task in window {task.window}')
        window = instance.window(task.window)
        z[task.window] = min(1.0, max(0.0, (task.begin - window.begin) / window.length))
        for datum_id, seconds in task.d_set:
            y[(datum_id, task.window)] = seconds / instance.datum(datum_id).duration

    return Chromosome(
        x=tuple(1 if d.id in schedule.scheduled else 0 for d in instance.data),
        y=dict(sorted(y.items())),
        z=tuple(z.get(w.id, 0.0) for w in instance.windows))
