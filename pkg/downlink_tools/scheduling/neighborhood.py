'''
Destroy and repair operators, their guidance values and the taboo bank.

Destroy operators take whole original data out of a solution (every piece goes together)
and put them in a taboo bank; repair operators re-run greedy insertion over the unscheduled
data that are not in the bank.
'''
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from downlink_tools.exceptions import OperatorError
from downlink_tools.scheduling.construct import insert_all
from downlink_tools.scheduling.model import DownlinkTask, ImageData, Instance
from downlink_tools.scheduling.window_state import WindowState

LOGGER = logging.getLogger(__name__)

DESTROY_OPERATORS = ('RD', 'PD', 'DD', 'CD', 'RT', 'PT', 'WT', 'CT')
REPAIR_OPERATORS = ('R', 'P', 'S', 'C')
DEFAULT_TABOO_RATE = (0.0, 0.2)


class Family(str, Enum):
    DESTROY = 'destroy'
    REPAIR = 'repair'


FAMILY_OPERATORS = {Family.DESTROY: DESTROY_OPERATORS, Family.REPAIR: REPAIR_OPERATORS}


@dataclass(frozen=True, slots=True)
class OperatorKind:
    family: Family
    name: str

    def __post_init__(self):
        if self.name not in FAMILY_OPERATORS[Family(self.family)]:
            raise OperatorError(f'{self.name!r} is not a {Family(self.family).value} operator')

    def __str__(self):
        return f'{self.name}-{Family(self.family).value}'


@dataclass
class TabooBank:
    capacity: int
    members: set[str] = field(default_factory=set)

    @property
    def full(self) -> bool:
        return len(self.members) >= self.capacity

    def add(self, datum_id: str) -> bool:
        if self.full:
            return False
        self.members.add(datum_id)
        return True

    def __contains__(self, datum_id) -> bool:
        return datum_id in self.members

    def __len__(self) -> int:
        return len(self.members)


# ---------------------------------------------------------------------------- #
#                                   guidance                                   #
# ---------------------------------------------------------------------------- #
def nod(values: Sequence[float], index: int) -> float:
    '''exp(-(1 - x_index / max x)); 1 for every index of an all-zero list'''
    top = max(values)
    if top <= 0:
        return 1.0
    return math.exp(-(1.0 - values[index] / top))


def _union_capacity(instance: Instance, window_ids) -> float:
    return sum(instance.window(w).length for w in window_ids)


def conflict_distance(a: ImageData | str, b: ImageData | str, instance: Instance) -> float:
    '''1 when two data of one satellite cannot both fit their shared windows, 0.5 when they
    share windows but fit, 0 otherwise'''
    a = instance.datum(a) if isinstance(a, str) else a
    b = instance.datum(b) if isinstance(b, str) else b
    if a.satellite != b.satellite:
        return 0.0
    wa = set(instance.admissible_windows(a.id))
    wb = set(instance.admissible_windows(b.id))
    if not wa & wb:
        return 0.0
    if _union_capacity(instance, wa | wb) < a.duration + b.duration:
        return 1.0
    return 0.5


def congestion(datum: ImageData | str, instance: Instance) -> float:
    '''Sum of nod over the priority-weighted conflict distances to every other datum'''
    datum_id = datum if isinstance(datum, str) else datum.id
    values = [d.priority * conflict_distance(datum_id, d.id, instance)
              for d in instance.data if d.id != datum_id]
    if not values:
        return 0.0
    return sum(nod(values, j) for j in range(len(values)))


class GuidanceTable:
    '''Congestion of every datum and admissible-window counts, computed once per instance'''

    def __init__(self, instance: Instance):
        self.instance = instance
        ids = [d.id for d in instance.data]
        n = len(ids)
        self.congestion: dict[str, float] = {}
        self.admissible_count = {d: len(instance.admissible_windows(d)) for d in ids}
        if n == 0:
            return

        priority = np.array([d.priority for d in instance.data], dtype=float)
        distance = np.zeros((n, n))
        by_satellite: dict[str, list[int]] = {}
        for i, d in enumerate(instance.data):
            by_satellite.setdefault(d.satellite, []).append(i)
        for members in by_satellite.values():
            for x, i in enumerate(members):
                for j in members[x + 1:]:
                    distance[i, j] = distance[j, i] = conflict_distance(ids[i], ids[j], instance)

        weighted = distance * priority[None, :]
        off_diagonal = ~np.eye(n, dtype=bool)
        for i in range(n):
            row = weighted[i, off_diagonal[i]]
            if row.size == 0:
                self.congestion[ids[i]] = 0.0
                continue
            top = row.max()
            self.congestion[ids[i]] = float(row.size) if top <= 0 else float(
                np.exp(-(1.0 - row / top)).sum())


def task_guidance(kind: str, task: DownlinkTask, instance: Instance,
                  table: GuidanceTable | None = None) -> float:
    '''PT: summed priorities of the task's data; CT: summed congestion'''
    if kind == 'PT':
        return float(sum(instance.datum(d).priority for d, _ in task.d_set))
    if kind == 'CT':
        if table is None:
            return sum(congestion(d, instance) for d, _ in task.d_set)
        return sum(table.congestion[d] for d, _ in task.d_set)
    raise OperatorError(f'no task guidance for {kind!r}')


# ---------------------------------------------------------------------------- #
#                                   operators                                  #
# ---------------------------------------------------------------------------- #
def _removal_order(name: str, state: WindowState, rng: np.random.Generator,
                   table: GuidanceTable) -> list[str]:
    instance = state.instance
    scheduled = sorted(state.scheduled)
    datum = instance.datum

    if name == 'RD':
        return [scheduled[i] for i in rng.permutation(len(scheduled))]
    if name == 'PD':
        return sorted(scheduled, key=lambda d: (datum(d).priority, d))
    if name == 'DD':
        return sorted(scheduled, key=lambda d: (-datum(d).duration, d))
    if name == 'CD':
        return sorted(scheduled, key=lambda d: (table.congestion[d], d))

    tasks = list(state.tasks())
    if name == 'RT':
        tasks = [tasks[i] for i in rng.permutation(len(tasks))]
    elif name == 'PT':
        tasks.sort(key=lambda t: (-task_guidance('PT', t, instance), t.id))
    elif name == 'WT':
        tasks.sort(key=lambda t: (-t.duration, t.id))
    elif name == 'CT':
        tasks.sort(key=lambda t: (task_guidance('CT', t, instance, table), t.id))

    order = []
    for task in tasks:
        pieces = list(task.d_set)
        if name == 'RT':
            pieces = [pieces[i] for i in rng.permutation(len(pieces))]
        elif name == 'PT':
            pieces.sort(key=lambda p: (-datum(p[0]).priority, p[0]))
        elif name == 'WT':
            pieces.sort(key=lambda p: (-p[1], p[0]))
        order.extend(d for d, _ in pieces)
    return order


def destroy(kind: OperatorKind, state: WindowState, rng: np.random.Generator,
            table: GuidanceTable | None = None,
            taboo_rate: tuple[float, float] = DEFAULT_TABOO_RATE) -> tuple[WindowState, TabooBank]:
    '''Remove whole data from the solution until the taboo bank is full, then repack'''
    if kind.family is not Family.DESTROY:
        raise OperatorError(f'{kind} is not a destroy operator')
    n_scheduled = len(state.scheduled)
    if n_scheduled == 0:
        return state, TabooBank(0)

    low, high = taboo_rate
    rate = low if high <= low else float(rng.uniform(low, high))
    bank = TabooBank(min(n_scheduled, math.ceil(rate * n_scheduled - 1e-9)))
    if bank.capacity == 0:
        return state, bank

    table = table or GuidanceTable(state.instance)
    for datum_id in _removal_order(kind.name, state, rng, table):
        if bank.full:
            break
        if datum_id in bank:
            continue
        state.remove(datum_id)
        bank.add(datum_id)
    state.repack()
    LOGGER.debug('%s removed %d of %d data', kind, len(bank), n_scheduled)
    return state, bank


def repair(kind: OperatorKind, state: WindowState, bank: TabooBank, rng: np.random.Generator,
           table: GuidanceTable | None = None) -> WindowState:
    '''Greedy re-insertion of unscheduled data outside the bank, in the operator's order'''
    if kind.family is not Family.REPAIR:
        raise OperatorError(f'{kind} is not a repair operator')
    instance = state.instance
    scheduled = state.scheduled
    candidates = sorted(d.id for d in instance.data if d.id not in scheduled and d.id not in bank)
    if not candidates:
        return state

    datum = instance.datum
    if kind.name == 'R':
        order = [candidates[i] for i in rng.permutation(len(candidates))]
    elif kind.name == 'P':
        order = sorted(candidates, key=lambda d: (-datum(d).priority, d))
    elif kind.name == 'S':
        order = sorted(candidates, key=lambda d: (len(instance.admissible_windows(d)), d))
    else:
        table = table or GuidanceTable(instance)
        order = sorted(candidates, key=lambda d: (table.congestion[d], d))

    inserted = insert_all(state, order)
    LOGGER.debug('%s inserted %d of %d candidates', kind, inserted, len(candidates))
    return state
