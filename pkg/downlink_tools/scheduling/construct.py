'''
Greedy construction of feasible schedules.

rhga visits the original data in a given order and tries to admit each one: odcs decides
how to cut the datum over the windows that can still take it, srs places the pieces and
either all of them land or none do.
'''
from __future__ import annotations

import logging
from typing import Iterable, Sequence

import numpy as np

from downlink_tools.scheduling.model import (
    TOLERANCE, ImageData, Instance, ObjectivePoint, Schedule, SegmentationPlan, SolveMode,
    evaluate, on_grid)
from downlink_tools.scheduling.window_state import WindowState

LOGGER = logging.getLogger(__name__)

__all__ = ['SegmentationPlan', 'WindowState', 'odcs', 'srs', 'insert', 'insert_all', 'rhga']


def odcs(datum: ImageData, state: WindowState, mode: SolveMode | None = None) -> SegmentationPlan | None:
    '''Cut the datum over the windows with the most free capacity; None when it cannot fit'''
    mode = mode or state.mode
    instance = state.instance
    d0 = instance.d0_of(datum.id)

    candidates = []
    for window_id in instance.admissible_windows(datum.id):
        capacity = state.capacity_for(window_id, datum.id)
        if capacity >= d0 - TOLERANCE:
            candidates.append((window_id, capacity))
    if sum(c for _, c in candidates) < datum.duration - TOLERANCE:
        return None

    candidates.sort(key=lambda wc: (-wc[1], instance.window(wc[0]).begin, wc[0]))

    if not mode.segmented:
        for window_id, capacity in candidates:
            if capacity >= datum.duration - TOLERANCE:
                return SegmentationPlan(datum.id, ((window_id, datum.duration),))
        return None

    pieces: list[tuple[str, float]] = []
    remaining = datum.duration
    for window_id, capacity in candidates:
        if remaining <= TOLERANCE:
            break
        take = min(capacity, remaining)
        if take < d0 - TOLERANCE:
            # fold: shorten the previous piece so this one reaches d0
            if not pieces:
                continue
            deficit = on_grid(d0 - take)
            prev_window, prev_take = pieces[-1]
            if prev_take - deficit < d0 - TOLERANCE:
                continue
            pieces[-1] = (prev_window, on_grid(prev_take - deficit))
            remaining = on_grid(remaining + deficit)
            take = remaining
        take = on_grid(take)
        pieces.append((window_id, take))
        remaining = on_grid(remaining - take)

    if remaining > TOLERANCE:
        return None
    return SegmentationPlan(datum.id, tuple(pieces))


def srs(plan: SegmentationPlan, state: WindowState) -> bool:
    '''Place every piece of the plan left-earliest; on any failure the state is restored'''
    checkpoint = state.checkpoint()
    for window_id, seconds in plan.pieces:
        if not state.place(window_id, plan.datum, seconds):
            LOGGER.debug('srs: %s does not fit %.3f s in %s, rolling back', plan.datum, seconds, window_id)
            state.restore(checkpoint)
            return False
    state.commit(plan)
    return True


def insert(state: WindowState, datum_id: str) -> bool:
    if datum_id in state.scheduled:
        return False
    plan = odcs(state.instance.datum(datum_id), state)
    if plan is None:
        return False
    return srs(plan, state)


def insert_all(state: WindowState, order: Iterable[str]) -> int:
    '''Greedy insertion loop shared by construction and the repair operators'''
    return sum(1 for datum_id in order if insert(state, datum_id))


def rhga(instance: Instance, mode: SolveMode, order: Sequence[str] | None = None,
         rng: np.random.Generator | int | None = None) -> tuple[Schedule, ObjectivePoint]:
    '''Random heuristic greedy construction; a random visiting order is drawn when none is given'''
    if order is None:
        rng = np.random.default_rng(rng)
        ids = [d.id for d in instance.data]
        order = [ids[i] for i in rng.permutation(len(ids))]
    elif sorted(order) != sorted(d.id for d in instance.data):
        raise ValueError('order must be a permutation of the instance data ids')

    state = WindowState(instance, mode)
    admitted = insert_all(state, order)
    schedule = state.to_schedule()
    LOGGER.debug('rhga admitted %d of %d data', admitted, len(instance.data))
    return schedule, evaluate(instance, schedule)
