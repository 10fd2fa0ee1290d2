'''
ALNS+NSGA-II main loop and the CREM random-elitism control.

Each iteration breeds NS offspring: a parent is picked by crowded binary tournament, one
roulette-selected destroy operator and one repair operator turn it into a child, and the
child is scored against the archive before being offered to it. Survivors are the best NS
of parents and offspring by (rank, crowding); CREM keeps a uniformly random NS instead and
truncates its archive at random.
'''
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from downlink_tools.exceptions import InfeasibleOffspringError
from downlink_tools.scheduling.adaptive import OperatorStats, Outcome, ScoreTable, score_event
from downlink_tools.scheduling.construct import rhga
from downlink_tools.scheduling.encoding import Chromosome, encode
from downlink_tools.scheduling.metrics import front_stats, hypervolume_hso
from downlink_tools.scheduling.model import (
    Instance, ObjectivePoint, Schedule, SolveMode, evaluate, validate_schedule)
from downlink_tools.scheduling.neighborhood import Family, GuidanceTable, destroy, repair
from downlink_tools.scheduling.window_state import WindowState

LOGGER = logging.getLogger(__name__)


class Algorithm(str, Enum):
    NSGA2 = 'alns-nsga2'
    CREM = 'crem'


class RunParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    population_size: int = Field(100, ge=1)
    archive_size: int = Field(100, ge=1)
    max_iter: int = Field(200, ge=0)
    reaction: float = Field(0.5, ge=0.0, le=1.0)
    scores: tuple[float, float, float] = (30.0, 20.0, 10.0)
    dominated_score_probability: float = Field(0.1, ge=0.0, le=1.0)
    taboo_rate: tuple[float, float] = (0.0, 0.2)
    tournament_size: int = Field(2, ge=1)
    seed: int = 0
    log_every: int = Field(10, ge=1)
    check_feasibility: bool = False

    @field_validator('taboo_rate')
    @classmethod
    def _ordered_rate(cls, value):
        low, high = value
        if not 0.0 <= low <= high <= 1.0:
            raise ValueError(f'taboo rate needs 0 <= low <= high <= 1, got {value}')
        return value

    @field_validator('scores')
    @classmethod
    def _non_negative(cls, value):
        if any(s < 0 for s in value):
            raise ValueError('scores must be non-negative')
        return value

    @property
    def score_table(self) -> ScoreTable:
        return ScoreTable(*self.scores, dominated_probability=self.dominated_score_probability)


@dataclass(eq=False)
class Individual:
    schedule: Schedule
    objectives: ObjectivePoint
    rank: int = 0
    crowding: float = 0.0
    chromosome: Chromosome | None = None


@dataclass
class RunResult:
    algorithm: Algorithm
    mode: SolveMode
    params: RunParams
    front: list[Individual]
    hv_trace: list[float]
    weight_trace: list[dict]
    elapsed: float = 0.0
    instance_name: str = ''
    # (mean f1, mean f2) of the archive after each iteration, index 0 the initial one
    stat_trace: list[tuple[float, float]] = field(default_factory=list)

    @property
    def points(self) -> list[ObjectivePoint]:
        return [ind.objectives for ind in self.front]

    @property
    def final_hv(self) -> float:
        return hypervolume_hso(self.points)


# ---------------------------------------------------------------------------- #
#                              sorting and crowding                            #
# ---------------------------------------------------------------------------- #
def _coords(points: Sequence) -> np.ndarray:
    rows = [p.as_tuple() if isinstance(p, ObjectivePoint) else tuple(p) for p in points]
    return np.asarray(rows, dtype=float).reshape(-1, 2)


def fast_nondominated_sort(points: Sequence) -> list[list[int]]:
    '''Fronts of point indices, front 0 nondominated; indices ascend within a front'''
    coords = _coords(points)
    if len(coords) == 0:
        return []
    weakly_better = (coords[:, None, :] <= coords[None, :, :]).all(axis=2)
    strictly_better = (coords[:, None, :] < coords[None, :, :]).any(axis=2)
    dominates = weakly_better & strictly_better
    dominated_by = dominates.sum(axis=0)

    fronts = []
    current = np.flatnonzero(dominated_by == 0)
    while current.size:
        fronts.append(current.tolist())
        dominated_by = dominated_by - dominates[current].sum(axis=0)
        dominated_by[current] = -1
        current = np.flatnonzero(dominated_by == 0)
    return fronts


def crowding_distance(points: Sequence) -> list[float]:
    coords = _coords(points)
    n = len(coords)
    distance = np.zeros(n)
    if n == 0:
        return []
    for m in range(coords.shape[1]):
        order = sorted(range(n), key=lambda i: (coords[i, m], i))
        distance[order[0]] = distance[order[-1]] = math.inf
        span = coords[order[-1], m] - coords[order[0], m]
        if span <= 0:
            continue
        for before, i, after in zip(order, order[1:], order[2:]):
            distance[i] += (coords[after, m] - coords[before, m]) / span
    return distance.tolist()


def classify(point: ObjectivePoint, archive_points: Sequence[ObjectivePoint]) -> Outcome:
    '''How a new point relates to the archive it is about to be offered to'''
    if not archive_points:
        return Outcome.DOMINATES_ALL
    if any(q.dominates(point) or q == point for q in archive_points):
        return Outcome.DOMINATED
    beaten = sum(1 for q in archive_points if point.dominates(q))
    if beaten == len(archive_points):
        return Outcome.DOMINATES_ALL
    if beaten:
        return Outcome.DOMINATES_ONE
    return Outcome.ON_FRONTIER


def assign_rank_crowding(population: list[Individual]) -> list[list[int]]:
    points = [ind.objectives for ind in population]
    fronts = fast_nondominated_sort(points)
    for rank, front in enumerate(fronts):
        for i, distance in zip(front, crowding_distance([points[i] for i in front])):
            population[i].rank = rank
            population[i].crowding = distance
    return fronts


def select_survivors(population: list[Individual], size: int) -> list[Individual]:
    '''Best `size` individuals by rank, then by crowding within the last admitted front'''
    survivors = []
    for front in assign_rank_crowding(population):
        members = [population[i] for i in front]
        if len(survivors) + len(members) <= size:
            survivors.extend(members)
            continue
        ranked = sorted(zip(front, members), key=lambda pair: (-pair[1].crowding, pair[0]))
        survivors.extend(ind for _, ind in ranked[:size - len(survivors)])
        break
    return survivors


def tournament(population: list[Individual], rng: np.random.Generator, size: int = 2) -> Individual:
    picks = rng.integers(len(population), size=size)
    best = min(picks, key=lambda i: (population[i].rank, -population[i].crowding, i))
    return population[best]


# ---------------------------------------------------------------------------- #
#                                    archive                                   #
# ---------------------------------------------------------------------------- #
class Archive:
    '''Bounded nondominated store, plus an unbounded record of every nondominated point seen'''

    def __init__(self, capacity: int, rng: np.random.Generator, truncation: str = 'crowding'):
        self.capacity = capacity
        self.rng = rng
        self.truncation = truncation
        self.members: list[Individual] = []
        self.record: list[ObjectivePoint] = []

    def points(self) -> list[ObjectivePoint]:
        return [m.objectives for m in self.members]

    def classify(self, point: ObjectivePoint) -> Outcome:
        return classify(point, self.points())

    def add(self, individual: Individual) -> bool:
        point = individual.objectives
        self._remember(point)
        if any(m.objectives.dominates(point) or m.objectives == point for m in self.members):
            return False
        self.members = [m for m in self.members if not point.dominates(m.objectives)]
        self.members.append(individual)
        while len(self.members) > self.capacity:
            self._drop_one()
        return True

    def record_hv(self) -> float:
        return hypervolume_hso(self.record)

    def _remember(self, point: ObjectivePoint) -> None:
        if any(q.dominates(point) or q == point for q in self.record):
            return
        self.record = [q for q in self.record if not point.dominates(q)]
        self.record.append(point)

    def _drop_one(self) -> None:
        if self.truncation == 'random':
            victim = int(self.rng.integers(len(self.members)))
        else:
            distances = crowding_distance(self.points())
            victim = int(np.argmin(distances))
        del self.members[victim]


# ---------------------------------------------------------------------------- #
#                                   main loop                                  #
# ---------------------------------------------------------------------------- #
def _checked(instance: Instance, mode: SolveMode, individual: Individual, check: bool) -> Individual:
    if check:
        violations = validate_schedule(instance, individual.schedule, mode)
        if violations:
            raise InfeasibleOffspringError(f'{len(violations)} violations, first: {violations[0]}')
    return individual


def _offspring(parent: Individual, instance: Instance, mode: SolveMode, stats: OperatorStats,
               table: GuidanceTable, params: RunParams, rng: np.random.Generator):
    destroy_kind = stats.select(Family.DESTROY, rng)
    repair_kind = stats.select(Family.REPAIR, rng)
    state = WindowState.from_schedule(instance, mode, parent.schedule)
    state, bank = destroy(destroy_kind, state, rng, table, params.taboo_rate)
    state = repair(repair_kind, state, bank, rng, table)
    schedule = state.to_schedule()
    return Individual(schedule, evaluate(instance, schedule)), destroy_kind, repair_kind


def run(instance: Instance, mode: SolveMode | str, params: RunParams = RunParams(),
        algorithm: Algorithm | str = Algorithm.NSGA2) -> RunResult:
    '''Evolve a front for the instance; the result carries the archive front and the traces'''
    started = time.perf_counter()
    mode = SolveMode.parse(mode)
    algorithm = Algorithm(algorithm)
    rng = np.random.default_rng(params.seed)
    table = GuidanceTable(instance)
    stats = OperatorStats(params.reaction)
    archive = Archive(params.archive_size, rng,
                      truncation='random' if algorithm is Algorithm.CREM else 'crowding')
    check = params.check_feasibility

    LOGGER.info('%s on %s (%d data, %d windows), mode %s, seed %d, %d iterations',
                algorithm.value, instance.name or 'instance', len(instance.data),
                len(instance.windows), mode, params.seed, params.max_iter)

    population = []
    for _ in range(params.population_size):
        schedule, point = rhga(instance, mode, rng=rng)
        individual = _checked(instance, mode, Individual(schedule, point), check)
        population.append(individual)
        archive.add(individual)
    assign_rank_crowding(population)

    hv_trace = [archive.record_hv()]
    stat_trace = [front_stats(archive.points())]
    weight_trace = [{'iteration': 0, **stats.snapshot()}]

    for iteration in range(1, params.max_iter + 1):
        offspring = []
        for _ in range(params.population_size):
            parent = tournament(population, rng, params.tournament_size)
            child, destroy_kind, repair_kind = _offspring(parent, instance, mode, stats, table, params, rng)
            _checked(instance, mode, child, check)
            score = score_event(archive.classify(child.objectives), rng, params.score_table)
            stats.credit(destroy_kind, score)
            stats.credit(repair_kind, score)
            archive.add(child)
            offspring.append(child)

        stats.update_weights(Family.DESTROY)
        stats.update_weights(Family.REPAIR)

        merged = population + offspring
        if algorithm is Algorithm.CREM:
            keep = np.sort(rng.choice(len(merged), size=params.population_size, replace=False))
            population = [merged[i] for i in keep]
            assign_rank_crowding(population)
        else:
            population = select_survivors(merged, params.population_size)

        hv_trace.append(archive.record_hv())
        stat_trace.append(front_stats(archive.points()))
        weight_trace.append({'iteration': iteration, **stats.snapshot()})
        if iteration % params.log_every == 0:
            LOGGER.info('iteration %d: HV %.6f, archive %d', iteration, hv_trace[-1], len(archive.members))

    front = sorted(archive.members, key=lambda ind: ind.objectives.as_tuple())
    for individual in front:
        individual.chromosome = encode(individual.schedule, instance)

    elapsed = time.perf_counter() - started
    result = RunResult(algorithm, mode, params, front, hv_trace, weight_trace, elapsed,
                       instance.name, stat_trace)
    LOGGER.info('%s finished: HV %.6f over %d points in %.2f s',
                algorithm.value, result.final_hv, len(front), elapsed)
    return result


def run_crem(instance: Instance, mode: SolveMode | str, params: RunParams = RunParams()) -> RunResult:
    return run(instance, mode, params, Algorithm.CREM)
