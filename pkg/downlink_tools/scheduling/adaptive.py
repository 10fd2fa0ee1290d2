'''
Adaptive operator selection: scores per offspring, weight updates per iteration and
roulette-wheel choice of the next destroy and repair operators.
'''
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from downlink_tools.exceptions import OperatorError
from downlink_tools.scheduling.neighborhood import FAMILY_OPERATORS, Family, OperatorKind

LOGGER = logging.getLogger(__name__)


class Outcome(str, Enum):
    DOMINATES_ALL = 'dominates-all'
    DOMINATES_ONE = 'dominates-one'
    ON_FRONTIER = 'on-frontier'
    DOMINATED = 'dominated'


@dataclass(frozen=True)
class ScoreTable:
    dominates_all: float = 30.0
    dominates_one: float = 20.0
    on_frontier: float = 10.0
    dominated_probability: float = 0.1


def score_event(outcome: Outcome, rng: np.random.Generator, table: ScoreTable = ScoreTable()) -> float:
    outcome = Outcome(outcome)
    if outcome is Outcome.DOMINATES_ALL:
        return table.dominates_all
    if outcome is Outcome.DOMINATES_ONE:
        return table.dominates_one
    if outcome is Outcome.ON_FRONTIER:
        return table.on_frontier
    return 1.0 if rng.random() < table.dominated_probability else 0.0


class OperatorStats:
    '''Weights, accumulated scores and usage counts of both operator families'''

    def __init__(self, reaction: float = 0.5):
        if not 0.0 <= reaction <= 1.0:
            raise OperatorError(f'reaction factor must lie in [0, 1], got {reaction}')
        self.reaction = reaction
        self.names = {family: tuple(names) for family, names in FAMILY_OPERATORS.items()}
        self.weights = {f: np.full(len(n), 1.0 / len(n)) for f, n in self.names.items()}
        self.scores = {f: np.zeros(len(n)) for f, n in self.names.items()}
        self.usage = {f: np.zeros(len(n), dtype=int) for f, n in self.names.items()}

    def _position(self, kind: OperatorKind) -> int:
        return self.names[kind.family].index(kind.name)

    def credit(self, kind: OperatorKind, score: float) -> None:
        self.scores[kind.family][self._position(kind)] += score

    def update_weights(self, family: Family) -> OperatorStats:
        '''w <- (1 - lambda) w + lambda * pi / sum(pi); no evidence means no update'''
        scores = self.scores[family]
        total = scores.sum()
        if total > 0 and self.reaction > 0:
            if self.reaction == 1.0:
                self.weights[family] = scores / total
            else:
                self.weights[family] = (1.0 - self.reaction) * self.weights[family] + self.reaction * scores / total
        self.scores[family] = np.zeros_like(scores)
        return self

    def select(self, family: Family, rng: np.random.Generator) -> OperatorKind:
        weights = self.weights[family]
        total = weights.sum()
        if not total > 0 or (weights < 0).any():
            raise OperatorError(f'{Family(family).value} weights cannot drive a roulette: {weights}')
        pick = rng.random() * total
        position = min(int(np.searchsorted(np.cumsum(weights), pick, side='right')), len(weights) - 1)
        self.usage[family][position] += 1
        return OperatorKind(Family(family), self.names[family][position])

    def snapshot(self) -> dict[str, float]:
        '''weight and usage per operator, keyed like "w_RD" and "u_RD"'''
        out = {}
        for family in (Family.DESTROY, Family.REPAIR):
            for name, weight in zip(self.names[family], self.weights[family]):
                out[f'w_{name}'] = float(weight)
        for family in (Family.DESTROY, Family.REPAIR):
            for name, used in zip(self.names[family], self.usage[family]):
                out[f'u_{name}'] = int(used)
        return out


def update_weights(stats: OperatorStats, family: Family) -> OperatorStats:
    return stats.update_weights(family)


def select_operator(stats: OperatorStats, family: Family, rng: np.random.Generator) -> OperatorKind:
    return stats.select(family, rng)
