"""
Tests for nondominated sorting, the archive and the evolutionary main loop.
"""
import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from downlink_tools.instances import generate
from downlink_tools.scheduling.adaptive import Outcome
from downlink_tools.scheduling.encoding import decode
from downlink_tools.scheduling.metrics import sign_test
from downlink_tools.scheduling.evolve import (
    Algorithm, Archive, Individual, RunParams, classify, crowding_distance,
    fast_nondominated_sort, run, run_crem)
from downlink_tools.scheduling.model import ObjectivePoint, Schedule, SolveMode, validate_schedule

SMALL = RunParams(population_size=6, archive_size=6, max_iter=5, seed=3)


@pytest.fixture(scope='module')
def instance():
    return generate('MD', 12, seed=2)


@pytest.fixture(scope='module')
def result(instance):
    return run(instance, 'segment:rearrange', SMALL)


def individual(f1, f2):
    return Individual(Schedule(), ObjectivePoint(f1, f2))


class TestRunParams:
    """Validated solver parameters."""

    def test_defaults(self):
        params = RunParams()
        assert (params.population_size, params.archive_size, params.max_iter) == (100, 100, 200)
        assert params.reaction == 0.5
        assert params.taboo_rate == (0.0, 0.2)

    @pytest.mark.parametrize('changes', [
        {'population_size': 0},
        {'reaction': 1.5},
        {'taboo_rate': (0.5, 0.2)},
        {'scores': (30.0, -1.0, 10.0)},
        {'unknown': 1},
    ])
    def test_rejected(self, changes):
        with pytest.raises(ValidationError):
            RunParams(**changes)

    def test_score_table(self):
        table = RunParams(scores=(3.0, 2.0, 1.0), dominated_score_probability=0.0).score_table
        assert (table.dominates_all, table.on_frontier, table.dominated_probability) == (3.0, 1.0, 0.0)


class TestSorting:
    """Fronts and crowding."""

    def test_matches_brute_force(self):
        """Front 0 is exactly the set of points nobody dominates."""
        rng = np.random.default_rng(8)
        points = [ObjectivePoint(*p) for p in np.round(rng.random((30, 2)), 2)]
        fronts = fast_nondominated_sort(points)
        assert sorted(itertools.chain.from_iterable(fronts)) == list(range(30))
        brute = [i for i, p in enumerate(points) if not any(q.dominates(p) for q in points)]
        assert fronts[0] == brute
        for rank, front in enumerate(fronts[1:], start=1):
            for i in front:
                assert any(points[j].dominates(points[i]) for j in fronts[rank - 1])

    def test_crowding_extremes(self):
        distance = crowding_distance([(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])
        assert distance[0] == distance[2] == float('inf')
        assert distance[1] == pytest.approx(2.0)

    def test_classify(self):
        archive = [ObjectivePoint(0.2, 0.6), ObjectivePoint(0.6, 0.2)]
        assert classify(ObjectivePoint(0.1, 0.1), archive) is Outcome.DOMINATES_ALL
        assert classify(ObjectivePoint(0.1, 0.5), archive) is Outcome.DOMINATES_ONE
        assert classify(ObjectivePoint(0.4, 0.4), archive) is Outcome.ON_FRONTIER
        assert classify(ObjectivePoint(0.7, 0.7), archive) is Outcome.DOMINATED
        assert classify(ObjectivePoint(0.2, 0.6), archive) is Outcome.DOMINATED
        assert classify(ObjectivePoint(0.5, 0.5), []) is Outcome.DOMINATES_ALL


class TestArchive:
    """Bounded nondominated store."""

    def test_rejects_dominated_and_equal(self):
        archive = Archive(5, np.random.default_rng(0))
        assert archive.add(individual(0.3, 0.3))
        assert not archive.add(individual(0.4, 0.4))
        assert not archive.add(individual(0.3, 0.3))
        assert archive.add(individual(0.1, 0.1))
        assert archive.points() == [ObjectivePoint(0.1, 0.1)]

    def test_crowding_truncation_keeps_extremes(self):
        archive = Archive(3, np.random.default_rng(0))
        for f1 in (0.0, 0.4, 0.5, 1.0):
            archive.add(individual(f1, 1.0 - f1))
        assert len(archive.members) == 3
        assert {p.f1 for p in archive.points()} >= {0.0, 1.0}

    def test_record_is_unbounded(self):
        archive = Archive(1, np.random.default_rng(0), truncation='random')
        archive.add(individual(0.2, 0.6))
        archive.add(individual(0.6, 0.2))
        assert len(archive.members) == 1
        assert archive.record_hv() == pytest.approx(0.48)


class TestRun:
    """The evolutionary loop on a small generated instance."""

    def test_front_nondominated_and_feasible(self, instance, result):
        points = result.points
        assert points
        assert not any(p.dominates(q) for p in points for q in points)
        for member in result.front:
            assert validate_schedule(instance, member.schedule, result.mode) == []

    def test_traces(self, result):
        """One entry per iteration plus the initial population, HV never decreasing."""
        assert len(result.hv_trace) == SMALL.max_iter + 1
        assert len(result.stat_trace) == SMALL.max_iter + 1
        assert len(result.weight_trace) == SMALL.max_iter + 1
        assert all(b >= a - 1e-12 for a, b in zip(result.hv_trace, result.hv_trace[1:]))
        assert result.weight_trace[-1]['iteration'] == SMALL.max_iter

    def test_weights_stay_normalized(self, result):
        final = result.weight_trace[-1]
        destroy = sum(v for k, v in final.items() if k.startswith('w_') and len(k) == 4)
        repair = sum(v for k, v in final.items() if k.startswith('w_') and len(k) == 3)
        assert destroy == pytest.approx(1.0)
        assert repair == pytest.approx(1.0)

    def test_chromosomes_decode(self, instance, result):
        """Each front member carries genes that decode back to a feasible schedule."""
        for member in result.front:
            schedule, violations = decode(member.chromosome, instance, result.mode)
            assert violations == []
            assert schedule.scheduled == member.schedule.scheduled

    def test_deterministic(self, instance, result):
        again = run(instance, 'segment:rearrange', SMALL)
        assert again.points == result.points
        assert again.hv_trace == result.hv_trace

    def test_no_iterations(self, instance):
        """max_iter 0 returns the initial archive."""
        params = SMALL.model_copy(update={'max_iter': 0})
        zero = run(instance, SolveMode(), params)
        assert len(zero.hv_trace) == 1
        assert zero.points

    def test_crem(self, instance):
        crem = run_crem(instance, 'unsegment:fofd', SMALL)
        assert crem.algorithm is Algorithm.CREM
        for member in crem.front:
            assert validate_schedule(instance, member.schedule, crem.mode) == []

    def test_feasibility_checking(self, instance):
        """Checked runs raise on any infeasible child; none appear."""
        params = SMALL.model_copy(update={'check_feasibility': True, 'max_iter': 2})
        checked = run(instance, 'segment:fofd', params)
        assert 0.0 <= checked.final_hv <= 1.0


def brute_ranks(points):
    """Rank by definition: 0 when undominated, else one more than the worst dominator."""
    order = sorted(range(len(points)), key=lambda i: points[i].as_tuple())
    rank = {}
    for i in order:
        dominators = [rank[j] for j in rank if points[j].dominates(points[i])]
        rank[i] = 1 + max(dominators) if dominators else 0
    return rank


def final_hvs(instance, mode, seeds, params, algorithm=Algorithm.NSGA2):
    return [run(instance, mode, params.model_copy(update={'seed': s}), algorithm).final_hv for s in seeds]


@pytest.mark.slow
class TestAtScale:
    """Reduced-scale versions of the comparison experiments."""

    PARAMS = RunParams(population_size=8, archive_size=8, max_iter=15, seed=0)

    def test_sort_matches_definition(self):
        """Random point sets with ties and duplicates, every rank checked."""
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(1, 121))
            points = [ObjectivePoint(*p) for p in rng.integers(0, 21, size=(n, 2)) / 20]
            fronts = fast_nondominated_sort(points)
            expected = brute_ranks(points)
            assert sorted(itertools.chain.from_iterable(fronts)) == list(range(n))
            for rank, front in enumerate(fronts):
                assert all(expected[i] == rank for i in front)

    def test_segment_rearrange_leads(self):
        """The least constrained mode ends with the largest mean hypervolume."""
        instance = generate('ND', 30, seed=1)
        seeds = range(4)
        best = np.mean(final_hvs(instance, 'segment:rearrange', seeds, self.PARAMS))
        strict = np.mean(final_hvs(instance, 'unsegment:fofd', seeds, self.PARAMS))
        assert best >= strict
        for control in ('segment:fofd', 'unsegment:rearrange'):
            assert best >= np.mean(final_hvs(instance, control, seeds, self.PARAMS)) - 0.02

    def test_nsga2_not_behind_crem(self):
        instance = generate('ND', 30, seed=2)
        seeds = range(6)
        nsga2 = final_hvs(instance, SolveMode(), seeds, self.PARAMS)
        crem = final_hvs(instance, SolveMode(), seeds, self.PARAMS, Algorithm.CREM)
        assert np.mean(nsga2) >= np.mean(crem) - 0.02
        wins, losses, p_value = sign_test(nsga2, crem)
        assert wins + losses <= 6
        assert 0.0 <= p_value <= 1.0

    def test_trace_settles_early(self):
        """Most runs have nearly all of their final hypervolume by iteration 10."""
        instance = generate('ND', 40, seed=1)
        params = self.PARAMS.model_copy(update={'max_iter': 30})
        settled = 0
        for seed in range(5):
            trace = run(instance, SolveMode(), params.model_copy(update={'seed': seed})).hv_trace
            assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
            settled += trace[10] >= 0.8 * trace[-1]
        assert settled >= 3
