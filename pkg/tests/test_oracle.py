"""
Tests for the exhaustive front of tiny instances.
"""
import numpy as np
import pytest

from downlink_tools.exceptions import OracleLimitError
from downlink_tools.scheduling.construct import rhga
from downlink_tools.scheduling.evolve import RunParams, run
from downlink_tools.scheduling.model import ALL_MODES, ObjectivePoint, SolveMode, validate_schedule
from downlink_tools.scheduling.oracle import exact_front


class TestExactFront:
    """Hand-checkable fronts."""

    def test_no_data(self, make_instance):
        instance = make_instance(windows=[('w', 'G1', 'S1', 0.0, 100.0)], data=[])
        assert exact_front(instance, SolveMode()) == [ObjectivePoint(0.0, 1.0)]

    def test_single_datum(self, make_instance):
        """Sending the datum beats sending nothing on both objectives."""
        instance = make_instance(windows=[('w', 'G1', 'S1', 0.0, 200.0)],
                                 data=[('d', 'S1', 5, 100.0, 0.0)])
        (point,) = exact_front(instance, 'segment:rearrange')
        assert point.as_tuple() == pytest.approx((0.0, 0.5))

    def test_exclusive_data(self, make_instance):
        """Only one of two data fits; the high-priority one wins."""
        instance = make_instance(windows=[('w', 'G1', 'S1', 0.0, 150.0)],
                                 data=[('p', 'S1', 8, 100.0, 0.0), ('q', 'S1', 2, 100.0, 0.0)])
        front = exact_front(instance, 'unsegment:rearrange')
        assert len(front) == 1
        assert front[0].f1 == pytest.approx(0.2)
        assert front[0].f2 == pytest.approx(1 / 3)

    def test_too_large(self, make_instance):
        data = [(f'd{k}', 'S1', 5, 20.0, 0.0) for k in range(7)]
        instance = make_instance(windows=[('w', 'G1', 'S1', 0.0, 500.0)], data=data)
        with pytest.raises(OracleLimitError):
            exact_front(instance, SolveMode())

    def test_heuristic_reaches_min_failure(self, tiny_instance):
        """Greedy construction finds the lowest failure rate the oracle knows of."""
        mode = SolveMode.parse('unsegment:rearrange')
        front = exact_front(tiny_instance, mode)
        schedule, point = rhga(tiny_instance, mode, order=['c', 'a', 'b'])
        assert validate_schedule(tiny_instance, schedule, mode) == []
        assert point.f1 == pytest.approx(min(p.f1 for p in front))

    def test_heuristic_never_beats_oracle(self, tiny_instance):
        """No constructed point dominates the exact front."""
        mode = SolveMode.parse('unsegment:fofd')
        front = exact_front(tiny_instance, mode)
        for seed in range(5):
            _, point = rhga(tiny_instance, mode, rng=seed)
            assert not any(point.dominates(p) for p in front)


def random_tiny(make_instance, rng):
    """Up to 5 data and 3 windows, every time a multiple of d0 = 10 s, one station per window."""
    windows, data = [], []
    for k in range(int(rng.integers(1, 4))):
        satellite = f'S{k % 2 + 1}'
        begin = 10.0 * int(rng.integers(0, 60)) + 1000.0 * k
        length = 10.0 * int(rng.integers(3, 16))
        windows.append((f'w{k}', f'G{k + 1}', satellite, begin, begin + length))
    for k in range(int(rng.integers(1, 6))):
        data.append((f'd{k}', f'S{int(rng.integers(1, 3))}', int(rng.integers(1, 11)),
                     10.0 * int(rng.integers(2, 7)), 10.0 * int(rng.integers(0, 50))))
    return make_instance(windows=windows, data=data, stations=[f'G{k}' for k in range(1, 4)])


def improves(point, target):
    return (point.f1 <= target.f1 + 1e-9 and point.f2 <= target.f2 + 1e-9
            and (point.f1 < target.f1 - 1e-9 or point.f2 < target.f2 - 1e-9))


@pytest.mark.slow
class TestOracleSweep:
    """Searched fronts against exact fronts on many random tiny instances."""

    @pytest.mark.parametrize('mode', ALL_MODES, ids=str)
    def test_search_never_beats_exact(self, make_instance, mode):
        rng = np.random.default_rng(99)
        params = RunParams(population_size=6, archive_size=6, max_iter=10)
        for trial in range(15):
            instance = random_tiny(make_instance, rng)
            front = exact_front(instance, mode)
            found = run(instance, mode, params.model_copy(update={'seed': trial})).points
            for point in found:
                assert not any(improves(point, exact) for exact in front), f'trial {trial}: {point}'
