"""
Tests for hypervolume, front statistics, Pareto filtering and the sign test.
"""
import numpy as np
import pytest

from downlink_tools.exceptions import MetricError
from downlink_tools.scheduling.metrics import (
    front_stats, hypervolume_hso, hypervolume_mc, pareto_filter, sign_test)
from downlink_tools.scheduling.model import ObjectivePoint

FRONT = [(0.2, 0.6), (0.6, 0.2)]


class TestHypervolume:
    """Exact and sampled dominated area."""

    def test_two_points(self):
        assert hypervolume_hso(FRONT) == pytest.approx(0.48)

    def test_accepts_objective_points(self):
        assert hypervolume_hso([ObjectivePoint(*p) for p in FRONT]) == pytest.approx(0.48)

    def test_dominated_point_adds_nothing(self):
        assert hypervolume_hso(FRONT + [(0.7, 0.7)]) == pytest.approx(0.48)

    def test_ideal_and_empty(self):
        assert hypervolume_hso([(0.0, 0.0)]) == pytest.approx(1.0)
        assert hypervolume_hso([]) == 0.0
        assert hypervolume_hso([(1.0, 1.0)]) == 0.0

    def test_custom_reference(self):
        assert hypervolume_hso([(0.5, 0.5)], reference=(2.0, 2.0)) == pytest.approx(2.25)

    def test_outside_unit_box(self):
        with pytest.raises(MetricError):
            hypervolume_hso([(1.5, 0.2)])

    def test_monte_carlo_close_to_exact(self):
        """The sampled estimate lands within four standard errors."""
        estimate, stderr = hypervolume_mc(FRONT, samples=100_000, rng=np.random.default_rng(0))
        assert stderr > 0
        assert abs(estimate - 0.48) < 4 * stderr

    def test_monte_carlo_seeded(self):
        first = hypervolume_mc(FRONT, samples=1000, rng=3)
        second = hypervolume_mc(FRONT, samples=1000, rng=3)
        assert first == second

    def test_monte_carlo_samples(self):
        with pytest.raises(MetricError):
            hypervolume_mc(FRONT, samples=0)


class TestFrontTools:
    """Means, filtering and paired comparison."""

    def test_front_stats(self):
        assert front_stats(FRONT) == pytest.approx((0.4, 0.4))

    def test_front_stats_empty(self):
        with pytest.raises(MetricError):
            front_stats([])

    def test_pareto_filter(self):
        """Dominated points and later duplicates are dropped."""
        assert pareto_filter([(0.2, 0.6), (0.5, 0.7), (0.2, 0.6), (0.6, 0.2)]) == [0, 3]

    def test_sign_test_all_wins(self):
        wins, losses, p_value = sign_test(np.arange(10) + 1.0, np.arange(10))
        assert (wins, losses) == (10, 0)
        assert p_value == pytest.approx(0.5 ** 10)

    def test_sign_test_ties(self):
        assert sign_test([1.0, 2.0], [1.0, 2.0]) == (0, 0, 1.0)

    def test_sign_test_unpaired(self):
        with pytest.raises(MetricError):
            sign_test([1.0], [1.0, 2.0])


@pytest.mark.slow
class TestHypervolumeAgreement:
    """Exact and sampled hypervolume on many random fronts."""

    def test_random_fronts(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            points = rng.random((int(rng.integers(1, 21)), 2))
            exact = hypervolume_hso(points)
            estimate, stderr = hypervolume_mc(points, samples=200_000, rng=rng)
            assert abs(estimate - exact) <= 4.5 * stderr + 1e-12
