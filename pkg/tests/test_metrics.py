import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.dynamics.state import ParticleEnsemble
from src.metrics.errors import (
    ErrorSeries,
    coupled_error_e1,
    coupled_error_e2,
    fit_loglog_slope,
    fit_power_with_offset,
    flocking_diameters,
    mean_abs_position,
    wasserstein_1d,
)

coordinates = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


def _clouds(min_size=1, max_size=12, count=2):
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.tuples(*[st.lists(coordinates, min_size=n, max_size=n) for _ in range(count)])
    )


def _brute_force_w(a, b, order):
    best = min(
        np.mean(np.abs(np.asarray(a) - np.asarray(b)[list(perm)]) ** order)
        for perm in itertools.permutations(range(len(b)))
    )
    return best ** (1.0 / order)


class TestCoupledErrors:
    def test_e1_by_hand(self):
        assert coupled_error_e1(np.array([0.0, 1.0]), np.array([0.5, 1.5])) == 0.5

    def test_e1_identical_is_zero(self):
        x = np.array([-2.0, 0.3, 7.0])
        assert coupled_error_e1(x, x.copy()) == 0.0

    def test_e2_by_hand(self):
        assert coupled_error_e2(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(np.sqrt(12.5))

    def test_uses_euclidean_distance_per_particle(self):
        full = ParticleEnsemble(np.array([[0.0, 0.0], [1.0, 1.0]]))
        rbm = ParticleEnsemble(np.array([[3.0, 4.0], [1.0, 1.0]]))
        assert coupled_error_e1(full, rbm) == 2.5

    def test_rejects_mismatched_ensembles(self):
        with pytest.raises(ValueError, match="shape"):
            coupled_error_e1(np.zeros(3), np.zeros(4))
        with pytest.raises(ValueError, match="different times"):
            coupled_error_e1(ParticleEnsemble(np.zeros(2), t=0.5), ParticleEnsemble(np.zeros(2), t=0.25))


class TestWasserstein:
    def test_translated_cloud(self):
        assert wasserstein_1d([0.0, 1.0], [1.0, 2.0]) == 1.0

    def test_relabelled_cloud_is_zero(self):
        assert wasserstein_1d([0.0, 1.0], [1.0, 0.0]) == 0.0

    def test_order_two(self):
        assert wasserstein_1d([0.0, 0.0], [1.0, 3.0], order=2) == pytest.approx(np.sqrt(5.0))

    @pytest.mark.parametrize("n", [2, 4, 6])
    @pytest.mark.parametrize("order", [1, 2])
    def test_matches_brute_force_over_permutations(self, n, order):
        rng = np.random.default_rng(n * 10 + order)
        for _ in range(5):
            a, b = rng.standard_normal(n), rng.standard_cauchy(n)
            assert wasserstein_1d(a, b, order) == pytest.approx(_brute_force_w(a, b, order), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(_clouds(count=3))
    def test_triangle_inequality(self, clouds):
        a, b, c = clouds
        assert wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-9

    @settings(max_examples=200, deadline=None)
    @given(_clouds(count=1), st.floats(min_value=-50.0, max_value=50.0, allow_nan=False))
    def test_translation(self, clouds, shift):
        (a,) = clouds
        shifted = [x + shift for x in a]
        assert wasserstein_1d(a, shifted) == pytest.approx(abs(shift), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(_clouds(count=2))
    def test_bounded_by_any_pairing(self, clouds):
        a, b = clouds
        assert wasserstein_1d(a, b) <= coupled_error_e1(np.array(a), np.array(b)) + 1e-9

    def test_errors(self):
        with pytest.raises(ValueError, match="sizes differ"):
            wasserstein_1d([0.0], [0.0, 1.0])
        with pytest.raises(ValueError, match="at least one"):
            wasserstein_1d([], [])
        with pytest.raises(ValueError, match="order"):
            wasserstein_1d([0.0], [0.0], order=3)


class TestFlockingDiameters:
    def test_by_hand(self):
        ensemble = ParticleEnsemble(np.array([0.0, 3.0, -1.0]), np.array([1.0, 1.0, 1.0]))
        assert flocking_diameters(ensemble) == (4.0, 0.0)

    def test_two_dimensions(self):
        ensemble = ParticleEnsemble(np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]]), np.zeros((3, 2)))
        assert flocking_diameters(ensemble) == (5.0, 0.0)

    def test_single_particle(self):
        assert flocking_diameters(ParticleEnsemble(np.array([2.0]), np.array([1.0]))) == (0.0, 0.0)

    def test_needs_velocities(self):
        with pytest.raises(ValueError):
            flocking_diameters(ParticleEnsemble(np.zeros(2)))


class TestMeanAbsPosition:
    def test_by_hand(self):
        assert mean_abs_position(ParticleEnsemble(np.array([-1.0, 3.0]))) == 2.0
        assert mean_abs_position(ParticleEnsemble(np.array([[3.0, 4.0], [0.0, 0.0]]))) == 2.5


class TestFitLoglogSlope:
    def test_square_root_law(self):
        kappas = 2.0 ** -np.arange(5, 10)
        slope, intercept = fit_loglog_slope(kappas, 3.0 * np.sqrt(kappas))
        assert slope == pytest.approx(0.5, abs=1e-12)
        assert np.exp(intercept) == pytest.approx(3.0, rel=1e-12)

    def test_quadratic_cost(self):
        ns = np.array([100.0, 200.0, 400.0, 800.0])
        slope, _ = fit_loglog_slope(ns, ns * (ns - 1))
        assert 1.9 < slope < 2.1

    @pytest.mark.parametrize("xs, ys", [([1.0], [1.0]), ([1.0, 2.0], [1.0]), ([1.0, 0.0], [1.0, 2.0]), ([1.0, 2.0], [1.0, -2.0])])
    def test_rejects(self, xs, ys):
        with pytest.raises(ValueError):
            fit_loglog_slope(xs, ys)


class TestFitPowerWithOffset:
    def test_linear_cost_behind_fixed_overhead(self):
        ns = np.array([50.0, 100.0, 200.0, 500.0, 1000.0])
        times = 0.05 + 2e-4 * ns
        exponent, c0, c1 = fit_power_with_offset(ns, times)
        assert exponent == pytest.approx(1.0, abs=1e-3)
        assert c0 == pytest.approx(0.05, rel=1e-2)
        assert c1 == pytest.approx(2e-4, rel=1e-2)
        # the plain log-log slope is dragged down by the overhead
        assert fit_loglog_slope(ns, times)[0] < 0.7

    def test_pure_power_has_no_offset(self):
        ns = np.array([50.0, 100.0, 200.0, 500.0, 1000.0])
        exponent, c0, _ = fit_power_with_offset(ns, 3.0 * ns ** 2)
        assert exponent == pytest.approx(2.0, abs=1e-3)
        assert c0 == pytest.approx(0.0, abs=1e-6 * 3.0 * 50.0 ** 2)

    @pytest.mark.parametrize("xs, ys", [([1.0, 2.0], [1.0, 2.0]), ([1.0, 2.0, 3.0], [1.0, 2.0]), ([1.0, 2.0, 3.0], [1.0, 0.0, 2.0])])
    def test_rejects(self, xs, ys):
        with pytest.raises(ValueError):
            fit_power_with_offset(xs, ys)


class TestErrorSeries:
    def test_lengths_must_match(self):
        with pytest.raises(ValueError, match="w1"):
            ErrorSeries(times=np.array([1.0, 2.0]), e1=np.array([0.1, 0.2]), w1=np.array([0.1]))

    def test_rejects_negative_errors(self):
        with pytest.raises(ValueError, match="nonnegative"):
            ErrorSeries(times=np.array([1.0]), e1=np.array([-0.1]))

    def test_nearest_boundary(self):
        series = ErrorSeries(times=np.array([0.25, 0.5, 0.75, 1.0]), e1=np.zeros(4))
        assert series.at(0.5) == 1
        assert series.at(0.99) == 3
