import math

import numpy as np
import pytest
from scipy import integrate, stats

from src.initial_states.laws import (
    MetropolisSettings,
    PointMass,
    ScaledSemicircle,
    Semicircle,
    UniformBox,
    parse_initial_law,
    sample_initial,
    sample_semicircle_exact,
    semicircle_cdf,
    semicircle_density,
)
from src.utils.rng import STREAM_INITIAL, substream

_CDF = np.vectorize(semicircle_cdf)


def _rng(index: int = 0):
    return substream(11, STREAM_INITIAL, index)


class TestSemicircleLaw:
    def test_density_integrates_to_one(self):
        total, _ = integrate.quad(lambda x: float(semicircle_density(x)), -2.0, 2.0)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_cdf_endpoints_and_symmetry(self):
        assert semicircle_cdf(-2.0) == 0.0
        assert semicircle_cdf(2.0) == 1.0
        assert semicircle_cdf(0.0) == pytest.approx(0.5, abs=1e-10)
        # F(1) = 1/2 + (sqrt(3)/2 + pi/3) / (2 pi) for radius 2
        assert semicircle_cdf(1.0) == pytest.approx(0.5 + (math.sqrt(3) / 2 + math.pi / 3) / (2 * math.pi), abs=1e-9)

    def test_density_vanishes_outside(self):
        assert np.all(semicircle_density([-3.0, 2.5, 10.0]) == 0.0)

    def test_moments_of_metropolis_samples(self):
        samples = sample_initial(Semicircle(), 100_000, _rng(1))
        assert abs(samples.mean()) < 0.02
        assert samples.var() == pytest.approx(1.0, abs=0.03)

    def test_metropolis_support(self):
        samples = sample_initial(Semicircle(), 100_000, _rng(2))
        assert np.all(np.abs(samples) < 2.0)

    def test_metropolis_matches_cdf(self):
        samples = sample_initial(Semicircle(), 100_000, _rng(3))
        assert stats.kstest(samples, _CDF).statistic < 0.01

    def test_exact_sampler_matches_cdf(self):
        samples = sample_semicircle_exact(100_000, _rng(4))
        assert np.all(np.abs(samples) <= 2.0)
        assert stats.kstest(samples, _CDF).statistic < 0.01

    def test_exact_sampler_other_radius(self):
        samples = sample_semicircle_exact(50_000, _rng(5), radius=1.0)
        assert np.all(np.abs(samples) <= 1.0)
        assert samples.var() == pytest.approx(0.25, abs=0.01)

    def test_same_stream_same_samples(self):
        assert np.array_equal(sample_initial(Semicircle(), 500, _rng(6)), sample_initial(Semicircle(), 500, _rng(6)))


class TestOtherLaws:
    def test_point_mass(self):
        assert np.all(sample_initial(PointMass(0.0), 10, _rng()) == 0.0)
        assert np.all(sample_initial(PointMass(-1.5), 3, _rng()) == -1.5)

    def test_scaled_semicircle_stretches_support(self):
        samples = sample_initial(ScaledSemicircle(0.1), 20_000, _rng(7))
        assert np.all(np.abs(samples) < 20.0)
        assert samples.var() == pytest.approx(100.0, rel=0.05)

    def test_uniform_box(self):
        samples = sample_initial(UniformBox(-1.0, 3.0), 10_000, _rng(8))
        assert samples.min() >= -1.0 and samples.max() < 3.0

    def test_rejects_empty_draw(self):
        with pytest.raises(ValueError):
            sample_initial(PointMass(), 0, _rng())

    @pytest.mark.parametrize("build", [
        lambda: Semicircle(0.0),
        lambda: ScaledSemicircle(-1.0),
        lambda: UniformBox(1.0, 1.0),
        lambda: MetropolisSettings(step=0.0),
        lambda: MetropolisSettings(thinning=0),
    ])
    def test_parameter_validation(self, build):
        with pytest.raises(ValueError):
            build()


class TestParseInitialLaw:
    @pytest.mark.parametrize("name, law", [
        ("semicircle", Semicircle(2.0)),
        ("semicircle:r=1.5", Semicircle(1.5)),
        ("semicircle_scaled:s=0.1", ScaledSemicircle(0.1)),
        ("point:x=0", PointMass(0.0)),
        ("point", PointMass(0.0)),
        ("uniform:-1,1", UniformBox(-1.0, 1.0)),
    ])
    def test_names(self, name, law):
        assert parse_initial_law(name) == law

    def test_describe_round_trips(self):
        for law in (Semicircle(2.0), ScaledSemicircle(0.1), PointMass(3.0), UniformBox(0.0, 2.0)):
            assert parse_initial_law(law.describe()) == law

    def test_unknown(self):
        with pytest.raises(ValueError, match="Unknown initial law"):
            parse_initial_law("gaussian")
