from aprhl_toolkit.mechanisms import Laplace, Gauss, Cauchy, Bernoulli, UniformInt, RandomizedResponse, \
    Exponential, DomainError, ContinuousInExactMode, cauchy_gamma
from fractions import Fraction
from scipy import stats
import math
import numpy as np
import pytest


class TestContinuousMechanisms:
    """Ensures the continuous mechanisms have consistent densities, interval masses and samplers."""

    @pytest.mark.parametrize('mech', [Laplace(2), Laplace(2, 'standard'), Gauss(1.5), Cauchy(0.5)])
    def test_probabilities(self, mech):
        """Ensures interval probabilities are normalised whatever the density constant."""
        assert math.isclose(mech.normalized_prob(1, -math.inf, math.inf), 1)
        assert math.isclose(mech.cdf(1, 1), 0.5)
        assert math.isclose(mech.outside_mass(1, 0, 2), 1 - mech.normalized_prob(1, 0, 2))

    def test_laplace_constants_agree(self):
        assert math.isclose(Laplace(2).normalized_prob(0, -1, 3), Laplace(2, 'standard').normalized_prob(0, -1, 3))
        assert math.isclose(Laplace(2, 'standard').density(0, 0), 0.25)

    def test_known_masses(self):
        assert math.isclose(Gauss(2).normalized_prob(0, -2, 2), 0.682689492, rel_tol=1e-8)
        assert math.isclose(Cauchy(3).cdf(0, 3), 0.75)
        assert math.isclose(Laplace(1).cdf(0, -1), 0.5 * math.exp(-1))

    def test_far_tail_precision(self):
        """Ensures tail masses far from the centre keep their relative precision."""
        assert Gauss(1).outside_mass(0, -math.inf, 30) > 0
        assert math.isclose(Cauchy(1).outside_mass(0, -math.inf, 1e8), 1 / (math.pi * 1e8), rel_tol=1e-6)

    @pytest.mark.parametrize('mech, distribution, args', [
        (Laplace(2), 'laplace', (1, 2)),
        (Gauss(1.5), 'norm', (1, 1.5)),
        (Cauchy(0.5), 'cauchy', (1, 0.5)),
    ])
    def test_sampler_matches_distribution(self, mech, distribution, args):
        samples = mech.sample_many(1.0, 20000, np.random.default_rng(5))
        assert stats.kstest(samples, distribution, args=args).pvalue > 0.001

    def test_vector_inputs(self):
        samples = Laplace(0.01).sample_many(np.array([0.0, 100.0]), 2, np.random.default_rng(1))
        assert abs(samples[0]) < 1 and abs(samples[1] - 100) < 1

    def test_log_ratio_sup(self):
        """Ensures the closed-form supremum of the density ratio matches the known worst cases."""
        assert math.isclose(Laplace(2).log_ratio_sup(0, 1, -math.inf, math.inf), 0.5)
        assert Gauss(1).log_ratio_sup(0, 1, -math.inf, math.inf) == math.inf
        assert math.isclose(Gauss(1).log_ratio_sup(0, 1, -1, 2), 1.5)
        assert math.isclose(Cauchy(2).log_ratio_sup(0, 1, -math.inf, math.inf), math.log(cauchy_gamma(2, 1)))

    def test_cauchy_gamma(self):
        assert math.isclose(cauchy_gamma(2, 1), 1 + (1 + math.sqrt(17)) / 8)

    def test_no_exact_form(self):
        with pytest.raises(ContinuousInExactMode):
            Laplace(1).exact_dist(0)

    @pytest.mark.parametrize('build', [lambda: Laplace(0), lambda: Laplace(1, 'other'), lambda: Gauss(-1),
                                       lambda: Cauchy(math.inf)])
    def test_bad_parameters(self, build):
        with pytest.raises(DomainError):
            build()


class TestDiscreteMechanisms:
    """Ensures the discrete mechanisms have exact output distributions consistent with their samplers."""

    def test_bernoulli(self):
        dist = Bernoulli(Fraction(1, 3)).exact_dist()
        assert dist(True) == Fraction(1, 3) and dist(False) == Fraction(2, 3)
        with pytest.raises(DomainError):
            Bernoulli(Fraction(3, 2))

    def test_uniform(self):
        dist = UniformInt(1, 4).exact_dist()
        assert dist.support() == [1, 2, 3, 4]
        assert dist(2) == Fraction(1, 4)
        with pytest.raises(DomainError):
            UniformInt(3, 1)

    def test_randomized_response(self):
        mech = RandomizedResponse(Fraction(3, 4))
        assert mech.exact_dist(True)(True) == Fraction(3, 4)
        assert mech.exact_dist(False)(True) == Fraction(1, 4)
        assert mech.gamma() == 3
        with pytest.raises(DomainError):
            RandomizedResponse(1).gamma()

    def test_randomized_response_sampler(self):
        draws = RandomizedResponse(Fraction(3, 4)).sample_many(True, 20000, np.random.default_rng(2))
        assert abs(np.mean(draws) - 0.75) < 0.02

    def test_exponential_table(self):
        """Ensures table scores with a rational base give exact weights and an exact sensitivity."""
        mech = Exponential.from_table({0: [0, -1], 1: [-1, 0]}, ['a', 'b'], 2)
        dist = mech.exact_dist(0)
        assert dist('a') == Fraction(2, 3) and dist('b') == Fraction(1, 3)
        assert mech.sensitivity() == 1
        assert math.isclose(mech.eps, math.log(2))

    def test_exponential_sampler(self):
        mech = Exponential.from_table({0: [0, -1], 1: [-1, 0]}, ['a', 'b'], 2)
        draws = mech.sample_many(np.array([0] * 20000), 20000, np.random.default_rng(3))
        assert abs(np.mean(draws == 'a') - 2 / 3) < 0.02

    def test_exponential_float_base(self):
        mech = Exponential(['a', 'b'], lambda a, b: 0, 1.5)
        with pytest.raises(DomainError):
            mech.exact_dist(0)

    @pytest.mark.parametrize('args', [([], lambda a, b: 0, 2), (['a'], lambda a, b: 0, Fraction(1, 2)),
                                      (['a'], lambda a, b: 0, 2, [0])])
    def test_exponential_bad_parameters(self, args):
        with pytest.raises(DomainError):
            Exponential(*args)

    def test_exponential_row_length(self):
        with pytest.raises(DomainError):
            Exponential.from_table({0: [0]}, ['a', 'b'], 2)
