from aprhl_toolkit.config import GridConfig
from aprhl_toolkit.grade import Grade
from aprhl_toolkit.mechanisms import Laplace, Gauss, RandomizedResponse, Exponential, Window, Refusal, \
    SideConditionViolated, certify_window, certify_named, certify_table, gauss_side_conditions, gauss_windows, \
    cauchy_gamma
from fractions import Fraction
import math
import pytest

GRID = GridConfig(points=20_000)


class TestCertifyNamed:
    """Ensures the named mechanism rules produce their closed-form grades and pass the window cross-checks."""

    def test_laplace_exact_grade(self):
        """Ensures rational scale and radius give an exact grade r/σ."""
        certificate = certify_named('lap', {'sigma': Fraction(1, 2)}, 1, GRID)
        assert certificate.grade.log_gamma == 2
        assert isinstance(certificate.grade.log_gamma, Fraction)
        assert certificate.status == 'Analytic'
        assert certificate.window.shape == 'whole line'
        assert len(certificate.checks) == 6

    def test_laplace_float_grade(self):
        certificate = certify_named('lap', {'sigma': 0.3}, 0.6, GRID)
        assert math.isclose(certificate.grade.log_gamma, 2)

    def test_cauchy(self):
        certificate = certify_named('cauchy', {'rho': 2}, 1, GRID)
        assert math.isclose(certificate.grade.log_gamma, math.log(cauchy_gamma(2, 1)))
        assert certificate.grade.delta == 0

    def test_gauss(self):
        params = {'sigma': 8, 'eps': Fraction(1, 2), 'delta': Fraction(1, 1000)}
        certificate = certify_named('gauss', params, 1, GRID)
        assert certificate.grade == Grade(Fraction(1, 2), Fraction(1, 1000))
        assert certificate.window.shape == 'interval'
        assert all(check.tail_mass <= Fraction(1, 1000) for check in certificate.checks)

    def test_gauss_side_condition(self):
        """Ensures a Gaussian scale too small for (eps, delta) is refused with the failed inequalities."""
        with pytest.raises(SideConditionViolated) as error:
            certify_named('gauss', {'sigma': 2, 'eps': 0.5, 'delta': 0.001}, 1, GRID)
        assert error.value.failed

    def test_exponential_table(self):
        """Ensures an exponential mechanism table is certified at exp(2 r c) and verified pair by pair."""
        mech = Exponential.from_table({0: [0, -1], 1: [-1, 0]}, ['a', 'b'], 2)
        certificate = certify_named('exp', {'mechanism': mech}, 1)
        assert certificate.grade.gamma == 4
        assert any('exact lifting' in note for note in certificate.notes)

    def test_exponential_eps(self):
        certificate = certify_named('exp', {'eps': Fraction(1, 2), 'c': 1}, 1)
        assert certificate.grade.log_gamma == 1

    def test_bad_requests(self):
        with pytest.raises(ValueError):
            certify_named('pareto', {}, 1)
        with pytest.raises(ValueError):
            certify_named('lap', {'sigma': 1}, -1)

    def test_record(self):
        record = certify_named('lap', {'sigma': 1}, 1, GRID).to_record()
        assert record['status'] == 'Analytic'
        assert record['radius'] == '1'
        assert len(record['checks']) == 6


class TestGaussSideConditions:
    """Ensures the Gaussian side conditions distinguish the standard and relaxed variants."""

    def test_admissible(self):
        assert gauss_side_conditions(8, 0.5, 0.001, 1, 'standard') == []

    def test_relaxed_variant_admits_more(self):
        assert gauss_side_conditions(4.2, 0.5, 0.1, 1, 'standard')
        assert gauss_side_conditions(4.2, 0.5, 0.1, 1, 'relaxed') == []

    @pytest.mark.parametrize('eps, delta', [(1.5, 0.001), (0.5, 0), (0.5, 1)])
    def test_out_of_range(self, eps, delta):
        assert gauss_side_conditions(100, eps, delta, 1, 'standard')

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            gauss_side_conditions(8, 0.5, 0.001, 1, 'loose')

    def test_windows(self):
        """Ensures the relaxed window is a half-line opening away from the smaller input."""
        standard = gauss_windows(8, 0.5, 1, 0, 1, 'standard')
        assert (standard.lo, standard.hi) == (-31.5, 32.5)
        relaxed = gauss_windows(8, 0.5, 1, 0, 1, 'relaxed')
        assert relaxed.lo == -31.5 and relaxed.hi == math.inf


class TestCertifyWindow:
    """Ensures each window condition is checked and a failing one is named with a witness."""

    def test_laplace_line(self):
        certificate = certify_window(Laplace(1), 0, 1, math.e, 1, 0, Window.line(), GRID)
        assert certificate.status == 'GridVerified'
        assert certificate.checks[0].grid_log_ratio <= 1 + 1e-9

    def test_ratio_condition(self):
        with pytest.raises(Refusal) as error:
            certify_window(Laplace(1), 0, 1, math.exp(0.5), 1, 0, Window.line(), GRID)
        assert error.value.condition == 'ii'

    def test_tail_condition(self):
        """Ensures mass outside the window beyond δ fails the tail condition."""
        with pytest.raises(Refusal) as error:
            certify_window(Gauss(1), 0, 1, math.e, 1, 0.1, Window(0.5, 10), GRID)
        assert error.value.condition == 'iii'
        assert error.value.witness > 0.1

    def test_bad_grade(self):
        with pytest.raises(ValueError):
            certify_window(Laplace(1), 0, 1, 0.5, 1, 0, Window.line(), GRID)


class TestCertifyTable:
    """Ensures discrete mechanisms are certified by exact liftings of their output distributions."""

    pairs = [(False, True), (True, False)]

    def test_randomized_response(self):
        certificate = certify_table(RandomizedResponse(Fraction(3, 4)), Grade.from_gamma(3), self.pairs)
        assert certificate.radius is None
        assert certificate.grade.gamma == 3

    def test_refused(self):
        with pytest.raises(Refusal):
            certify_table(RandomizedResponse(Fraction(3, 4)), Grade.from_gamma(2), self.pairs)
