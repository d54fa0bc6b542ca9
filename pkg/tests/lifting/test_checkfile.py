from aprhl_toolkit.lifting.checkfile import LiftLoader, load_lift_checks, run_lift_check
from aprhl_toolkit.lifting import Eq, Explicit, WitnessPair
from aprhl_toolkit.records import RecordSyntaxError
from fractions import Fraction
import pytest


class TestLiftCheckFiles:
    """Ensures lift-check files load into checks whose verdicts match their stated expectations."""

    @pytest.mark.parametrize('file_path, count', [
        ('resources/corpus/randomized_response.lift', 3),
        ('resources/corpus/shifted_uniform.lift', 3),
    ])
    def test_corpus_expectations(self, file_path: str, count: int):
        checks = load_lift_checks(file_path)
        assert len(checks) == count
        for check in checks:
            result = run_lift_check(check)
            assert result.passed, check.location

    def test_randomized_response_details(self):
        first, second, third = load_lift_checks('resources/corpus/randomized_response.lift')
        assert isinstance(first.relation, Eq)
        assert first.grade.gamma == 3
        result = run_lift_check(second)
        assert not result.member
        assert result.delta == Fraction(1, 4)
        assert third.grade.delta == Fraction(1, 4)

    def test_witness_requested(self):
        """Ensures a witness is searched only when the check asks for one."""
        checks = load_lift_checks('resources/corpus/shifted_uniform.lift')
        assert isinstance(checks[0].relation, Explicit)
        assert isinstance(run_lift_check(checks[0]).witness, WitnessPair)
        assert run_lift_check(checks[1]).witness is None

    def test_record(self):
        check = load_lift_checks('resources/corpus/randomized_response.lift')[1]
        record = run_lift_check(check).to_record()
        assert record['member'] is False
        assert record['expect'] is False
        assert record['passed'] is True
        assert record['min_delta'] == '0.25'

    def test_inline_text(self):
        text = 'lift 1\ndist nu = [(0, 1/2), (1, 1/2)]\ncheck(left: nu, right: nu, eps: 0)\n'
        checks = LiftLoader(text).load()
        assert run_lift_check(checks[0]).passed

    @pytest.mark.parametrize('file_path', [
        'resources/tests/lift/bad_relation.lift',
        'resources/tests/lift/over_mass.lift',
    ])
    def test_malformed(self, file_path: str):
        with pytest.raises(RecordSyntaxError):
            load_lift_checks(file_path)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_lift_checks('resources/tests/lift/nowhere.lift')
