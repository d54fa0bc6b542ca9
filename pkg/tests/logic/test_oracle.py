from aprhl_toolkit.grade import Grade
from aprhl_toolkit.lang import parse_file
from aprhl_toolkit.logic import Judgement, OracleRefusal, RunCache, parse_assertion, universe, judgement_valid, \
    required_delta
from aprhl_toolkit.config import RunConfig
from aprhl_toolkit.lang.optable import default_optable
from fractions import Fraction
import pytest

RESPONSE = parse_file('resources/corpus/randomized_response.pwhile')


def response_judgement(grade: Grade, pre: str = 'true', post: str = 'o<1> = o<2>') -> Judgement:
    return Judgement(RESPONSE.body, RESPONSE.body, parse_assertion(pre, RESPONSE), parse_assertion(post, RESPONSE),
                     grade)


class TestUniverse:
    """Ensures the oracle enumerates finite memory spaces and refuses infinite ones."""

    def test_booleans(self):
        memories = universe(RESPONSE)
        assert len(memories) == 4
        assert {(memory['b'], memory['o']) for memory in memories} == {(False, False), (False, True),
                                                                       (True, False), (True, True)}

    def test_refusal(self):
        with pytest.raises(OracleRefusal):
            universe(parse_file('resources/corpus/laplace_release.pwhile'))

    def test_ranges(self):
        """Ensures explicit ranges give real-valued variables a finite domain."""
        program = parse_file('resources/corpus/laplace_release.pwhile')
        assert len(universe(program, {'x': [0, 1], 'y': [0]})) == 2


class TestJudgementValid:
    """Ensures judgements are decided extensionally from the exact output distributions."""

    def test_valid(self):
        result = judgement_valid(response_judgement(Grade.from_gamma(3)), universe(RESPONSE), RESPONSE)
        assert result.valid
        assert result.pairs == 16
        assert result.counterexample is None

    def test_counterexample(self):
        """Ensures an invalid judgement names the initial memories and the violating event."""
        result = judgement_valid(response_judgement(Grade.from_gamma(2)), universe(RESPONSE), RESPONSE)
        assert not result.valid
        first, second = result.counterexample
        assert first['b'] != second['b']
        assert result.certificate.excess == Fraction(1, 4)
        assert 'counterexample' in result.to_record()

    def test_precondition_filters_pairs(self):
        judgement = response_judgement(Grade.identity(), pre='b<1> = b<2> && o<1> = o<2>')
        result = judgement_valid(judgement, universe(RESPONSE), RESPONSE)
        assert result.valid
        assert result.pairs == 4

    def test_required_delta(self):
        judgement = response_judgement(Grade.from_gamma(2))
        assert required_delta(judgement, universe(RESPONSE), RESPONSE) == Fraction(1, 4)
        assert required_delta(response_judgement(Grade.from_gamma(3)), universe(RESPONSE), RESPONSE) == 0


class TestRunCache:
    """Ensures exact runs are cached per command and memory."""

    def test_cached(self):
        runs = RunCache(RESPONSE, RunConfig(), default_optable())
        memory = universe(RESPONSE)[0]
        first = runs(RESPONSE.body, memory)
        assert runs(RESPONSE.body, memory) is first
        assert first.dist.mass() == 1
