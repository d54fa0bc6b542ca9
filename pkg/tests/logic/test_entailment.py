from aprhl_toolkit.config import EntailmentConfig
from aprhl_toolkit.lang import parse_file, parse_program
from aprhl_toolkit.logic import Policy, Verified, Tested, Refuted, Assumed, parse_assertion, holds
from aprhl_toolkit.logic.entailment import entails
from aprhl_toolkit.measure import Memory
import pytest

LAPLACE = parse_file('resources/corpus/laplace_release.pwhile')
RESPONSE = parse_file('resources/corpus/randomized_response.pwhile')
ABOVET = parse_file('resources/corpus/abovet.pwhile')


def decide(program, hypothesis: str, goal: str, **kwargs):
    return entails(parse_assertion(hypothesis, program), parse_assertion(goal, program), program, **kwargs)


class TestEntailment:
    """Ensures each stage of the entailment engine decides the implications it is meant for."""

    def test_syntactic(self):
        verdict = decide(LAPLACE, 'y<1> = y<2> && abs(x<1> - x<2>) <= 1', 'y<1> = y<2>')
        assert verdict == Verified('syntactic')

    def test_arithmetic(self):
        verdict = decide(LAPLACE, 'x<1> + 1 = x<2>', 'x<1> <= x<2> && abs(x<1> - x<2>) <= 1')
        assert verdict == Verified('arithmetic')

    def test_sensitivity(self):
        """Ensures the query sensitivity bounds the difference of answers on adjacent data."""
        verdict = decide(ABOVET, 'adj{d} <= 1 && j<1> = j<2>',
                         'abs(eval(Q, j<1>, d<1>) - eval(Q, j<2>, d<2>)) <= 1')
        assert verdict == Verified('sensitivity')

    def test_declared_sensitivity(self):
        """Ensures a sensitivity declared with an operation in the prelude feeds the same lemmas."""
        program = parse_program('op scaled(v : real) : real sensitivity {v: 2} = 2 * v; var x : real, y : real; '
                                'y <- scaled(x)')
        verdict = decide(program, 'adj{x} <= 1', 'abs(scaled(x<1>) - scaled(x<2>)) <= 2')
        assert verdict == Verified('sensitivity')

    def test_sensitivity_needs_agreement(self):
        verdict = decide(ABOVET, 'adj{d} <= 1', 'abs(eval(Q, j<1>, d<1>) - eval(Q, j<2>, d<2>)) <= 1',
                         strategy='arithmetic')
        assert not isinstance(verdict, Verified)

    def test_exhaustive(self):
        """Ensures implications over booleans are evaluated on every memory pair."""
        verdict = decide(RESPONSE, 'b<1> = b<2> && o<1> = o<2>', 'b<1> = b<2> || !o<2>')
        assert verdict == Verified('syntactic') or (isinstance(verdict, Tested) and verdict.exhaustive)
        tested = decide(RESPONSE, 'b<1> != b<2>', '!b<1> || !b<2>', strategy='exhaustive')
        assert isinstance(tested, Tested) and tested.exhaustive

    def test_refuted(self):
        verdict = decide(RESPONSE, 'b<1> = b<2>', 'o<1> = o<2>')
        assert isinstance(verdict, Refuted)
        first, second = verdict.memories
        assert first['b'] == second['b']
        assert first['o'] != second['o']

    def test_random(self):
        """Ensures nonlinear implications over reals fall back to seeded random testing."""
        config = EntailmentConfig(random_samples=200)
        verdict = decide(LAPLACE, 'x<1> = x<2>', 'x<1> * x<1> >= 0', config=config, seed=7)
        assert verdict == Tested(200, False, 7)

    def test_random_refutation(self):
        config = EntailmentConfig(random_samples=500)
        verdict = decide(LAPLACE, 'abs(x<1> - x<2>) <= 2', 'x<1> * x<2> >= 0', config=config)
        assert isinstance(verdict, Refuted)

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            decide(LAPLACE, 'true', 'true', strategy='oracle')


class TestPolicy:
    """Ensures each policy accepts exactly the verdicts with the evidence it asks for."""

    @pytest.mark.parametrize('verdict, strict, standard, permissive', [
        (Verified('arithmetic'), True, True, True),
        (Tested(16, True), False, True, True),
        (Tested(100, False, 0), False, False, True),
        (Assumed(), False, False, True),
        (Refuted((Memory({'b': True}),)), False, False, False),
    ])
    def test_acceptance(self, verdict, strict: bool, standard: bool, permissive: bool):
        assert Policy.named('strict')(verdict) == strict
        assert Policy.named('standard')(verdict) == standard
        assert Policy.named('Permissive')(verdict) == permissive

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            Policy.named('lenient')


class TestHolds:
    """Ensures assertions are evaluated on tagged memories."""

    def test_relational(self):
        assertion = parse_assertion('o<1> = o<2> && (!b<1> || b<2>)', RESPONSE)
        memory = Memory({'b': True, 'o': False})
        assert holds(assertion, {1: memory, 2: memory})
        assert not holds(assertion, {1: memory, 2: Memory({'b': False, 'o': False})})

    def test_parameters_folded(self):
        """Ensures untagged names read the program parameters."""
        assertion = parse_assertion('y<1> <= y<2> + eps', LAPLACE)
        assert holds(assertion, {1: Memory({'x': 0, 'y': 1}), 2: Memory({'x': 0, 'y': 0})})
