from aprhl_toolkit.grade import Grade
from aprhl_toolkit.logic import ProofError, load_script, parse_script
from aprhl_toolkit.logic.script import Text
from aprhl_toolkit.records import RecordSyntaxError
from fractions import Fraction
import pytest

HEADER = 'aprhl 1\nprogram "laplace_release.pwhile"\n'
GOAL = 'goal(pre: "abs(x<1> - x<2>) <= 1", post: "y<1> = y<2>", grade: (eps, 0))\n'


def parse(body: str, **kwargs):
    return parse_script(HEADER + body, base_dir='resources/corpus', **kwargs)


class TestScriptLoader:
    """Ensures proof scripts load into expanded proof trees with their parameters and goals."""

    def test_corpus_script(self):
        script = load_script('resources/corpus/laplace_release.aprhl')
        assert script.version == 1
        assert script.program_path.endswith('laplace_release.pwhile')
        assert script.goal.grade == Grade(1, 0)
        assert isinstance(script.goal.pre, Text)
        assert script.proof.rule == 'lap'
        assert script.proof.children == []

    def test_program_parameter_override(self):
        """Ensures overrides reach program parameters the script does not redeclare."""
        script = load_script('resources/corpus/laplace_release.aprhl', {'eps': Fraction(1, 2)})
        assert script.params == {'eps': Fraction(1, 2)}
        assert script.program.param_values()['eps'] == Fraction(1, 2)
        assert script.goal.grade == Grade(Fraction(1, 2), 0)

    def test_script_parameter(self):
        script = load_script('resources/corpus/gauss_release.aprhl', {'delta': Fraction(1, 100)})
        assert script.params['delta'] == Fraction(1, 100)
        assert script.goal.grade.delta == Fraction(1, 100)

    def test_gamma_grade(self):
        script = load_script('resources/corpus/randomized_response.aprhl')
        assert script.goal.grade == Grade.from_gamma(3)

    def test_above_threshold_expansion(self):
        """Ensures families, selections and definitions expand to one member proof per output value."""
        script = load_script('resources/corpus/abovet.aprhl')
        assert script.proof.rule == 'forall-eq'
        assert len(script.proof.children) == 5
        assert [child.rule for child in script.proof.children[:4]] == ['weak'] * 4
        assert script.proof.children[4].rule == 'seq'

    def test_definitions(self):
        script = parse('let k = 2\n'
                       'define pick(n)\n'
                       '  select n == k { lap } else { skip }\n' + GOAL +
                       'proof\n  use pick(n: 2)\n')
        assert script.proof.rule == 'lap'

    def test_family_scope(self):
        """Ensures assertion strings remember the family index they were written under."""
        script = parse(GOAL + 'proof\n  seq {\n    family i in 1 .. 3 { assn(post: "y<1> = y<2>") }\n  }\n')
        posts = [child.params['post'] for child in script.proof.children]
        assert [dict(post.scope)['i'] for post in posts] == [1, 2, 3]
        assert all(post.value == 'y<1> = y<2>' for post in posts)

    def test_unknown_definition(self):
        with pytest.raises(ProofError):
            parse(GOAL + 'proof\n  use nowhere()\n')

    def test_missing_argument(self):
        with pytest.raises(ProofError):
            parse('define pick(n)\n  lap\n' + GOAL + 'proof\n  use pick()\n')

    def test_shadowed_parameter(self):
        with pytest.raises(RecordSyntaxError):
            parse('let eps = 2\n' + GOAL + 'proof\n  lap\n')

    def test_unknown_rule(self):
        with pytest.raises(ProofError):
            load_script('resources/tests/scripts/unknown_rule.aprhl')

    @pytest.mark.parametrize('file_path', [
        'resources/tests/scripts/missing_goal.aprhl',
        'resources/tests/scripts/bad_version.aprhl',
        'resources/tests/scripts/missing_program.aprhl',
    ])
    def test_malformed(self, file_path: str):
        with pytest.raises(RecordSyntaxError):
            load_script(file_path)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_script('resources/tests/scripts/nowhere.aprhl')
