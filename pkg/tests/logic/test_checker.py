from aprhl_toolkit.config import RunConfig
from aprhl_toolkit.grade import Grade
from aprhl_toolkit.lang import TypeChecker, parse_command, parse_expression, parse_file
from aprhl_toolkit.logic import GradeMismatch, SideConditionFailed, Policy, Verified, ProofContext, ProofError, Rule, \
    RuleApp, Refuted, Judgement, TRUE, apply_rule, load_script, check_proof, parse_assertion
from aprhl_toolkit.logic.assertion import conjuncts
from aprhl_toolkit.logic.rules import loop_premise
from aprhl_toolkit.mechanisms import cauchy_gamma
from fractions import Fraction
import math
import pytest


def check_file(file_path: str, overrides=None, **kwargs):
    return check_proof(load_script(file_path, overrides), **kwargs)


class TestCorpusProofs:
    """Ensures every corpus proof checks at the grade it claims."""

    def test_laplace(self):
        """Ensures the Laplace rule gives exactly (eps, 0) for noise of scale 1/eps."""
        report = check_file('resources/corpus/laplace_release.aprhl')
        assert report.judgement.grade == Grade(1, 0)
        assert report.accepted

    @pytest.mark.parametrize('eps', [Fraction(1, 2), Fraction(1), Fraction(2)])
    def test_above_threshold(self, eps: Fraction):
        """Ensures the above threshold proof is accepted at (eps, 0) for several budgets."""
        report = check_file('resources/corpus/abovet.aprhl', {'eps': eps})
        assert report.judgement.grade == Grade(eps, 0)
        assert report.claimed == Grade(eps, 0)
        assert report.params['eps'] == eps
        assert report.conditions

    def test_gauss(self):
        report = check_file('resources/corpus/gauss_release.aprhl')
        assert report.judgement.grade == Grade(Fraction(1, 2), Fraction(1, 1000))
        assert report.certificates[0][1].mechanism.startswith('gauss')

    def test_cauchy(self):
        report = check_file('resources/corpus/cauchy_release.aprhl')
        assert math.isclose(report.judgement.grade.log_gamma, math.log(cauchy_gamma(2, 1)))
        assert report.judgement.grade.delta == 0

    def test_randomized_response(self):
        """Ensures the randomized response proof is confirmed by the finite-support oracle."""
        report = check_file('resources/corpus/randomized_response.aprhl', oracle=True)
        assert report.judgement.grade.gamma == 3
        assert report.oracle is not None and report.oracle.valid
        assert report.oracle.pairs == 16

    def test_sequential_composition(self):
        report = check_file('resources/corpus/two_releases.aprhl', {'eps': Fraction(1, 2)})
        assert report.judgement.grade == Grade(Fraction(1, 2), 0)
        assert len(report.certificates) == 2

    def test_oracle_refuses_reals(self):
        """Ensures the oracle leaves the report undecided for real-valued variables."""
        report = check_file('resources/corpus/laplace_release.aprhl', oracle=True)
        assert report.oracle is None
        assert report.accepted


class TestRejectedProofs:
    """Ensures wrong claims and unestablished side conditions reject the proof."""

    def test_grade_below_computed(self):
        with pytest.raises(GradeMismatch) as error:
            check_file('resources/corpus/bad_grade.aprhl')
        assert error.value.claimed == Grade(Fraction(1, 2), 0)
        assert error.value.computed == Grade(1, 0)

    def test_side_condition(self):
        with pytest.raises(SideConditionFailed) as error:
            check_file('resources/corpus/bad_side_condition.aprhl')
        assert error.value.rule == 'lap'

    def test_strict_policy(self):
        """Ensures the strict policy still accepts a proof whose conditions are all proven."""
        report = check_file('resources/corpus/two_releases.aprhl', policy=Policy.STRICT)
        assert report.policy == 'strict'
        assert all(isinstance(condition.verdict, Verified) for condition in report.conditions)


class TestReport:
    """Ensures reports serialise the judgement, verdicts and certificates."""

    def test_record(self):
        report = check_file('resources/corpus/laplace_release.aprhl', config=RunConfig(seed=3))
        record = report.to_record()
        assert record['accepted'] is True
        assert record['grade']['eps'] == '1'
        assert record['grade']['delta'] == '0'
        assert record['seed'] == 3
        assert record['certificates'][0]['status'] == 'Analytic'
        assert 'oracle' not in record

    def test_describe(self):
        text = check_file('resources/corpus/randomized_response.aprhl', oracle=True).describe()
        assert text.startswith('Proof accepted')
        assert 'oracle: valid over 16 pairs' in text


class TestLoopVariant:
    """Ensures [while] only counts iterations with an integer variant."""

    program = parse_file('resources/tests/scripts/stepping_loop.pwhile')

    def variant(self, text: str):
        return TypeChecker(self.program).expr(parse_expression(text), '<variant>')

    def test_real_variant_script(self):
        """Ensures a variant that can step between integers is rejected before any premise is checked."""
        with pytest.raises(ProofError) as error:
            check_file('resources/tests/scripts/real_variant.aprhl')
        assert 'must have type int' in str(error.value)

    def test_real_variant_rule(self):
        ctx = ProofContext(self.program)
        loop = self.program.body
        params = {
            'guard_left': loop.guard,
            'guard_right': loop.guard,
            'invariant': parse_assertion('x<1> = x<2> && y<1> = y<2>', self.program),
            'variant': self.variant('x / 2'),
            'bound': 0,
            'left': loop,
            'right': loop,
        }
        with pytest.raises(ProofError):
            apply_rule(RuleApp(Rule.WHILE, params), [], ctx)

    def test_loop_premise(self):
        ctx = ProofContext(self.program)
        invariant = parse_assertion('y<1> = y<2>', self.program)
        entry, leaving = loop_premise(ctx, invariant, self.variant('x'), 1, 0)
        assert len(conjuncts(entry)) == 3 and len(conjuncts(leaving)) == 2
        with pytest.raises(ProofError):
            loop_premise(ctx, invariant, self.variant('x / 2'), 1, 0)


class TestFrame:
    """Ensures [frame] adds Θ when the commands leave it alone, and otherwise asks the exact runs
    whether both output supports stay inside Θ."""

    program = parse_file('resources/tests/lang/bounded_counter.pwhile')

    def frame(self, command: str, theta: str, program=None):
        program = program or self.program
        cmd = parse_command(command, program)
        premise = Judgement(cmd, cmd, TRUE, TRUE, Grade.identity())
        ctx = ProofContext(program)
        app = RuleApp(Rule.FRAME, {'theta': parse_assertion(theta, program)})
        return apply_rule(app, [premise], ctx), ctx

    def test_untouched(self):
        """Ensures Θ over variables neither command writes needs no run."""
        conclusion, ctx = self.frame('x <- 1', 'y<1> = y<2>')
        assert conclusion.pre == conclusion.post
        assert ctx.conditions == []

    def test_written_but_kept(self):
        """Ensures Θ over a written variable is accepted when every pair of outputs satisfies it."""
        conclusion, ctx = self.frame('x <- 1', 'x<1> = x<2>')
        assert conclusion.post == parse_assertion('x<1> = x<2>', self.program)
        assert ctx.conditions[-1].verdict == Verified('support')
        assert ctx.conditions[-1].accepted

    def test_written_and_broken(self):
        """Ensures independent coin flips on the two sides break Θ over the flipped bit."""
        with pytest.raises(SideConditionFailed) as error:
            self.frame('b <$ bern(1/2)', 'b<1> = b<2>')
        assert isinstance(error.value.verdict, Refuted)

    def test_no_finite_domain(self):
        """Ensures real-valued variables leave only the syntactic path."""
        program = parse_file('resources/corpus/laplace_release.pwhile')
        with pytest.raises(SideConditionFailed) as error:
            self.frame('y <- x', 'y<1> = y<2>', program)
        assert error.value.verdict is None
