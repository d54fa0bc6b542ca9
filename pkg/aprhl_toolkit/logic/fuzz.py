from .assertion import Assertion, parse_assertion
from .judgement import Judgement
from .oracle import OracleRefusal, RunCache, judgement_valid, required_delta, universe
from .rules import Rule, RuleApp, ProofContext, ProofError, GradeAlgebra, apply_rule
from .entailment import Policy
from ..config import RunConfig
from ..generator import APGenerator
from ..grade import Grade, grade_seq, grade_comp
from ..lang.optable import default_optable
from ..lang.parser import parse_expression, parse_command
from ..lang.syntax import Cmd, Expr, While
from ..lang.typecheck import TypeChecker
from ..lifting import LiftingError
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging

logger = logging.getLogger(__name__)

FUZZ_RULES: Tuple[str, ...] = ('skip', 'assn', 'rand', 'seq', 'cond', 'case', 'weak', 'op', 'comp', 'comp-endo',
                               'frame', 'forall-eq', 'while')

ALL_EQUAL = 'x<1> = x<2> && y<1> = y<2> && b<1> = b<2> && c<1> = c<2>'

# Postconditions that are reflexive and transitive, so that [comp] and [comp-endo] conclusions are checkable.
TRANSITIVE = ('x<1> = x<2>', 'x<1> <= x<2>', 'x<1> = x<2> && b<1> = b<2>', 'b<1> = b<2> && c<1> = c<2>',
              'y<1> <= y<2> && c<1> = c<2>')


class FuzzError(Exception):
    """An exception raised when a fuzzing campaign is misconfigured."""
    pass


class _Skipped(Exception):
    """Raised when a generated instance is out of scope: a run exceeds the support bound, the oracle
    refuses, or the rule rejects the premises."""
    pass


def _summed_seq(g1: Grade, g2: Grade) -> Grade:
    return Grade.from_gamma(g1.gamma + g2.gamma, g1.delta + g2.delta)


def _smaller_comp(g1: Grade, g2: Grade) -> Grade:
    composed = grade_comp(g1, g2)
    delta = min(g1.delta + g1.gamma * g2.delta, g2.delta + g2.gamma * g1.delta)
    return Grade(composed.log_gamma, delta, exact_gamma=composed.exact_gamma)


MUTATIONS: Dict[str, GradeAlgebra] = {
    'seq-sum': GradeAlgebra(seq=_summed_seq, comp=grade_comp),
    'comp-min': GradeAlgebra(seq=grade_seq, comp=_smaller_comp),
}


@dataclass
class FuzzConfig:
    trials: int = 200
    """The number of trials per rule."""

    program_size: int = 2
    """The number of statements in each generated command."""

    support_bound: int = 8
    """Instances whose exact runs have a larger support are skipped."""

    rules: Tuple[str, ...] = FUZZ_RULES
    """The rules to fuzz, by script name."""

    seed: int = 0
    """The campaign seed; trial i of a rule uses a generator seeded from it."""

    mutation: Optional[str] = None
    """A deliberately broken grade algebra (`seq-sum` or `comp-min`) to check the fuzzer finds bugs."""

    workers: int = 4
    """The number of trials run concurrently."""

    run: RunConfig = field(default_factory=RunConfig)
    """The run configuration of the exact interpreter and the lifting decisions."""


@dataclass
class Counterexample:
    rule: str
    """The rule whose conclusion failed."""

    trial: int
    """The trial number; together with the campaign seed it reproduces the instance."""

    premises: List[Judgement]
    """The premises, each valid by construction."""

    conclusion: Judgement
    """The conclusion the rule derived."""

    witness: Dict[str, Any]
    """The oracle's verdict: the initial memories and the violating event."""

    def to_record(self) -> Dict[str, Any]:
        return {
            'rule': self.rule,
            'trial': self.trial,
            'premises': [premise.to_record() for premise in self.premises],
            'conclusion': self.conclusion.to_record(),
            'witness': self.witness,
        }


@dataclass
class FuzzSummary:
    counterexamples: List[Counterexample]
    """The instances whose conclusion the oracle rejected."""

    checked: Dict[str, int]
    """The number of instances checked per rule."""

    skipped: Dict[str, int]
    """The number of instances skipped per rule."""

    def to_record(self) -> Dict[str, Any]:
        return {
            'checked': dict(self.checked),
            'skipped': dict(self.skipped),
            'counterexamples': [item.to_record() for item in self.counterexamples],
        }


class _Trial:
    """One fuzzing trial: a seeded generator, its program, the exact-run cache and a proof context."""

    def __init__(self, cfg: FuzzConfig, rule: str, number: int):
        self.cfg: FuzzConfig = cfg
        self.gen: APGenerator = APGenerator(cfg.seed * 1_000_003 + FUZZ_RULES.index(rule) * 10_007 + number)
        self.program = self.gen.program
        self.optable = default_optable()
        grades = MUTATIONS[cfg.mutation] if cfg.mutation else GradeAlgebra()
        self.ctx: ProofContext = ProofContext(self.program, self.optable, cfg.run, Policy.STANDARD, grades)
        self.runs: RunCache = RunCache(self.program, cfg.run, self.optable)
        self.memories = universe(self.program)

    def assertion(self, text: str) -> Assertion:
        return parse_assertion(text, self.program, self.optable, location='<fuzz>')

    def expression(self, text: str) -> Expr:
        return TypeChecker(self.program, self.optable).expr(parse_expression(text, self.optable), '<fuzz>')

    def command(self, avoid: Sequence[str] = (), sampling: bool = True) -> Cmd:
        return self.gen.generate_command(self.cfg.program_size, avoid, sampling)

    def pair(self, avoid: Sequence[str] = ()) -> Tuple[Cmd, Cmd]:
        """:return: Two commands, identical half of the time."""
        left = self.command(avoid)
        return left, (left if self.gen.chance(0.5) else self.command(avoid))

    def gamma(self) -> int:
        return self.gen.choice((1, 2, 3))

    def _bounded(self, command: Cmd) -> None:
        for memory in self.memories:
            if len(self.runs(command, memory).dist) > self.cfg.support_bound:
                raise _Skipped(f'a run exceeds the support bound {self.cfg.support_bound}')

    def tight(self, left: Cmd, right: Cmd, pre: str, post: str, gamma: Any, endo: bool = False) -> Judgement:
        """:return: A valid judgement at the given γ whose δ is the least the oracle allows."""
        self._bounded(left)
        self._bounded(right)
        judgement = Judgement(left, right, self.assertion(pre), self.assertion(post), Grade.from_gamma(gamma), endo)
        delta = required_delta(judgement, self.memories, self.program, self.cfg.run, self.optable, self.runs)
        return replace(judgement, grade=Grade.from_gamma(gamma, delta))


def _at_common_grade(premises: Sequence[Judgement]) -> List[Judgement]:
    """:return: The premises, all weakened to the largest δ among them (they share γ)."""
    delta = max(premise.grade.delta for premise in premises)
    return [replace(premise, grade=Grade.from_gamma(premise.grade.gamma, delta)) for premise in premises]


# Instances: each returns a rule application and premises that are valid by construction.

Instance = Tuple[RuleApp, List[Judgement]]


def _skip_instance(t: _Trial) -> Instance:
    return RuleApp(Rule.SKIP, {'pre': t.assertion(t.gen.generate_assertion())}), []


def _assn_instance(t: _Trial) -> Instance:
    left, right = t.gen.generate_statement(sampling=False), t.gen.generate_statement(sampling=False)
    params = {
        'left': _statement(t, left),
        'right': _statement(t, right),
        'post': t.assertion(t.gen.generate_assertion(atoms=(1, 2))),
    }
    return RuleApp(Rule.ASSN, params), []


def _statement(t: _Trial, source: str) -> Cmd:
    return parse_command(source, t.program, t.optable)


def _rand_instance(t: _Trial) -> Instance:
    source = t.gen.choice(['x <$ unif(0, 2)', 'b <$ bern(1/2)', 'b <$ rr(3/4)(c)', 'c <$ rr(2/3)(c)'])
    command = _statement(t, source)
    params = {'left': command, 'right': command, 'pre': t.assertion(t.gen.generate_assertion())}
    return RuleApp(Rule.RAND, params), []


def _seq_instance(t: _Trial) -> Instance:
    if t.gen.chance(0.5):
        first, second = _statement(t, 'b <$ rr(3/4)(b)'), _statement(t, 'c <$ rr(3/4)(c)')
        return RuleApp(Rule.SEQ), [
            t.tight(first, first, 'b<1> != b<2> && c<1> != c<2>', 'b<1> = b<2> && c<1> != c<2>', 3),
            t.tight(second, second, 'b<1> = b<2> && c<1> != c<2>', 'b<1> = b<2> && c<1> = c<2>', 3),
        ]
    middle = t.gen.generate_assertion(atoms=(1, 2))
    (l1, r1), (l2, r2) = t.pair(), t.pair()
    return RuleApp(Rule.SEQ), [
        t.tight(l1, r1, t.gen.generate_assertion(), middle, t.gamma()),
        t.tight(l2, r2, middle, t.gen.generate_assertion(atoms=(1, 2)), t.gamma()),
    ]


def _cond_instance(t: _Trial) -> Instance:
    guard = t.expression('b')
    pre = f'b<1> = b<2> && {t.gen.generate_assertion(atoms=(1, 1))}'
    post = t.gen.generate_assertion(atoms=(1, 2))
    gamma = t.gamma()
    (tl, tr), (el, er) = t.pair(), t.pair()
    then, orelse = _at_common_grade([t.tight(tl, tr, f'({pre}) && b<1>', post, gamma),
                                     t.tight(el, er, f'({pre}) && !b<1>', post, gamma)])
    params = {'guard_left': guard, 'guard_right': guard, 'pre': t.assertion(pre)}
    return RuleApp(Rule.COND, params), [then, orelse]


def _case_instance(t: _Trial) -> Instance:
    pre, split = t.gen.generate_assertion(), t.gen.generate_atom()
    post = t.gen.generate_assertion(atoms=(1, 2))
    left, right = t.pair()
    gamma = t.gamma()
    premises = _at_common_grade([t.tight(left, right, f'({pre}) && {split}', post, gamma),
                                 t.tight(left, right, f'({pre}) && !({split})', post, gamma)])
    return RuleApp(Rule.CASE, {'pre': t.assertion(pre), 'split': t.assertion(split)}), premises


def _weak_instance(t: _Trial) -> Instance:
    pre, post = t.gen.generate_assertion(), t.gen.generate_assertion(atoms=(1, 2))
    left, right = t.pair()
    premise = t.tight(left, right, pre, post, t.gamma())
    grade = Grade.from_gamma(premise.grade.gamma + t.gen.choice((0, 1)),
                             premise.grade.delta + t.gen.choice((0, Fraction(1, 8))))
    params = {
        'pre': t.assertion(f'({pre}) && {t.gen.generate_atom()}'),
        'post': t.assertion(f'({post}) || {t.gen.generate_atom()}'),
        'grade': grade,
    }
    return RuleApp(Rule.WEAK, params), [premise]


def _op_instance(t: _Trial) -> Instance:
    left, right = t.pair()
    premise = t.tight(left, right, t.gen.generate_assertion(), t.gen.generate_assertion(atoms=(1, 2)), t.gamma())
    return RuleApp(Rule.OP), [premise]


def _comp_instance(t: _Trial) -> Instance:
    post = t.gen.choice(TRANSITIVE)
    c1, c2, c3 = t.command(), t.command(), t.command()
    premises = [t.tight(c1, c2, ALL_EQUAL, post, t.gamma()), t.tight(c2, c3, ALL_EQUAL, post, t.gamma())]
    return RuleApp(Rule.COMP, {'post': t.assertion(post), 'via': t.gen.choice(('left', 'right'))}), premises


def _comp_endo_instance(t: _Trial) -> Instance:
    pre, post = t.gen.choice(TRANSITIVE + (ALL_EQUAL,)), t.gen.choice(TRANSITIVE)
    command = t.command()
    premises = [t.tight(command, command, pre, post, t.gamma(), endo=True),
                t.tight(command, command, pre, post, t.gamma(), endo=True)]
    return RuleApp(Rule.COMP_ENDO, {'post': t.assertion(post)}), premises


def _frame_instance(t: _Trial) -> Instance:
    # Commands that write y send the side condition to the support check.
    left, right = t.pair(avoid=('y', 'c') if t.gen.chance(0.5) else ('c',))
    premise = t.tight(left, right, t.gen.generate_assertion(), t.gen.generate_assertion(atoms=(1, 2)), t.gamma())
    return RuleApp(Rule.FRAME, {'theta': t.assertion(t.gen.generate_assertion(names=('y', 'c'), atoms=(1, 2)))}), \
        [premise]


def _forall_eq_instance(t: _Trial) -> Instance:
    pre = t.gen.generate_assertion()
    left, right = t.pair()
    gamma = t.gamma()
    premises = [t.tight(left, right, pre, f'b<1> = {value} ==> b<2> = {value}', gamma)
                for value in ('false', 'true')]
    return RuleApp(Rule.FORALL_EQ, {'var': 'b', 'values': [False, True]}), premises


def _while_instance(t: _Trial) -> Instance:
    template = 'while x < 2 do {{ x <- min(x + 1, 2); {} }}'
    body = t.gen.generate_source(1, avoid=('x',))
    left = _statement(t, template.format(body))
    right = left if t.gen.chance(0.5) else _statement(t, template.format(t.gen.generate_source(1, avoid=('x',))))
    if not (isinstance(left, While) and isinstance(right, While)):
        raise _Skipped('the loop did not parse as a single command')
    invariant = f'x<1> = x<2> && {t.gen.generate_assertion(names=("y", "b", "c"), atoms=(0, 1))}'
    gamma = t.gamma()
    premises = _at_common_grade([
        t.tight(left.body, right.body, f'({invariant}) && x<1> = {k} && x<1> <= 2', f'({invariant}) && x<1> > {k}',
                gamma) for k in range(2)])
    params = {
        'guard_left': left.guard,
        'guard_right': right.guard,
        'invariant': t.assertion(invariant),
        'variant': t.expression('x'),
        'bound': 2,
    }
    return RuleApp(Rule.WHILE, params), premises


INSTANCES: Dict[str, Callable[[_Trial], Instance]] = {
    'skip': _skip_instance,
    'assn': _assn_instance,
    'rand': _rand_instance,
    'seq': _seq_instance,
    'cond': _cond_instance,
    'case': _case_instance,
    'weak': _weak_instance,
    'op': _op_instance,
    'comp': _comp_instance,
    'comp-endo': _comp_endo_instance,
    'frame': _frame_instance,
    'forall-eq': _forall_eq_instance,
    'while': _while_instance,
}


def run_trial(cfg: FuzzConfig, rule: str, number: int) -> Tuple[str, Optional[Counterexample]]:
    """
    Runs one trial: generates valid premises for the rule, applies it and decides the conclusion.

    :return: The outcome (`checked` or `skipped`) and the counterexample, if the conclusion is invalid.
    """
    try:
        t = _Trial(cfg, rule, number)
        app, premises = INSTANCES[rule](t)
        try:
            conclusion = apply_rule(app, premises, t.ctx)
        except ProofError as error:
            raise _Skipped(str(error))
        for command in (conclusion.left, conclusion.right):
            t._bounded(command)
        result = judgement_valid(conclusion, t.memories, t.program, cfg.run, t.optable, t.runs)
    except (_Skipped, OracleRefusal, LiftingError) as error:
        logger.debug('[%s] trial %d skipped: %s', rule, number, error)
        return 'skipped', None
    if result.valid:
        return 'checked', None
    logger.warning('[%s] trial %d: the conclusion %s is invalid.', rule, number, conclusion.describe())
    return 'checked', Counterexample(rule, number, list(premises), conclusion, result.to_record())


def soundness_fuzz(cfg: Optional[FuzzConfig] = None) -> FuzzSummary:
    """
    Fuzzes the proof rules: for each rule, generates random premises that are valid by construction
    (each at the least δ the oracle allows for its γ), applies the rule and checks the conclusion with the
    exact oracle. With a sound grade algebra no counterexample should be found.

    :param cfg: The campaign configuration.
    :return: The counterexamples, with per-rule counts of checked and skipped instances.
    """
    cfg = cfg or FuzzConfig()
    unknown = [rule for rule in cfg.rules if rule not in INSTANCES]
    if unknown:
        raise FuzzError(f'Cannot fuzz {unknown}; expected rules among {list(INSTANCES)}.')
    if cfg.mutation is not None and cfg.mutation not in MUTATIONS:
        raise FuzzError(f'Unknown mutation `{cfg.mutation}`; expected one of {list(MUTATIONS)}.')
    if cfg.trials < 0 or cfg.workers < 1:
        raise FuzzError('The number of trials must be nonnegative and the number of workers positive.')

    jobs = [(rule, number) for rule in cfg.rules for number in range(cfg.trials)]
    checked = {rule: 0 for rule in cfg.rules}
    skipped = {rule: 0 for rule in cfg.rules}
    counterexamples: List[Counterexample] = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        outcomes = pool.map(lambda job: run_trial(cfg, *job), jobs)
        for (rule, _), (outcome, counterexample) in zip(jobs, outcomes):
            (checked if outcome == 'checked' else skipped)[rule] += 1
            if counterexample is not None:
                counterexamples.append(counterexample)
    logger.info('Fuzzed %d rules: %d instances checked, %d skipped, %d counterexamples.', len(cfg.rules),
                sum(checked.values()), sum(skipped.values()), len(counterexamples))
    return FuzzSummary(counterexamples, checked, skipped)
