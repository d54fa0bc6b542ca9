from .assertion import Assertion, TRUE, conj, disj, negate, implies, conjuncts, compare, numeric_lit, substitute, \
    opposite, rename_sides, diagonal, tag_expr, fold, tagged_vars, assertion_names, is_eq_shaped, \
    is_discrete_carried, print_assertion, holds, AssertionShapeError
from .entailment import Entailment, Policy, Verdict, Verified, Refuted, Assumed
from .judgement import Judgement
from .oracle import OracleRefusal, RunCache, universe
from ..aputils import to_fraction
from ..config import RunConfig
from ..grade import Grade, grade_seq, grade_comp, grade_leq
from ..lang.optable import OpTable, program_optable
from ..lang.syntax import Ty, REAL, Var, SVar, Lit, Op, Expr, DistExpr, Skip, Assign, Sample, If, While, \
    Cmd, Program, seq, same_command, written_vars, free_vars
from ..mechanisms import Certificate, MechanismError, certify_named, certify_table
from ..semantics.evaluate import EvaluationError, evaluate, build_mechanism
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging

logger = logging.getLogger(__name__)


class ProofError(Exception):
    """An exception raised when a proof step is malformed or does not establish its conclusion. The
    location names the proof-script node."""

    def __init__(self, message: str, location: str = '<proof>'):
        self.location: str = location
        super().__init__(f'{location}: {message}')


class SideConditionFailed(ProofError):
    """An exception raised when a side condition of a rule is refuted or lacks the evidence the policy needs."""

    def __init__(self, rule: str, condition: str, verdict: Optional[Verdict], location: str = '<proof>'):
        self.rule: str = rule
        self.condition: str = condition
        self.verdict: Optional[Verdict] = verdict
        reason = type(verdict).__name__.lower() if verdict is not None else 'violated'
        super().__init__(f'[{rule}] the side condition `{condition}` is not established ({reason}).', location)


class GradeMismatch(ProofError):
    """An exception raised when a script claims a grade below the one its premises establish."""

    def __init__(self, claimed: Grade, computed: Grade, location: str = '<proof>'):
        self.claimed: Grade = claimed
        self.computed: Grade = computed
        super().__init__(f'The claimed grade {claimed} is below the computed grade {computed}.', location)


class MeasurabilityRestriction(ProofError):
    """An exception raised when [comp] is applied to a postcondition that is neither discrete-carried nor
    Eq-shaped."""
    pass


class NeedContext(ProofError):
    """An exception raised when a rule needs an assertion that neither the script nor the surrounding
    proof supplies."""

    def __init__(self, missing: str, location: str = '<proof>'):
        self.missing: str = missing
        super().__init__(f'The rule needs its {missing}; give it in the script or from the context.', location)


@dataclass
class SideCondition:
    rule: str
    """The rule that raised the condition."""

    condition: str
    """The implication, as text."""

    verdict: Verdict
    """How it was discharged."""

    accepted: bool
    """Whether the policy accepted the verdict."""

    location: str
    """The proof-script node."""

    def to_record(self) -> Dict[str, Any]:
        return {'rule': self.rule, 'condition': self.condition, 'location': self.location,
                'accepted': self.accepted, **self.verdict.to_record()}


@dataclass
class GradeAlgebra:
    """The grade operations the rules compose with."""

    seq: Callable[[Grade, Grade], Grade] = grade_seq
    comp: Callable[[Grade, Grade], Grade] = grade_comp


class ProofContext:
    """The shared state of a proof check: declarations, the entailment engine and its policy, the
    mechanism certificates built so far and the log of discharged side conditions."""

    def __init__(self, program: Program, optable: Optional[OpTable] = None, config: Optional[RunConfig] = None,
                 policy: Optional[Policy] = None, grades: Optional[GradeAlgebra] = None):
        self.program: Program = program
        self.optable: OpTable = program_optable(program, optable)
        self.config: RunConfig = config or RunConfig()
        self.policy: Policy = policy or Policy.named(self.config.policy)
        self.grades: GradeAlgebra = grades or GradeAlgebra()
        self.entailment: Entailment = Entailment(program, self.optable, self.config.entailment, self.config.seed)
        self.conditions: List[SideCondition] = []
        self.certificates: Dict[Any, Certificate] = {}
        self.used_certificates: List[Tuple[str, Certificate]] = []

    @property
    def params(self) -> Dict[str, Any]:
        return self.program.param_values()

    def fold(self, a: Assertion) -> Assertion:
        types = {name: param.ty for name, param in self.program.params.items()}
        return fold(a, self.params, types, self.optable)

    def tag(self, expr: Expr, side: int) -> Expr:
        """:return: A program expression read in one memory, with parameters folded."""
        return self.fold(tag_expr(expr, side, self.params))

    def value(self, expr: Any) -> Any:
        if not isinstance(expr, (Var, SVar, Lit, Op)):
            return expr
        try:
            return evaluate(expr, {}, self.params, self.optable)
        except EvaluationError as error:
            raise ProofError(f'The expression {expr!r} is not constant: {error}')

    def type_of(self, name: str) -> Ty:
        ty = self.program.ctx.get(name)
        if ty is None:
            raise ProofError(f'The variable `{name}` is not declared.')
        return ty

    def discharge(self, rule: str, hypothesis: Assertion, goal: Assertion, app: 'RuleApp') -> Verdict:
        """
        Discharges the side condition hypothesis ⇒ goal, recording the verdict.

        :raises SideConditionFailed: When the policy does not accept the verdict.
        """
        if goal == TRUE or hypothesis == goal:
            return Verified('syntactic')
        if app.params.get('assume'):
            verdict: Verdict = Assumed(f'assumed at {app.location}')
        else:
            verdict = self.entailment.entails(hypothesis, goal)
        condition = f'{print_assertion(hypothesis)} ==> {print_assertion(goal)}'
        accepted = self.policy(verdict)
        self.conditions.append(SideCondition(rule, condition, verdict, accepted, app.location))
        logger.debug('[%s] %s: %s', rule, condition, verdict)
        if not accepted:
            raise SideConditionFailed(rule, condition, verdict, app.location)
        return verdict

    def certificate(self, dist: DistExpr, app: 'RuleApp') -> Tuple[Grade, Any]:
        """
        Finds the certificate of a distribution: the script's certificate handle if the node names one,
        otherwise one built from the mechanism's closed form.

        :return: The certified grade and the adjacency radius (None when every input pair is covered).
        """
        given: Optional[Certificate] = app.params.get('certificate')
        radius = app.params.get('r', 1)
        if given is not None:
            self.used_certificates.append((app.location, given))
            return given.grade, given.radius if given.radius is not None else radius
        values = tuple(self.value(param) for param in dist.params)
        if dist.name in ('bern', 'unif'):
            return Grade.identity(), None
        key = (dist.name, values, radius, app.params.get('eps'), app.params.get('delta'), app.params.get('form'))
        if key not in self.certificates:
            try:
                self.certificates[key] = self._build_certificate(dist, values, radius, app)
            except (MechanismError, ValueError, KeyError) as error:
                raise ProofError(f'Cannot certify `{dist.name}`: {error}', app.location)
        certificate = self.certificates[key]
        self.used_certificates.append((app.location, certificate))
        return certificate.grade, (None if dist.name == 'rr' else radius)

    def _build_certificate(self, dist: DistExpr, values: Tuple, radius: Any, app: 'RuleApp') -> Certificate:
        grid = self.config.grid
        if dist.name == 'lap':
            return certify_named('lap', {'sigma': values[0]}, radius, grid)
        if dist.name == 'cauchy':
            return certify_named('cauchy', {'rho': values[0]}, radius, grid)
        if dist.name == 'gauss':
            return certify_named('gauss', {'sigma': values[0], 'eps': app.params['eps'],
                                           'delta': app.params['delta'],
                                           'variant': app.params.get('form', 'standard')}, radius, grid)
        mech = build_mechanism(dist, self.params, self.optable)
        if dist.name == 'expm':
            return certify_named('exp', {'mechanism': mech}, radius, grid)
        if dist.name == 'rr':
            pairs = [(a, b) for a in (False, True) for b in (False, True)]
            return certify_table(mech, Grade.from_gamma(mech.gamma()), pairs)
        raise ProofError(f'No certificate is known for `{dist.name}`; name one with `certificate:`.', app.location)


@dataclass(frozen=True)
class RuleApp:
    rule: 'Rule'
    """The rule applied."""

    params: Dict[str, Any] = field(default_factory=dict)
    """The resolved rule parameters: commands, assertions, grades, certificates and numbers."""

    location: str = '<proof>'
    """The proof-script node, for error messages."""


# Helpers:

def _premises(app: RuleApp, premises: Sequence[Judgement], count: int) -> Sequence[Judgement]:
    if len(premises) != count:
        raise ProofError(f'[{app.rule.script_name}] expects {count} premises, found {len(premises)}.', app.location)
    return premises


def _required(app: RuleApp, name: str) -> Any:
    value = app.params.get(name)
    if value is None:
        raise NeedContext(name, app.location)
    return value


def _implied(ctx: ProofContext, app: RuleApp, hypothesis: Assertion, goal: Assertion) -> None:
    ctx.discharge(app.rule.script_name, hypothesis, goal, app)


def _same_commands(app: RuleApp, premises: Sequence[Judgement]) -> Tuple[Cmd, Cmd]:
    left, right = premises[0].left, premises[0].right
    for premise in premises[1:]:
        if not (same_command(premise.left, left) and same_command(premise.right, right)):
            raise ProofError(f'[{app.rule.script_name}] the premises must relate the same commands.', app.location)
    return left, right


def _common_post(ctx: ProofContext, app: RuleApp, premises: Sequence[Judgement]) -> Assertion:
    post = app.params.get('post')
    if post is None:
        posts = [premise.post for premise in premises]
        if all(item == posts[0] for item in posts):
            return posts[0]
        return disj(*posts)
    for premise in premises:
        _implied(ctx, app, premise.post, post)
    return post


def _shared_grade(app: RuleApp, premises: Sequence[Judgement]) -> Grade:
    """Branching rules take one grade for all branches; unequal branches must be weakened first."""
    grade = premises[0].grade
    for premise in premises[1:]:
        if premise.grade != grade:
            raise ProofError(f'[{app.rule.script_name}] the branches have grades {grade} and {premise.grade}; '
                             f'weaken them to a common grade.', app.location)
    return grade


def _erase(pre: Assertion, cells: Sequence[Tuple[str, int]]) -> List[Assertion]:
    """:return: The conjuncts of the precondition that do not read the given cells."""
    cells = set(cells)
    return [part for part in conjuncts(pre) if not (tagged_vars(part) & cells)]


def _samples(app: RuleApp, kind: Optional[str] = None) -> Tuple[Sample, Sample]:
    left, right = app.params.get('left'), app.params.get('right')
    if not (isinstance(left, Sample) and isinstance(right, Sample)):
        raise ProofError(f'[{app.rule.script_name}] applies to two sampling commands.', app.location)
    if left.dist.name != right.dist.name or left.dist.params != right.dist.params:
        raise ProofError(f'[{app.rule.script_name}] needs the same mechanism on both sides, found '
                         f'`{left.dist.name}` and `{right.dist.name}`.', app.location)
    if kind is not None and left.dist.name != kind:
        raise ProofError(f'[{app.rule.script_name}] applies to `{kind}`, not `{left.dist.name}`.', app.location)
    return left, right


def _distance(left: Expr, right: Expr, shift: Any = 0) -> Expr:
    """:return: |left - right| or |left + shift - right|."""
    first = left if shift == 0 else Op('add', (left, numeric_lit(shift)), REAL)
    return Op('abs', (Op('sub', (first, right), REAL),), REAL)


# Axioms and mechanism rules:

def _skip(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    _premises(app, premises, 0)
    for name in ('left', 'right'):
        if name in app.params and not isinstance(app.params[name], Skip):
            raise ProofError('[skip] applies to `skip` on both sides.', app.location)
    pre = _required(app, 'pre')
    post = app.params.get('post', pre)
    _implied(ctx, app, pre, post)
    return Judgement(Skip(), Skip(), pre, post, Grade.identity())


def _assn(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    _premises(app, premises, 0)
    left, right = app.params.get('left', Skip()), app.params.get('right', Skip())
    post = _required(app, 'post')
    replacements: Dict[Tuple[str, int], Expr] = {}
    for side, command in ((1, left), (2, right)):
        if isinstance(command, Assign):
            replacements[(command.var, side)] = ctx.tag(command.expr, side)
        elif not isinstance(command, Skip):
            raise ProofError('[assn] applies to assignments (or `skip` on one side).', app.location)
    try:
        weakest = ctx.fold(substitute(post, replacements))
    except AssertionShapeError as error:
        raise ProofError(str(error), app.location)
    pre = app.params.get('pre')
    if pre is None:
        pre = weakest
    else:
        _implied(ctx, app, pre, weakest)
    return Judgement(left, right, pre, post, Grade.identity())


def _sampling(kind: Optional[str]) -> Callable[[RuleApp, Sequence[Judgement], ProofContext], Judgement]:
    def handler(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
        _premises(app, premises, 0)
        left, right = _samples(app, kind)
        pre = _required(app, 'pre')
        grade, radius = ctx.certificate(left.dist, app)
        if left.dist.args and radius is not None:
            bound = numeric_lit(to_fraction(radius))
            _implied(ctx, app, pre, compare('le', _distance(ctx.tag(left.dist.args[0], 1),
                                                            ctx.tag(right.dist.args[0], 2)), bound))
        ty = ctx.type_of(left.var)
        post = conj(compare('eq', SVar(left.var, 1, ty), SVar(right.var, 2, ty)),
                    *_erase(pre, [(left.var, 1), (right.var, 2)]))
        return Judgement(left, right, pre, post, grade)
    return handler


def _lapgen(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    _premises(app, premises, 0)
    left, right = _samples(app, 'lap')
    pre = _required(app, 'pre')
    shift = to_fraction(app.params.get('shift', 0))
    radius = to_fraction(app.params.get('r', 1))
    grade, _ = ctx.certificate(left.dist, RuleApp(app.rule, dict(app.params, r=radius), app.location))
    _implied(ctx, app, pre, compare('le', _distance(ctx.tag(left.dist.args[0], 1), ctx.tag(right.dist.args[0], 2),
                                                    shift), numeric_lit(radius)))
    x, y = SVar(left.var, 1, REAL), SVar(right.var, 2, REAL)
    shifted = Op('add', (x, numeric_lit(shift)), REAL) if shift != 0 else x
    post = conj(compare('eq', shifted, y), *_erase(pre, [(left.var, 1), (right.var, 2)]))
    return Judgement(left, right, pre, post, grade)


def _lapnull(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    _premises(app, premises, 0)
    left, right = _samples(app, 'lap')
    pre = _required(app, 'pre')
    e1, e2 = left.dist.args[0], right.dist.args[0]
    if left.var in free_vars(e1, ctx.params) or right.var in free_vars(e2, ctx.params):
        raise ProofError('[lapnull] needs the sampled variables to be fresh for the means.', app.location)
    x, y = SVar(left.var, 1, REAL), SVar(right.var, 2, REAL)
    difference = compare('eq', Op('sub', (x, y), REAL), Op('sub', (ctx.tag(e1, 1), ctx.tag(e2, 2)), REAL))
    post = conj(difference, *_erase(pre, [(left.var, 1), (right.var, 2)]))
    return Judgement(left, right, pre, post, Grade.identity())


# Structural rules:

def _seq(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    first, second = _premises(app, premises, 2)
    _implied(ctx, app, first.post, second.pre)
    return Judgement(seq(first.left, second.left), seq(first.right, second.right), first.pre, second.post,
                     ctx.grades.seq(first.grade, second.grade))


def _cond(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    then, orelse = _premises(app, premises, 2)
    guard_left, guard_right = _required(app, 'guard_left'), _required(app, 'guard_right')
    pre = _required(app, 'pre')
    g1, g2 = ctx.tag(guard_left, 1), ctx.tag(guard_right, 2)
    _implied(ctx, app, pre, compare('eq', g1, g2))
    _implied(ctx, app, conj(pre, g1), then.pre)
    _implied(ctx, app, conj(pre, negate(g1)), orelse.pre)
    post = _common_post(ctx, app, [then, orelse])
    return Judgement(If(guard_left, then.left, orelse.left), If(guard_right, then.right, orelse.right),
                     pre, post, _shared_grade(app, [then, orelse]))


def _cond_one_sided(side: int) -> Callable[[RuleApp, Sequence[Judgement], ProofContext], Judgement]:
    def handler(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
        then, orelse = _premises(app, premises, 2)
        guard = _required(app, 'guard')
        pre = _required(app, 'pre')
        fixed = (then.right, orelse.right) if side == 1 else (then.left, orelse.left)
        if not same_command(*fixed):
            raise ProofError(f'[{app.rule.script_name}] the premises must share the other command.', app.location)
        tagged = ctx.tag(guard, side)
        _implied(ctx, app, conj(pre, tagged), then.pre)
        _implied(ctx, app, conj(pre, negate(tagged)), orelse.pre)
        post = _common_post(ctx, app, [then, orelse])
        if side == 1:
            left, right = If(guard, then.left, orelse.left), then.right
        else:
            left, right = then.left, If(guard, then.right, orelse.right)
        return Judgement(left, right, pre, post, _shared_grade(app, [then, orelse]))
    return handler


def _int_variant(variant: Expr, location: str) -> None:
    if variant.ty is None or not variant.ty.is_intlike():
        raise ProofError(f'[while] the variant `{print_assertion(variant)}` must have type int, not {variant.ty}.', location)


def loop_premise(ctx: ProofContext, invariant: Assertion, variant: Expr, bound: int, k: int,
                 location: str = '<proof>') -> Tuple[Assertion, Assertion]:
    """
    :return: The pre- and postcondition [while] expects of the premise for iteration k.
    :raise ProofError: If the variant is not an integer expression.
    """
    _int_variant(variant, location)
    e1 = ctx.tag(variant, 1)
    entry = conj(invariant, compare('eq', e1, numeric_lit(k)), compare('le', e1, numeric_lit(bound)))
    return entry, conj(invariant, compare('gt', e1, numeric_lit(k)))


def _grade_list(app: RuleApp, bound: int, premises: Sequence[Judgement]) -> List[Grade]:
    listed = app.params.get('grades')
    if listed is None:
        return [premise.grade for premise in premises]
    if isinstance(listed, Grade):
        listed = [listed] * bound
    if len(listed) != bound:
        raise ProofError(f'[while] lists {len(listed)} iteration grades for the bound {bound}.', app.location)
    for premise, grade in zip(premises, listed):
        if not grade_leq(premise.grade, grade):
            raise GradeMismatch(grade, premise.grade, app.location)
    return list(listed)


def _while(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    guard_left, guard_right = _required(app, 'guard_left'), _required(app, 'guard_right')
    invariant, variant = _required(app, 'invariant'), _required(app, 'variant')
    _int_variant(variant, app.location)
    bound = int(_required(app, 'bound'))
    if bound < 0:
        raise ProofError(f'[while] the bound {bound} must be nonnegative.', app.location)
    _premises(app, premises, bound)
    if premises:
        body_left, body_right = _same_commands(app, premises)
    else:
        body_left = _required(app, 'left').body
        body_right = _required(app, 'right').body
    g1, g2 = ctx.tag(guard_left, 1), ctx.tag(guard_right, 2)
    e1 = ctx.tag(variant, 1)
    _implied(ctx, app, invariant, compare('eq', g1, g2))
    _implied(ctx, app, conj(invariant, compare('ge', e1, numeric_lit(bound))), negate(g1))
    for k, premise in enumerate(premises):
        entry, leaving = loop_premise(ctx, invariant, variant, bound, k)
        _implied(ctx, app, entry, premise.pre)
        _implied(ctx, app, premise.post, leaving)
    grade = Grade.identity()
    for item in _grade_list(app, bound, premises):
        grade = ctx.grades.seq(grade, item)
    pre = conj(invariant, g1, compare('ge', e1, numeric_lit(0)))
    post = conj(invariant, negate(g1))
    return Judgement(While(guard_left, body_left), While(guard_right, body_right), pre, post, grade)


def _case(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    first, second = _premises(app, premises, 2)
    split = _required(app, 'split')
    pre = _required(app, 'pre')
    left, right = _same_commands(app, premises)
    _implied(ctx, app, conj(pre, split), first.pre)
    _implied(ctx, app, conj(pre, negate(split)), second.pre)
    return Judgement(left, right, pre, _common_post(ctx, app, premises), _shared_grade(app, premises))


def _weak(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    (premise,) = _premises(app, premises, 1)
    pre = app.params.get('pre', premise.pre)
    post = app.params.get('post', premise.post)
    _implied(ctx, app, pre, premise.pre)
    _implied(ctx, app, premise.post, post)
    grade = app.params.get('grade')
    if grade is None:
        grade = premise.grade
    elif not grade_leq(premise.grade, grade):
        raise GradeMismatch(grade, premise.grade, app.location)
    return Judgement(premise.left, premise.right, pre, post, grade, premise.endo)


def _op(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    (premise,) = _premises(app, premises, 1)
    return Judgement(premise.right, premise.left, opposite(premise.pre), opposite(premise.post), premise.grade)


def _composition(endo: bool) -> Callable[[RuleApp, Sequence[Judgement], ProofContext], Judgement]:
    def handler(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
        first, second = _premises(app, premises, 2)
        name = app.rule.script_name
        if not same_command(first.right, second.left):
            raise ProofError(f'[{name}] the middle commands of the premises differ.', app.location)
        if endo:
            if not (same_command(first.left, first.right) and same_command(second.left, second.right)):
                raise ProofError(f'[{name}] relates a single command with itself.', app.location)
            for premise in (first, second):
                _implied(ctx, app, TRUE, diagonal(premise.post))
        else:
            for premise in (first, second):
                if not (is_discrete_carried(premise.post, ctx.program.ctx) or is_eq_shaped(premise.post)):
                    raise MeasurabilityRestriction(
                        f'[{name}] the postcondition `{print_assertion(premise.post)}` is neither over discrete '
                        f'variables nor a conjunction of equalities.', app.location)
        pre = app.params.get('pre', first.pre)
        post = app.params.get('post')
        if post is None:
            if first.post == second.post and is_eq_shaped(first.post):
                post = first.post
            else:
                raise NeedContext('post', app.location)
        via = app.params.get('via', 'left')
        if via == 'left':
            witness = conj(diagonal(first.pre), second.pre)
        elif via == 'right':
            witness = conj(first.pre, rename_sides(second.pre, {1: 2}))
        else:
            raise ProofError(f'[{name}] `via` must be left or right, not {via!r}.', app.location)
        _implied(ctx, app, pre, witness)
        _implied(ctx, app, conj(first.post, rename_sides(second.post, {1: 2, 2: 3})), rename_sides(post, {2: 3}))
        return Judgement(first.left, second.right, pre, post, ctx.grades.comp(first.grade, second.grade), endo)
    return handler


def _support_verdict(ctx: ProofContext, premise: Judgement, theta: Assertion) -> Optional[Verdict]:
    try:
        memories = universe(ctx.program)
    except OracleRefusal:
        return None
    runs = RunCache(ctx.program, ctx.config, ctx.optable)
    hypothesis = conj(premise.pre, theta)
    for m1 in memories:
        for m2 in memories:
            if not holds(hypothesis, {1: m1, 2: m2}, ctx.params, ctx.optable):
                continue
            try:
                outputs1, outputs2 = runs(premise.left, m1).dist.support(), runs(premise.right, m2).dist.support()
            except OracleRefusal:
                return None
            if not all(holds(theta, {1: o1, 2: o2}, ctx.params, ctx.optable) for o1 in outputs1 for o2 in outputs2):
                return Refuted((m1, m2))
    return Verified('support')


def _support_range(ctx: ProofContext, app: RuleApp, premise: Judgement, theta: Assertion) -> None:
    """
    Decides Range(Θ) over the finite universe of memories: from every pair satisfying the premise's
    precondition and Θ, the product of the two output supports must stay inside Θ.

    :raises SideConditionFailed: When a pair of outputs leaves Θ, or when a variable has no finite domain
        or a run does not end within the unroll budget.
    """
    condition = f'Range({print_assertion(theta)})'
    if app.params.get('assume'):
        verdict: Optional[Verdict] = Assumed(f'assumed at {app.location}')
    else:
        verdict = _support_verdict(ctx, premise, theta)
    if verdict is None:
        raise SideConditionFailed('frame', condition, None, app.location)
    accepted = ctx.policy(verdict)
    ctx.conditions.append(SideCondition('frame', condition, verdict, accepted, app.location))
    logger.debug('[frame] %s: %s', condition, verdict)
    if not accepted:
        raise SideConditionFailed('frame', condition, verdict, app.location)


def _frame(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    (premise,) = _premises(app, premises, 1)
    theta = _required(app, 'theta')
    clash = assertion_names(theta) & (written_vars(premise.left) | written_vars(premise.right))
    if clash:
        _support_range(ctx, app, premise, theta)
    return Judgement(premise.left, premise.right, conj(premise.pre, theta), conj(premise.post, theta),
                     premise.grade)


def _forall_eq(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    name = _required(app, 'var')
    values = list(_required(app, 'values'))
    if not values or len(premises) not in (len(values), len(values) + 1):
        raise ProofError(f'[forall-eq] expects one premise per value ({len(values)}) and an optional coverage '
                         f'premise, found {len(premises)}.', app.location)
    members, coverage = premises[:len(values)], premises[len(values):]
    left, right = _same_commands(app, premises)
    ty = ctx.type_of(name)
    if not ty.is_discrete():
        raise ProofError(f'[forall-eq] needs a discrete variable, `{name}` has type {ty}.', app.location)
    x1, x2 = SVar(name, 1, ty), SVar(name, 2, ty)
    pre = app.params.get('pre', members[0].pre)

    template = members[0].grade
    for value, member in zip(values, members):
        if Grade(member.grade.log_gamma, 0) != Grade(template.log_gamma, 0):
            raise ProofError('[forall-eq] the premises must share gamma.', app.location)
        literal = numeric_lit(value)
        _implied(ctx, app, pre, member.pre)
        _implied(ctx, app, member.post, implies(compare('eq', x1, literal), compare('eq', x2, literal)))

    if coverage:
        (cover,) = coverage
        if cover.grade.delta != 0:
            raise ProofError('[forall-eq] the coverage premise must have delta = 0.', app.location)
        _implied(ctx, app, pre, cover.pre)
        _implied(ctx, app, cover.post, disj(*[compare('eq', x1, numeric_lit(value)) for value in values]))
    elif not (ty.base == 'bool' and {True, False} <= set(values)):
        raise ProofError(f'[forall-eq] the values {values} do not cover the type of `{name}`; add a coverage '
                         f'premise.', app.location)

    delta = sum((member.grade.delta for member in members), Fraction(0))
    grade = Grade(template.log_gamma, delta, exact_gamma=template.exact_gamma)
    return Judgement(left, right, pre, compare('eq', x1, x2), grade)


class Rule(Enum):
    """
    The proof rules. Each value holds the handler building the conclusion from the rule parameters and
    the premises, and the rule's name in proof scripts.
    """

    SKIP = (_skip, 'skip')
    """skip ~ skip : Φ ⇒ Φ at (1, 0)."""

    ASSN = (_assn, 'assn')
    """Assignments (one side may be `skip`); the precondition defaults to the weakest one."""

    RAND = (_sampling(None), 'rand')
    """Sampling from the same mechanism on both sides, graded by the mechanism's certificate."""

    LAP = (_sampling('lap'), 'lap')
    GAUSS = (_sampling('gauss'), 'gauss')
    CAUCHY = (_sampling('cauchy'), 'cauchy')
    EXP = (_sampling('expm'), 'exp')

    LAPGEN = (_lapgen, 'lapgen')
    """Laplace sampling coupled with a shift: x<1> + shift = y<2> at exp(r / σ)."""

    LAPNULL = (_lapnull, 'lapnull')
    """Laplace sampling coupled at no cost: x<1> - y<2> = e1<1> - e2<2>."""

    SEQ = (_seq, 'seq')
    COND = (_cond, 'cond')
    COND_L = (_cond_one_sided(1), 'cond-l')
    """A conditional on the first side only."""

    COND_R = (_cond_one_sided(2), 'cond-r')
    WHILE = (_while, 'while')
    CASE = (_case, 'case')
    WEAK = (_weak, 'weak')
    OP = (_op, 'op')
    COMP = (_composition(False), 'comp')
    COMP_ENDO = (_composition(True), 'comp-endo')
    """Composition of endorelational judgements of one command."""

    FRAME = (_frame, 'frame')
    FORALL_EQ = (_forall_eq, 'forall-eq')

    def __call__(self, *args, **kwargs) -> Judgement:
        return self.value[0](*args, **kwargs)

    @property
    def script_name(self) -> str:
        return self.value[1]

    @staticmethod
    def named(name: str) -> 'Rule':
        for rule in Rule:
            if rule.script_name == name:
                return rule
        raise ProofError(f'Unknown rule `{name}`; expected one of {[rule.script_name for rule in Rule]}.')


ENDO_RULES = (Rule.WEAK, Rule.COMP_ENDO)


def apply_rule(app: RuleApp, premises: Sequence[Judgement], ctx: ProofContext) -> Judgement:
    """
    Applies one rule: checks the premises against the rule's shape, discharges its side conditions and
    computes the conclusion with the rule's grade formula.

    :param app: The rule application.
    :param premises: The premise judgements.
    :param ctx: The proof context.
    :return: The conclusion.
    """
    if any(premise.endo for premise in premises) and app.rule not in ENDO_RULES:
        raise ProofError(f'[{app.rule.script_name}] does not accept endorelational premises.', app.location)
    conclusion = app.rule(app, list(premises), ctx)
    logger.debug('[%s] at %s: %s', app.rule.script_name, app.location, conclusion.grade)
    return conclusion
