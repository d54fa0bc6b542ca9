from .assertion import Assertion, conj, conjuncts, negate, opposite, assertion_names, parse_assertion, fold
from .entailment import Assumed, Policy
from .judgement import Judgement
from .oracle import OracleResult, OracleRefusal, judgement_valid, universe
from .rules import Rule, RuleApp, ProofContext, ProofError, GradeMismatch, NeedContext, SideCondition, \
    GradeAlgebra, apply_rule, loop_premise
from .script import Text, ProofNode, ProofScript, to_grade
from ..aputils import format_scalar
from ..config import RunConfig
from ..grade import Grade, grade_leq
from ..lang.optable import OpTable, program_optable
from ..lang.parser import parse_expression, parse_command
from ..lang.syntax import Cmd, Expr, If, While, Program, seq, flatten_seq, same_command, written_vars
from ..lang.typecheck import TypeChecker, PWhileTypeError
from ..lang.lexer import PWhileSyntaxError
from ..mechanisms import Certificate
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

logger = logging.getLogger(__name__)

ASSERTION_PARAMS = ('pre', 'post', 'invariant', 'split', 'theta')
GRADE_PARAMS = ('grade', 'claim')
WRAPPERS = ('weak', 'frame', 'case', 'forall-eq', 'comp-endo')


@dataclass
class Report:
    judgement: Judgement
    """The derived judgement, at the grade the rules compute."""

    claimed: Grade
    """The grade the goal claims; the computed grade is below it."""

    conditions: List[SideCondition]
    """Every discharged side condition with its verdict."""

    certificates: List[Tuple[str, Certificate]]
    """The mechanism certificates the derivation used, with the nodes using them."""

    params: Dict[str, Any]
    policy: str
    seed: int
    oracle: Optional[OracleResult] = None

    @property
    def assumed(self) -> List[SideCondition]:
        return [condition for condition in self.conditions if isinstance(condition.verdict, Assumed)]

    @property
    def accepted(self) -> bool:
        return self.oracle is None or self.oracle.valid

    def to_record(self) -> Dict[str, Any]:
        grade = self.judgement.grade
        record: Dict[str, Any] = {
            'accepted': self.accepted,
            'judgement': self.judgement.to_record(),
            'grade': {'gamma': float(grade.gamma), 'delta': format_scalar(grade.delta),
                      'eps': format_scalar(grade.eps)},
            'claimed': self.claimed.to_record(),
            'params': {name: format_scalar(value) for name, value in self.params.items()},
            'policy': self.policy,
            'seed': self.seed,
            'side_conditions': [condition.to_record() for condition in self.conditions],
            'assumed': [condition.condition for condition in self.assumed],
            'certificates': [dict(certificate.to_record(), location=location)
                             for location, certificate in self.certificates],
        }
        if self.oracle is not None:
            record['oracle'] = self.oracle.to_record()
        return record

    def describe(self) -> str:
        grade = self.judgement.grade
        lines = [f'Proof accepted: {self.judgement.describe()}' if self.accepted else
                 f'Proof rejected by the oracle: {self.judgement.describe()}',
                 f'  grade (gamma, delta) = ({float(grade.gamma):.6g}, {format_scalar(grade.delta)}), '
                 f'(eps, delta) = ({format_scalar(grade.eps)}, {format_scalar(grade.delta)})',
                 f'  claimed {self.claimed}; policy {self.policy}; seed {self.seed}',
                 f'  {len(self.conditions)} side conditions discharged']
        methods: Dict[str, int] = {}
        for condition in self.conditions:
            name = type(condition.verdict).__name__
            methods[name] = methods.get(name, 0) + 1
        for name, count in sorted(methods.items()):
            lines.append(f'    {name}: {count}')
        for condition in self.assumed:
            lines.append(f'  ASSUMED at {condition.location}: {condition.condition}')
        seen = set()
        for location, certificate in self.certificates:
            key = id(certificate)
            if key not in seen:
                seen.add(key)
                lines.append(f'  certificate {certificate.mechanism} r={certificate.radius}: {certificate.status}')
        if self.oracle is not None:
            lines.append(f'  oracle: {"valid" if self.oracle.valid else "INVALID"} over {self.oracle.pairs} pairs')
        return '\n'.join(lines)


class ProofChecker:
    """
    Checks an expanded proof tree against a pair of commands. The tree is walked top-down: every node
    receives the commands it relates and, when the surrounding proof fixes them, its expected pre- and
    postcondition. Rules build their conclusions bottom-up through apply_rule.
    """

    def __init__(self, ctx: ProofContext):
        self.ctx: ProofContext = ctx

    @property
    def program(self) -> Program:
        return self.ctx.program

    # Parameters:

    def assertion(self, text: Any, location: str) -> Assertion:
        if not isinstance(text, Text):
            raise ProofError(f'Expected an assertion string, found {text!r}.', location)
        try:
            return parse_assertion(text.value, self.program, self.ctx.optable, text.constants(), text.location)
        except (PWhileSyntaxError, PWhileTypeError) as error:
            raise ProofError(str(error), location)

    def expression(self, text: Any, location: str) -> Expr:
        if not isinstance(text, Text):
            raise ProofError(f'Expected an expression string, found {text!r}.', location)
        try:
            parsed = parse_expression(text.value, self.ctx.optable, source=text.location)
            parsed = fold(parsed, text.constants(), optable=self.ctx.optable)
            return TypeChecker(self.program, self.ctx.optable).expr(parsed, location)
        except (PWhileSyntaxError, PWhileTypeError) as error:
            raise ProofError(str(error), location)

    def command(self, text: Any, location: str) -> Cmd:
        if not isinstance(text, Text):
            raise ProofError(f'Expected a command string, found {text!r}.', location)
        try:
            return parse_command(text.value, self.program, self.ctx.optable)
        except (PWhileSyntaxError, PWhileTypeError) as error:
            raise ProofError(str(error), location)

    def resolve(self, node: ProofNode) -> Dict[str, Any]:
        """:return: The node parameters with assertions, expressions, commands and grades parsed."""
        params: Dict[str, Any] = {}
        for name, value in node.params.items():
            if name in ASSERTION_PARAMS:
                params[name] = self.assertion(value, node.location)
            elif name == 'variant':
                params[name] = self.expression(value, node.location)
            elif name == 'middle':
                params[name] = self.command(value, node.location)
            elif name in GRADE_PARAMS:
                params[name] = self._grade(value, node.location)
            elif name == 'grades':
                params[name] = self._grade(value, node.location) if isinstance(value, (Grade, tuple)) else \
                    [self._grade(item, node.location) for item in value]
            elif isinstance(value, Text):
                params[name] = value.value
            else:
                params[name] = value
        return params

    @staticmethod
    def _grade(value: Any, location: str) -> Grade:
        try:
            return to_grade(value)
        except ValueError as error:
            raise ProofError(str(error), location)

    # Command splitting:

    def width(self, node: ProofNode) -> Tuple[int, int]:
        """:return: The number of statements a node relates on each side of a sequence."""
        given = node.params.get('width')
        if given is not None:
            return (given, given) if isinstance(given, int) else tuple(given)
        if node.rule == 'seq':
            widths = [self.width(child) for child in node.children]
            return sum(w[0] for w in widths), sum(w[1] for w in widths)
        if node.rule in WRAPPERS and node.children:
            return self.width(node.children[0])
        if node.rule == 'op' and node.children:
            first, second = self.width(node.children[0])
            return second, first
        if node.rule == 'comp' and len(node.children) == 2:
            return self.width(node.children[0])[0], self.width(node.children[1])[1]
        return 1, 1

    # Checking:

    def check(self, node: ProofNode, left: Cmd, right: Cmd, pre: Optional[Assertion],
              post: Optional[Assertion]) -> Judgement:
        """
        Checks a node against the commands it relates.

        :param node: The proof node.
        :param left: The first command.
        :param right: The second command.
        :param pre: The precondition fixed by the context, if any.
        :param post: The postcondition fixed by the context, if any.
        :return: The node's judgement, weakened to the expected pre- and postcondition.
        """
        try:
            rule = Rule.named(node.rule)
        except ProofError as error:
            raise ProofError(str(error), node.location)
        params = self.resolve(node)
        handler = getattr(self, f'_{rule.name.lower()}', self._leaf)
        own_pre, own_post = params.get('pre', pre), params.get('post', post)
        judgement = handler(rule, node, params, left, right, own_pre, own_post)
        if not (same_command(judgement.left, left) and same_command(judgement.right, right)):
            raise ProofError(f'[{rule.script_name}] relates other commands than the ones at this position.',
                             node.location)
        judgement = self._fit(judgement, node, params, own_pre, own_post)
        if own_pre is not pre or own_post is not post:
            judgement = self._fit(judgement, node, params, pre, post)
        claim = params.get('claim')
        if claim is not None and not grade_leq(judgement.grade, claim):
            raise GradeMismatch(claim, judgement.grade, node.location)
        return judgement

    def _apply(self, rule: Rule, node: ProofNode, params: Dict[str, Any], premises: Sequence[Judgement]) -> Judgement:
        return apply_rule(RuleApp(rule, params, node.location), premises, self.ctx)

    def _fit(self, judgement: Judgement, node: ProofNode, params: Dict[str, Any], pre: Optional[Assertion],
             post: Optional[Assertion]) -> Judgement:
        """Weakens a judgement to the expected pre- and postcondition."""
        if (pre is None or pre == judgement.pre) and (post is None or post == judgement.post):
            return judgement
        weak = {'pre': judgement.pre if pre is None else pre, 'post': judgement.post if post is None else post,
                'assume': params.get('assume', False)}
        return apply_rule(RuleApp(Rule.WEAK, weak, f'{node.location} (weakening)'), [judgement], self.ctx)

    def _children(self, node: ProofNode, count: Optional[int] = None) -> List[ProofNode]:
        if count is not None and len(node.children) != count:
            raise ProofError(f'[{node.rule}] expects {count} premises, found {len(node.children)}.', node.location)
        return node.children

    def _leaf(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
              pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        self._children(node, 0)
        merged = dict(params, left=left, right=right)
        if pre is not None:
            merged['pre'] = pre
        if post is not None:
            merged['post'] = post
        return self._apply(rule, node, merged, [])

    def _seq(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
             pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        children = self._children(node)
        if not children:
            raise ProofError('[seq] needs at least one premise.', node.location)
        lefts, rights = flatten_seq(left), flatten_seq(right)
        slices: List[Tuple[Cmd, Cmd]] = []
        i = j = 0
        for index, child in enumerate(children):
            if index == len(children) - 1:
                a, b = len(lefts) - i, len(rights) - j
            else:
                a, b = self.width(child)
            if a < 0 or b < 0 or i + a > len(lefts) or j + b > len(rights):
                raise ProofError('[seq] the premises cover more statements than the commands hold.', node.location)
            slices.append((seq(*lefts[i:i + a]), seq(*rights[j:j + b])))
            i, j = i + a, j + b

        judgements: List[Optional[Judgement]] = [None] * len(children)
        current = pre
        for index, child in enumerate(children):
            last = index == len(children) - 1
            try:
                judgements[index] = self.check(child, *slices[index], current, post if last else None)
            except NeedContext as error:
                if error.missing != 'post' or last:
                    raise
                following = post
                for back in range(len(children) - 1, index, -1):
                    judgements[back] = self.check(children[back], *slices[back], None, following)
                    following = judgements[back].pre
                judgements[index] = self.check(child, *slices[index], current, following)
                break
            current = judgements[index].post

        result = judgements[0]
        for judgement in judgements[1:]:
            result = self._apply(rule, node, {}, [result, judgement])
        return result

    def _guarded(self, command: Cmd, kind: type, node: ProofNode) -> Any:
        if not isinstance(command, kind):
            raise ProofError(f'[{node.rule}] expects {kind.__name__.lower()} here, found {type(command).__name__}.',
                             node.location)
        return command

    def _required_pre(self, node: ProofNode, pre: Optional[Assertion]) -> Assertion:
        if pre is None:
            raise NeedContext('pre', node.location)
        return pre

    def _cond(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
              pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        then_node, else_node = self._children(node, 2)
        first, second = self._guarded(left, If, node), self._guarded(right, If, node)
        pre = self._required_pre(node, pre)
        guard = self.ctx.tag(first.guard, 1)
        then = self.check(then_node, first.then, second.then, conj(pre, guard), post)
        orelse = self.check(else_node, first.orelse, second.orelse, conj(pre, negate(guard)), post)
        merged = dict(params, guard_left=first.guard, guard_right=second.guard, pre=pre)
        if post is not None:
            merged['post'] = post
        return self._apply(rule, node, merged, [then, orelse])

    def _one_sided(self, side: int, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
                   pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        then_node, else_node = self._children(node, 2)
        branching = self._guarded(left if side == 1 else right, If, node)
        pre = self._required_pre(node, pre)
        guard = self.ctx.tag(branching.guard, side)
        if side == 1:
            pairs = ((branching.then, right), (branching.orelse, right))
        else:
            pairs = ((left, branching.then), (left, branching.orelse))
        then = self.check(then_node, *pairs[0], conj(pre, guard), post)
        orelse = self.check(else_node, *pairs[1], conj(pre, negate(guard)), post)
        merged = dict(params, guard=branching.guard, pre=pre)
        if post is not None:
            merged['post'] = post
        return self._apply(rule, node, merged, [then, orelse])

    def _cond_l(self, *args) -> Judgement:
        return self._one_sided(1, *args)

    def _cond_r(self, *args) -> Judgement:
        return self._one_sided(2, *args)

    def _while(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
               pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        first, second = self._guarded(left, While, node), self._guarded(right, While, node)
        for name in ('invariant', 'variant', 'bound'):
            if name not in params:
                raise ProofError(f'[while] needs `{name}`.', node.location)
        bound = params['bound']
        children = self._children(node, bound)
        premises = []
        for k, child in enumerate(children):
            entry, leaving = loop_premise(self.ctx, params['invariant'], params['variant'], bound, k, node.location)
            premises.append(self.check(child, first.body, second.body, entry, leaving))
        merged = dict(params, guard_left=first.guard, guard_right=second.guard, left=first, right=second)
        merged.pop('pre', None)
        merged.pop('post', None)
        return self._apply(rule, node, merged, premises)

    def _case(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
              pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        first_node, second_node = self._children(node, 2)
        pre = self._required_pre(node, pre)
        if 'split' not in params:
            raise ProofError('[case] needs `split`.', node.location)
        split = params['split']
        first = self.check(first_node, left, right, conj(pre, split), post)
        second = self.check(second_node, left, right, conj(pre, negate(split)), post)
        merged = dict(params, pre=pre)
        if post is not None:
            merged['post'] = post
        return self._apply(rule, node, merged, [first, second])

    def _weak(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
              pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        (child,) = self._children(node, 1)
        try:
            premise = self.check(child, left, right, pre, None)
        except NeedContext as error:
            if error.missing != 'post' or post is None:
                raise
            premise = self.check(child, left, right, pre, post)
        merged = dict(params)
        if pre is not None:
            merged['pre'] = pre
        if post is not None:
            merged['post'] = post
        return self._apply(rule, node, merged, [premise])

    def _op(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
            pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        (child,) = self._children(node, 1)
        premise = self.check(child, right, left, None if pre is None else opposite(pre),
                             None if post is None else opposite(post))
        return self._apply(rule, node, params, [premise])

    def _frame(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
               pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        (child,) = self._children(node, 1)
        theta = params.get('theta')
        if theta is None:
            touched = written_vars(left) | written_vars(right)
            pre = self._required_pre(node, pre)
            theta = conj(*[part for part in conjuncts(pre) if not (assertion_names(part) & touched)])
        framed = set(conjuncts(theta))

        def without(a: Optional[Assertion]) -> Optional[Assertion]:
            return None if a is None else conj(*[part for part in conjuncts(a) if part not in framed])

        premise = self.check(child, left, right, without(pre), without(post))
        return self._apply(rule, node, dict(params, theta=theta), [premise])

    def _composition(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
                     pre: Optional[Assertion], post: Optional[Assertion], endo: bool) -> Judgement:
        first_node, second_node = self._children(node, 2)
        if endo:
            middle = left
        elif 'middle' in params:
            middle = params['middle']
        else:
            raise ProofError('[comp] needs the `middle` command.', node.location)
        first = self.check(first_node, left, middle, None, None)
        second = self.check(second_node, middle, right, None, None)
        merged = dict(params)
        if pre is not None:
            merged['pre'] = pre
        if post is not None:
            merged['post'] = post
        return self._apply(rule, node, merged, [first, second])

    def _comp(self, *args) -> Judgement:
        return self._composition(*args, endo=False)

    def _comp_endo(self, *args) -> Judgement:
        return self._composition(*args, endo=True)

    def _forall_eq(self, rule: Rule, node: ProofNode, params: Dict[str, Any], left: Cmd, right: Cmd,
                   pre: Optional[Assertion], post: Optional[Assertion]) -> Judgement:
        premises = [self.check(child, left, right, pre, None) for child in self._children(node)]
        merged = dict(params)
        if pre is not None:
            merged['pre'] = pre
        return self._apply(rule, node, merged, premises)


def check_proof(script: ProofScript, config: Optional[RunConfig] = None, policy: Optional[Policy] = None,
                optable: Optional[OpTable] = None, grades: Optional[GradeAlgebra] = None,
                oracle: bool = False, ranges: Optional[Dict[str, Sequence[Any]]] = None) -> Report:
    """
    Checks a proof script: derives the judgement of its proof tree, compares it with the goal and
    reports every side-condition verdict and certificate.

    :param script: The loaded script.
    :param config: The run configuration (seed, policy and entailment budgets).
    :param policy: The side-condition policy; the configured one when absent.
    :param optable: The operation table.
    :param grades: Replacement grade operations (for mutation testing).
    :param oracle: Whether to validate the final judgement with the finite-support oracle.
    :param ranges: Value lists for variables without a finite type, for the oracle.
    :return: The report.
    :raises ProofError: When a rule application fails; the message names the script node.
    """
    config = config or RunConfig()
    program = script.program
    optable = program_optable(program, optable)
    ctx = ProofContext(program, optable, config, policy, grades)
    checker = ProofChecker(ctx)
    goal = script.goal
    location = goal.pre.location
    left = checker.command(goal.left, location) if goal.left is not None else program.body
    right = checker.command(goal.right, location) if goal.right is not None else program.body
    pre, post = checker.assertion(goal.pre, location), checker.assertion(goal.post, location)

    judgement = checker.check(script.proof, left, right, pre, post)
    if not grade_leq(judgement.grade, goal.grade):
        raise GradeMismatch(goal.grade, judgement.grade, location)
    logger.info('Checked %s: %s', script.source, judgement.grade)

    report = Report(judgement, goal.grade, list(ctx.conditions), list(ctx.used_certificates), dict(script.params),
                    ctx.policy.name.lower(), config.seed)
    if oracle:
        try:
            report.oracle = judgement_valid(judgement, universe(program, ranges), program, config, optable)
        except OracleRefusal as error:
            logger.warning('The oracle cannot decide %s: %s', script.source, error)
    return report
