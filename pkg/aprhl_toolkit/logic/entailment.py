from .assertion import Assertion, TRUE, FALSE, conj, negate, implies, conjuncts, compare, numeric_lit, \
    tagged_vars, rename_sides, holds, print_assertion
from .linear import Constraint, BudgetExceeded, LE, LT, EQ, infeasible
from ..config import EntailmentConfig
from ..lang.optable import OpTable, SignatureError, UnknownOperation, program_optable
from ..lang.parser import AdjAtom
from ..lang.syntax import Ty, BOOL, INT, REAL, Var, SVar, Lit, Op, Expr, Program, expr_sides
from ..measure import Memory
from ..semantics.evaluate import EvaluationError
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Any, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple, Union
import logging
import numpy as np

logger = logging.getLogger(__name__)

ARITHMETIC = ('add', 'sub', 'mul', 'div', 'neg')
PIECEWISE = ('abs', 'min', 'max', 'ite')
ORDERS = ('eq', 'ne', 'lt', 'le', 'gt', 'ge')
FLIPPED = {'gt': 'lt', 'ge': 'le'}
METHOD_RANK = {'syntactic': 0, 'arithmetic': 1, 'sensitivity': 2}


# Verdicts:

@dataclass(frozen=True)
class Verified:
    method: str = 'syntactic'
    """How the condition was proven: 'syntactic', 'arithmetic', 'sensitivity' or 'support' (exhaustive exact runs)."""

    def to_record(self) -> Dict[str, Any]:
        return {'verdict': 'verified', 'method': self.method}


@dataclass(frozen=True)
class Tested:
    samples: int
    """The number of memory tuples on which the implication was evaluated."""

    exhaustive: bool
    """True if the samples covered the whole (finite) memory space."""

    seed: Optional[int] = None
    """The seed of the random test generator, for non-exhaustive tests."""

    def to_record(self) -> Dict[str, Any]:
        return {'verdict': 'tested', 'samples': self.samples, 'exhaustive': self.exhaustive, 'seed': self.seed}


@dataclass(frozen=True)
class Refuted:
    memories: Tuple[Memory, ...]
    """A counterexample: the memories (by side, starting at 1) satisfying the hypothesis but not the goal."""

    def to_record(self) -> Dict[str, Any]:
        return {'verdict': 'refuted', 'memories': [repr(memory) for memory in self.memories]}


@dataclass(frozen=True)
class Assumed:
    reason: str = 'assumed by the script'

    def to_record(self) -> Dict[str, Any]:
        return {'verdict': 'assumed', 'reason': self.reason}


Verdict = Union[Verified, Tested, Refuted, Assumed]


def _strict(verdict: Verdict) -> bool:
    return isinstance(verdict, Verified)


def _standard(verdict: Verdict) -> bool:
    return isinstance(verdict, Verified) or (isinstance(verdict, Tested) and verdict.exhaustive)


def _permissive(verdict: Verdict) -> bool:
    return not isinstance(verdict, Refuted)


class Policy(Enum):
    """
    The evidence a side condition needs before a rule accepts it.
    """

    STRICT = (_strict,)
    """Only proven implications."""

    STANDARD = (_standard,)
    """Proven implications, or implications evaluated on every memory of a finite space."""

    PERMISSIVE = (_permissive,)
    """Anything that was not refuted, including random testing and script assumptions."""

    def __call__(self, *args, **kwargs) -> bool:
        return self.value[0](*args, **kwargs)

    @staticmethod
    def named(name: str) -> 'Policy':
        try:
            return Policy[name.upper()]
        except KeyError:
            raise ValueError(f'Unknown policy `{name}`; expected strict, standard or permissive.')


# The refutation procedure:

@dataclass
class _Branch:
    constraints: List[Constraint] = field(default_factory=list)
    props: Dict[str, bool] = field(default_factory=dict)
    checked: int = 0

    def copy(self) -> '_Branch':
        return _Branch(list(self.constraints), dict(self.props), self.checked)


class Entailment:
    """
    Decides implications between relational assertions. Each conjunct of the goal is tried syntactically,
    then by refuting hypothesis ∧ ¬goal over linear arithmetic; what remains is evaluated exhaustively over
    a finite memory space or tested on random memories.
    """

    def __init__(self, program: Program, optable: Optional[OpTable] = None,
                 config: Optional[EntailmentConfig] = None, seed: int = 0):
        """
        :param program: The program whose declarations type the assertions.
        :param optable: The operation table.
        :param config: The entailment settings.
        :param seed: The seed of random testing.
        """
        self.program: Program = program
        self.optable: OpTable = program_optable(program, optable)
        self.config: EntailmentConfig = config or EntailmentConfig()
        self.seed: int = seed
        self.params: Dict[str, Any] = program.param_values()

    # Types:

    def type_of(self, node: Any) -> Optional[Ty]:
        if isinstance(node, AdjAtom):
            return BOOL
        if isinstance(node, Lit):
            return node.ty
        if isinstance(node, SVar):
            return node.ty or self.program.ctx.get(node.name)
        if isinstance(node, Var):
            if node.name in self.program.params:
                return self.program.params[node.name].ty
            return node.ty
        if isinstance(node, Op):
            if node.ty is not None:
                return node.ty
            if node.name in ('and', 'or', 'not', 'implies') + ORDERS:
                return BOOL
            args = [self.type_of(arg) for arg in node.args]
            if None in args:
                return None
            try:
                return self.optable.op(node.name).infer(args)
            except (SignatureError, UnknownOperation):
                return None
        return None

    def _numeric(self, node: Any) -> bool:
        ty = self.type_of(node)
        return ty is not None and ty.is_numeric()

    def _integral(self, atom: Hashable) -> bool:
        ty = self.type_of(atom)
        return ty is not None and ty.is_intlike()

    # Linear terms:

    def linearize(self, node: Any) -> Optional[Tuple[Dict[Hashable, Fraction], Fraction]]:
        """:return: (coefficients by atom, constant) for a numeric term; other subterms become atoms."""
        if isinstance(node, Lit):
            if isinstance(node.value, bool) or isinstance(node.value, tuple):
                return None
            return {}, Fraction(node.value)
        if not self._numeric(node):
            return None
        if isinstance(node, Op) and node.name in ARITHMETIC:
            parts = [self.linearize(arg) for arg in node.args]
            if None in parts:
                return {node: Fraction(1)}, Fraction(0)
            if node.name == 'neg':
                return _scale(parts[0], Fraction(-1))
            left, right = parts
            if node.name == 'add':
                return _add(left, right)
            if node.name == 'sub':
                return _add(left, _scale(right, Fraction(-1)))
            if node.name == 'mul':
                if not left[0]:
                    return _scale(right, left[1])
                if not right[0]:
                    return _scale(left, right[1])
            if node.name == 'div' and not right[0] and right[1] != 0:
                return _scale(left, 1 / right[1])
        return {node: Fraction(1)}, Fraction(0)

    def _constraint(self, name: str, left: Any, right: Any) -> Optional[Constraint]:
        lin_left, lin_right = self.linearize(left), self.linearize(right)
        if lin_left is None or lin_right is None:
            return None
        terms, const = _add(lin_left, _scale(lin_right, Fraction(-1)))
        if name == 'le':
            return Constraint.build(terms, const, LE)
        if name == 'lt':
            return Constraint.build(terms, const, LT)
        return Constraint.build(terms, const, EQ)

    # Literals:

    def _piecewise(self, node: Any) -> Optional[Op]:
        """:return: The first abs/min/max/ite subterm in arithmetic position, if any."""
        if isinstance(node, Op):
            if node.name in PIECEWISE and self._numeric(node):
                return node
            if node.name in ARITHMETIC + ORDERS:
                for arg in node.args:
                    found = self._piecewise(arg)
                    if found is not None:
                        return found
        return None

    def _split(self, literal: Op, term: Op) -> Assertion:
        """:return: A disjunction equivalent to the literal with the piecewise term resolved by cases."""
        def replace(node: Any, by: Any) -> Any:
            if node == term:
                return by
            if isinstance(node, Op):
                return Op(node.name, tuple(replace(arg, by) for arg in node.args), node.ty)
            return node

        zero = Lit(0, INT)
        if term.name == 'abs':
            inner = term.args[0]
            cases = [(compare('ge', inner, zero), inner), (compare('lt', inner, zero), Op('neg', (inner,), term.ty))]
        elif term.name in ('min', 'max'):
            first, second = term.args
            order = 'le' if term.name == 'min' else 'ge'
            cases = [(compare(order, first, second), first), (negate(compare(order, first, second)), second)]
        else:
            guard, then, orelse = term.args
            cases = [(guard, then), (negate(guard), orelse)]
        return Op('or', tuple(Op('and', (guard, replace(literal, value)), BOOL) for guard, value in cases), BOOL)

    def _adjacency(self, atom: AdjAtom) -> Optional[Assertion]:
        """:return: Σ |x<a> - x<b>| <= k for scalar variables, None for vectors."""
        first, second = atom.sides
        terms: List[Expr] = []
        for name in atom.names:
            ty = self.program.ctx.get(name)
            if ty is None or not ty.is_numeric():
                return None
            terms.append(Op('abs', (Op('sub', (SVar(name, first, ty), SVar(name, second, ty)), ty),), ty))
        total = terms[0]
        for term in terms[1:]:
            total = Op('add', (total, term), REAL)
        return compare('le', total, numeric_lit(atom.bound))

    @staticmethod
    def _key(node: Any) -> str:
        if isinstance(node, Op) and node.name in ('eq', 'ne'):
            left, right = sorted(print_assertion(arg) for arg in node.args)
            return f'{node.name}({left}, {right})'
        return print_assertion(node)

    # The tableau:

    def _expand(self, node: Any, positive: bool) -> Tuple:
        """
        Classifies one signed formula.

        :return: ('true',) or ('false',) for a truth value, ('all', items) for a conjunction,
            ('any', [items, ...]) for alternatives, ('linear', constraint) or ('prop', key, sign) for a literal.
        """
        if isinstance(node, Lit) and isinstance(node.value, bool):
            return ('true',) if node.value == positive else ('false',)
        if isinstance(node, AdjAtom):
            arithmetic = self._adjacency(node)
            if arithmetic is not None:
                return ('all', [(arithmetic, positive)])
            return ('prop', self._key(node), positive)
        if isinstance(node, Op):
            name = node.name
            if name == 'not':
                return ('all', [(node.args[0], not positive)])
            if name in ('and', 'or'):
                items = [(arg, positive) for arg in node.args]
                if (name == 'and') == positive:
                    return ('all', items)
                return ('any', [[item] for item in items])
            if name == 'implies':
                left, right = node.args
                if positive:
                    return ('any', [[(left, False)], [(right, True)]])
                return ('all', [(left, True), (right, False)])
            if name in ORDERS:
                left, right = node.args
                if name in FLIPPED:
                    return ('all', [(compare(FLIPPED[name], right, left), positive)])
                if name == 'ne':
                    return ('all', [(compare('eq', left, right), not positive)])
                if name == 'eq' and (self.type_of(left) or INT).base == 'bool':
                    if positive:
                        return ('any', [[(left, True), (right, True)], [(left, False), (right, False)]])
                    return ('any', [[(left, True), (right, False)], [(left, False), (right, True)]])
                term = self._piecewise(node)
                if term is not None:
                    return ('all', [(self._split(node, term), positive)])
                if name == 'eq' and not positive and self._numeric(left) and self._numeric(right):
                    return ('any', [[(compare('lt', left, right), True)], [(compare('lt', right, left), True)]])
                if not positive:
                    # ¬(l <= r) is r < l and ¬(l < r) is r <= l:
                    name, left, right = ('lt' if name == 'le' else 'le'), right, left
                constraint = self._constraint(name, left, right)
                if constraint is not None:
                    return ('linear', constraint)
        return ('prop', self._key(node), positive)

    def _consistent(self, branch: _Branch) -> bool:
        if branch.checked == len(branch.constraints):
            return True
        branch.checked = len(branch.constraints)
        return not infeasible(branch.constraints, self._integral, self.config.fm_limit)

    def _closes(self, todo: List[Tuple[Any, bool]], branch: _Branch, budget: List[int]) -> bool:
        """:return: True if every branch of the signed formulas in `todo` is contradictory."""
        deferred: List[List[List[Tuple[Any, bool]]]] = []
        while todo:
            node, positive = todo.pop()
            kind = self._expand(node, positive)
            if kind[0] == 'true':
                continue
            if kind[0] == 'false':
                return True
            if kind[0] == 'all':
                todo.extend(kind[1])
            elif kind[0] == 'any':
                deferred.append(kind[1])
            elif kind[0] == 'prop':
                _, key, sign = kind
                if branch.props.get(key, sign) != sign:
                    return True
                branch.props[key] = sign
            else:
                branch.constraints.append(kind[1])
        if not self._consistent(branch):
            return True
        if not deferred:
            return False
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded('The case split budget is exhausted.')
        alternatives, rest = deferred[0], deferred[1:]
        for alternative in alternatives:
            pending = list(alternative) + [(Op('or', tuple(_items(group) for group in choice), BOOL), True)
                                           for choice in rest]
            if not self._closes(pending, branch.copy(), budget):
                return False
        return True

    def refute(self, hypotheses: Sequence[Assertion], goal: Assertion) -> bool:
        """:return: True if hypotheses ∧ ¬goal is proven contradictory."""
        todo = [(hypothesis, True) for hypothesis in hypotheses] + [(goal, False)]
        try:
            return self._closes(todo, _Branch(), [self.config.fm_limit])
        except BudgetExceeded as error:
            logger.debug('Arithmetic gave up on %s: %s', print_assertion(goal), error)
            return False

    # Sensitivity lemmas:

    def sensitivity_lemmas(self, hypotheses: Sequence[Assertion], goal: Assertion) -> List[Assertion]:
        """
        Instantiates the sensitivity annotations of the operation table: under adj{d} <= k, a term p(.., d, ..)
        read in both memories differs by at most s·k when the other arguments agree.
        """
        adjacency = [h for h in hypotheses if isinstance(h, AdjAtom)]
        if not adjacency:
            return []
        terms: List[Op] = []
        for node in list(hypotheses) + [goal]:
            _collect_sensitive(node, self.optable, terms)
        lemmas: List[Assertion] = []
        for atom in adjacency:
            first, second = atom.sides
            for term in terms:
                if expr_sides(term) != {first}:
                    continue
                mirror = rename_sides(term, {first: second})
                if mirror not in terms:
                    continue
                spec = self.optable.op(term.name)
                for index, factor in spec.sensitivity.items():
                    argument = term.args[index]
                    if not (isinstance(argument, SVar) and argument.name in atom.names):
                        continue
                    agree = [compare('eq', arg, rename_sides(arg, {first: second}))
                             for position, arg in enumerate(term.args) if position != index and expr_sides(arg)]
                    distance = Op('abs', (Op('sub', (term, mirror), term.ty),), term.ty)
                    lemmas.append(implies(conj(*agree), compare('le', distance, numeric_lit(factor * atom.bound))))
        return lemmas

    # Syntactic rules:

    def syntactic(self, hypotheses: Sequence[Assertion], goal: Assertion) -> bool:
        keys = {self._canonical(h) for h in hypotheses}
        if goal == TRUE or FALSE in hypotheses or self._canonical(goal) in keys:
            return True
        if isinstance(goal, Op):
            if goal.name in ('eq', 'le', 'ge') and goal.args[0] == goal.args[1]:
                return True
            if goal.name == 'and':
                return all(self.syntactic(hypotheses, arg) for arg in goal.args)
            if goal.name == 'or':
                return any(self.syntactic(hypotheses, arg) for arg in goal.args)
            if goal.name == 'implies':
                return self.syntactic(list(hypotheses) + conjuncts(goal.args[0]), goal.args[1])
        return False

    def _canonical(self, node: Any) -> str:
        if isinstance(node, Op) and node.name in FLIPPED:
            node = compare(FLIPPED[node.name], node.args[1], node.args[0])
        return self._key(node)

    # Evaluation:

    def _domain(self, name: str) -> Optional[List[Any]]:
        ty = self.program.ctx.get(name)
        if ty is None:
            return None
        if ty.base == 'bool':
            return [False, True]
        if ty.base == 'int' and ty.bounds is not None:
            return list(range(ty.bounds[0], ty.bounds[1] + 1))
        return None

    def _memories(self, assignment: Mapping[Tuple[str, int], Any], sides: Sequence[int]) -> Dict[int, Memory]:
        return {side: Memory((name, value) for (name, s), value in assignment.items() if s == side)
                for side in sides}

    def _falsifies(self, hypothesis: Assertion, goal: Assertion, memories: Mapping[int, Memory]) -> Optional[bool]:
        try:
            if not holds(hypothesis, memories, self.params, self.optable):
                return False
            return not holds(goal, memories, self.params, self.optable)
        except (EvaluationError, ZeroDivisionError, IndexError):
            return None

    def exhaustive(self, hypothesis: Assertion, goal: Assertion) -> Optional[Verdict]:
        """:return: Refuted or an exhaustive Tested verdict, or None when the memory space is not finite and small."""
        cells = sorted(tagged_vars(hypothesis) | tagged_vars(goal))
        domains = [self._domain(name) for name, _ in cells]
        if any(domain is None for domain in domains):
            return None
        size = 1
        for domain in domains:
            size *= len(domain)
        if size > self.config.exhaustive_limit:
            return None
        sides = sorted({side for _, side in cells}) or [1, 2]
        count = 0
        for values in product(*domains):
            memories = self._memories(dict(zip(cells, values)), sides)
            count += 1
            if self._falsifies(hypothesis, goal, memories):
                return Refuted(tuple(memories[side] for side in sides))
        return Tested(count, True)

    def _draw(self, ty: Ty, rng: np.random.Generator) -> Any:
        if ty.base == 'bool':
            return bool(rng.random() < 0.5)
        if ty.base == 'int':
            if ty.bounds is not None:
                return int(rng.integers(ty.bounds[0], ty.bounds[1] + 1))
            box = self.config.int_box
            return int(rng.integers(-box, box + 1))
        box = 8 * self.config.real_box
        if ty.base == 'vec':
            return tuple(Fraction(int(rng.integers(-box, box + 1)), 8) for _ in range(ty.dim))
        return Fraction(int(rng.integers(-box, box + 1)), 8)

    def _perturb(self, ty: Ty, value: Any, rng: np.random.Generator) -> Any:
        if ty.base == 'bool':
            return not value
        if ty.base == 'int':
            moved = value + int(rng.choice([-1, 1]))
            if ty.bounds is not None:
                moved = min(max(moved, ty.bounds[0]), ty.bounds[1])
            return moved
        step = Fraction(int(rng.choice([-8, -4, -1, 1, 4, 8])), 8)
        if ty.base == 'vec':
            position = int(rng.integers(0, ty.dim))
            return tuple(item + step if index == position else item for index, item in enumerate(value))
        return value + step

    @staticmethod
    def _zero(ty: Ty) -> Any:
        if ty.base == 'bool':
            return False
        if ty.base == 'int':
            return 0 if ty.bounds is None else min(max(0, ty.bounds[0]), ty.bounds[1])
        if ty.base == 'vec':
            return tuple(Fraction(0) for _ in range(ty.dim))
        return Fraction(0)

    def random(self, hypothesis: Assertion, goal: Assertion) -> Verdict:
        """:return: Refuted, or Tested on random memories (the all-zero memories first); mirrored cells are
        often drawn equal or close so that relational hypotheses are hit."""
        cells = sorted(tagged_vars(hypothesis) | tagged_vars(goal))
        names = sorted({name for name, _ in cells})
        sides = sorted({side for _, side in cells}) or [1, 2]
        types = {name: self.program.ctx.get(name) or REAL for name in names}
        rng = np.random.Generator(np.random.Philox(key=[self.seed % 2 ** 64, 0]))
        count = 0
        for index in range(self.config.random_samples):
            assignment: Dict[Tuple[str, int], Any] = {}
            for name in names:
                ty = types[name]
                base = self._zero(ty) if index == 0 else self._draw(ty, rng)
                for side in sides:
                    if index == 0:
                        value = base
                    else:
                        roll = rng.random()
                        value = base if roll < 0.5 else (self._perturb(ty, base, rng) if roll < 0.75
                                                         else self._draw(ty, rng))
                    assignment[(name, side)] = value
            memories = self._memories({cell: assignment[cell] for cell in cells}, sides)
            verdict = self._falsifies(hypothesis, goal, memories)
            if verdict is None:
                continue
            count += 1
            if verdict:
                return Refuted(tuple(memories[side] for side in sides))
        return Tested(count, False, self.seed)

    # Entry point:

    def entails(self, hypothesis: Assertion, goal: Assertion, strategy: str = 'auto') -> Verdict:
        """
        Decides hypothesis ⇒ goal.

        :param hypothesis: The hypothesis assertion.
        :param goal: The goal assertion.
        :param strategy: 'auto' (every stage), 'syntactic', 'arithmetic', 'exhaustive' or 'random'.
        :return: The verdict.
        """
        if strategy not in ('auto', 'syntactic', 'arithmetic', 'exhaustive', 'random'):
            raise ValueError(f'Unknown entailment strategy `{strategy}`.')
        hypotheses = conjuncts(hypothesis)
        open_goals: List[Assertion] = []
        methods: List[str] = []
        lemmas: Optional[List[Assertion]] = None
        for part in conjuncts(goal):
            if strategy in ('auto', 'syntactic') and self.syntactic(hypotheses, part):
                methods.append('syntactic')
                continue
            if strategy in ('auto', 'arithmetic'):
                if self.refute(hypotheses, part):
                    methods.append('arithmetic')
                    continue
                if lemmas is None:
                    lemmas = self.sensitivity_lemmas(hypotheses, goal)
                if lemmas and self.refute(hypotheses + lemmas, part):
                    methods.append('sensitivity')
                    continue
            open_goals.append(part)
        if not open_goals:
            method = max(methods, key=METHOD_RANK.get) if methods else 'syntactic'
            logger.debug('Verified %s by %s', print_assertion(goal), method)
            return Verified(method)

        remaining = conj(*open_goals)
        if strategy in ('auto', 'exhaustive'):
            verdict = self.exhaustive(hypothesis, remaining)
            if verdict is not None:
                return verdict
        if strategy in ('auto', 'random'):
            return self.random(hypothesis, remaining)
        return Tested(0, False)


def _items(group: List[Tuple[Any, bool]]) -> Assertion:
    return conj(*[node if positive else negate(node) for node, positive in group])


def _scale(linear: Tuple[Dict[Hashable, Fraction], Fraction], factor: Fraction) -> Tuple[Dict, Fraction]:
    terms, const = linear
    return {atom: value * factor for atom, value in terms.items()}, const * factor


def _add(left: Tuple[Dict[Hashable, Fraction], Fraction],
         right: Tuple[Dict[Hashable, Fraction], Fraction]) -> Tuple[Dict, Fraction]:
    terms = dict(left[0])
    for atom, value in right[0].items():
        terms[atom] = terms.get(atom, Fraction(0)) + value
    return terms, left[1] + right[1]


def _collect_sensitive(node: Any, optable: OpTable, found: List[Op]) -> None:
    if isinstance(node, Op):
        if optable.has_op(node.name) and optable.op(node.name).sensitivity and node not in found:
            found.append(node)
        for arg in node.args:
            _collect_sensitive(arg, optable, found)


def entails(hypothesis: Assertion, goal: Assertion, program: Program, strategy: str = 'auto',
            optable: Optional[OpTable] = None, config: Optional[EntailmentConfig] = None, seed: int = 0) -> Verdict:
    """
    Decides an implication between assertions over a program's declarations.

    :param hypothesis: The hypothesis.
    :param goal: The goal.
    :param program: The program supplying the typing context and parameters.
    :param strategy: The stages to try (see Entailment.entails).
    :param optable: The operation table.
    :param config: The entailment settings.
    :param seed: The seed of random testing.
    :return: The verdict.
    """
    return Entailment(program, optable, config, seed).entails(hypothesis, goal, strategy)
