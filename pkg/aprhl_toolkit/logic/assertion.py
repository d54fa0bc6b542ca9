from ..aputils import to_fraction
from ..lang.optable import OpTable, UnknownOperation, default_optable, program_optable
from ..lang.parser import AdjAtom, parse_expression
from ..lang.printer import print_expr
from ..lang.syntax import Ty, BOOL, INT, REAL, Var, SVar, Lit, Op, Expr, Program, TypingContext, untag, expr_sides
from ..lang.typecheck import PWhileTypeError, TypeChecker
from ..lifting import PredicatePair, Relation
from ..semantics.evaluate import EvaluationError
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

Assertion = Union[Expr, AdjAtom]

TRUE = Lit(True, BOOL)
FALSE = Lit(False, BOOL)
CONNECTIVES = ('and', 'or', 'not', 'implies')


class AssertionShapeError(Exception):
    """An exception raised when an assertion cannot be built or transformed, for example when an
    expression would be substituted into an adjacency atom."""
    pass


# Builders:

def _flatten(parts: Iterable[Assertion], connective: str) -> List[Assertion]:
    flat: List[Assertion] = []
    for part in parts:
        if isinstance(part, Op) and part.name == connective:
            flat.extend(_flatten(part.args, connective))
        else:
            flat.append(part)
    return flat


def _chain(parts: List[Assertion], connective: str) -> Assertion:
    result = parts[0]
    for part in parts[1:]:
        result = Op(connective, (result, part), BOOL)
    return result


def conj(*parts: Assertion) -> Assertion:
    """:return: The left-nested conjunction of the parts, without duplicates or `true` conjuncts."""
    kept: List[Assertion] = []
    for part in _flatten(parts, 'and'):
        if part == FALSE:
            return FALSE
        if part != TRUE and part not in kept:
            kept.append(part)
    return _chain(kept, 'and') if kept else TRUE


def disj(*parts: Assertion) -> Assertion:
    kept: List[Assertion] = []
    for part in _flatten(parts, 'or'):
        if part == TRUE:
            return TRUE
        if part != FALSE and part not in kept:
            kept.append(part)
    return _chain(kept, 'or') if kept else FALSE


def negate(a: Assertion) -> Assertion:
    if isinstance(a, Lit) and isinstance(a.value, bool):
        return Lit(not a.value, BOOL)
    if isinstance(a, Op) and a.name == 'not':
        return a.args[0]
    return Op('not', (a,), BOOL)


def implies(a: Assertion, b: Assertion) -> Assertion:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return Op('implies', (a, b), BOOL)


def conjuncts(a: Assertion) -> List[Assertion]:
    """:return: The top-level conjuncts of an assertion (none for `true`)."""
    if a == TRUE:
        return []
    return _flatten([a], 'and')


def compare(name: str, left: Expr, right: Expr) -> Op:
    return Op(name, (left, right), BOOL)


def equal_on(name: str, ty: Optional[Ty] = None) -> Op:
    """:return: The assertion x<1> = x<2>."""
    return compare('eq', SVar(name, 1, ty), SVar(name, 2, ty))


def numeric_lit(value: Any) -> Lit:
    if isinstance(value, bool):
        return Lit(value, BOOL)
    if isinstance(value, int):
        return Lit(value, INT)
    value = to_fraction(value)
    if value.denominator == 1:
        return Lit(int(value), INT)
    return Lit(value, REAL)


# Traversals:

def transform(a: Assertion, leaf: Callable[[Any], Any]) -> Assertion:
    """:return: The assertion with every variable, literal and adjacency atom replaced through `leaf`."""
    if isinstance(a, Op):
        return Op(a.name, tuple(transform(arg, leaf) for arg in a.args), a.ty)
    return leaf(a)


def rename_sides(a: Assertion, mapping: Mapping[int, int]) -> Assertion:
    """:return: The assertion reading memory mapping[i] wherever it read memory i."""
    def leaf(node: Any) -> Any:
        if isinstance(node, SVar):
            return SVar(node.name, mapping.get(node.side, node.side), node.ty)
        if isinstance(node, AdjAtom):
            sides = tuple(sorted(mapping.get(side, side) for side in node.sides))
            return AdjAtom(node.names, node.bound, sides)
        return node
    return transform(a, leaf)


def opposite(a: Assertion) -> Assertion:
    """:return: The assertion with the two memories swapped (Φ-opposite)."""
    return rename_sides(a, {1: 2, 2: 1})


def substitute(a: Assertion, replacements: Mapping[Tuple[str, int], Expr]) -> Assertion:
    """
    Replaces tagged variables by tagged expressions, e.g. x<1> by (e)<1> for the weakest precondition
    of an assignment.

    :param a: The assertion.
    :param replacements: (name, side) -> replacing expression.
    :return: The substituted assertion.
    """
    def leaf(node: Any) -> Any:
        if isinstance(node, SVar):
            return replacements.get((node.name, node.side), node)
        if isinstance(node, AdjAtom):
            names = []
            for name in node.names:
                hits = [replacements[(name, side)] for side in node.sides if (name, side) in replacements]
                if any(not (isinstance(hit, SVar) and hit.name == name) for hit in hits):
                    raise AssertionShapeError(f'Cannot substitute into the adjacency atom on `{name}`.')
                names.append(name)
            return AdjAtom(tuple(names), node.bound, node.sides)
        return node
    return transform(a, leaf)


def tag_expr(expr: Expr, side: int, params: Mapping[str, Any] = ()) -> Expr:
    """:return: A program expression read in one memory, with declared parameters left untagged."""
    params = dict(params)
    if isinstance(expr, Var):
        if expr.name in params:
            return expr
        return SVar(expr.name, side, expr.ty)
    if isinstance(expr, Op):
        return Op(expr.name, tuple(tag_expr(arg, side, params) for arg in expr.args), expr.ty)
    return expr


def tagged_vars(a: Assertion) -> Set[Tuple[str, int]]:
    """:return: The (name, side) pairs an assertion reads."""
    found: Set[Tuple[str, int]] = set()

    def leaf(node: Any) -> Any:
        if isinstance(node, SVar):
            found.add((node.name, node.side))
        elif isinstance(node, AdjAtom):
            found.update((name, side) for name in node.names for side in node.sides)
        return node
    transform(a, leaf)
    return found


def assertion_names(a: Assertion) -> Set[str]:
    return {name for name, _ in tagged_vars(a)}


def sides_of(a: Assertion) -> Set[int]:
    return {side for _, side in tagged_vars(a)}


# Folding:

def _literal(value: Any, ty: Optional[Ty]) -> Lit:
    if ty is not None:
        return Lit(value, ty)
    return numeric_lit(value) if not isinstance(value, tuple) else Lit(value, Ty('vec', 'vec', len(value)))


def fold(a: Assertion, params: Mapping[str, Any], types: Mapping[str, Ty] = (),
         optable: Optional[OpTable] = None) -> Assertion:
    """
    Replaces parameters by their values and evaluates every operation whose arguments are all literals,
    simplifying connectives with literal operands.

    :param a: The assertion.
    :param params: Parameter values by name.
    :param types: Parameter types by name (values of unknown type are typed by their Python type).
    :param optable: The operation table.
    :return: The folded assertion.
    """
    optable = optable or default_optable()
    types = dict(types)

    def walk(node: Any) -> Any:
        if isinstance(node, Var):
            if node.name in params:
                return _literal(params[node.name], types.get(node.name, node.ty))
            return node
        if not isinstance(node, Op):
            return node
        args = [walk(arg) for arg in node.args]
        if node.name == 'and':
            return conj(*args)
        if node.name == 'or':
            return disj(*args)
        if node.name == 'not':
            return negate(args[0]) if isinstance(args[0], Lit) else Op('not', (args[0],), BOOL)
        if node.name == 'implies':
            return implies(args[0], args[1])
        if all(isinstance(arg, Lit) for arg in args):
            try:
                value = optable.op(node.name).exact(*[arg.value for arg in args])
            except (ZeroDivisionError, UnknownOperation):
                return Op(node.name, tuple(args), node.ty)
            return _literal(value, node.ty)
        return Op(node.name, tuple(args), node.ty)

    return walk(a)


# Typing:

def check_assertion(a: Assertion, program: Program, optable: Optional[OpTable] = None,
                    location: str = 'assertion') -> Assertion:
    """
    Typechecks a relational assertion: connectives and adjacency atoms are checked here, every other
    atom by the program typechecker in relational mode.

    :param a: The parsed assertion.
    :param program: The program whose declarations type the assertion.
    :param optable: The operation table.
    :param location: The location reported in type errors.
    :return: The annotated assertion.
    """
    checker = TypeChecker(program, optable)

    def walk(node: Any) -> Any:
        if isinstance(node, AdjAtom):
            for name in node.names:
                ty = checker.variable_type(name, location)
                if ty.base not in ('vec', 'int', 'real'):
                    raise PWhileTypeError('adjacency', location,
                                          f'`adj` needs numeric or vector variables, `{name}` has type {ty}.')
            return node
        if isinstance(node, Op) and node.name in CONNECTIVES:
            args = tuple(walk(arg) for arg in node.args)
            for arg in args:
                ty = arg.ty if not isinstance(arg, AdjAtom) else BOOL
                if ty is None or ty.base != 'bool':
                    raise PWhileTypeError('connective', location,
                                          f'`{node.name}` expects assertions, found a value of type {ty}.')
            return Op(node.name, args, BOOL)
        typed = checker.expr(node, location, relational=True)
        if typed.ty.base != 'bool':
            raise PWhileTypeError('assertion', location, f'An assertion must be bool, found {typed.ty}.')
        return typed

    return walk(a)


def _untag_constants(a: Assertion, constants: Iterable[str]) -> Assertion:
    constants = set(constants)

    def leaf(node: Any) -> Any:
        if isinstance(node, SVar) and node.name in constants:
            return Var(node.name)
        return node
    return transform(a, leaf)


def parse_assertion(text: str, program: Program, optable: Optional[OpTable] = None,
                    scope: Optional[Mapping[str, Any]] = None, location: str = 'assertion') -> Assertion:
    """
    Parses, typechecks and folds an assertion. Untagged names refer to program parameters or to the
    bindings of `scope` (script constants such as a loop index).

    :param text: The assertion text, e.g. "adj{d} <= 1 ==> r<1> = r<2>".
    :param program: The program whose declarations type the assertion.
    :param optable: The operation table.
    :param scope: Extra constants by name; they shadow program parameters.
    :param location: The location reported in errors.
    :return: The folded assertion.
    """
    optable = program_optable(program, optable)
    scope = dict(scope or {})
    parsed = parse_expression(text, optable, relational=True, source=location)
    parsed = _untag_constants(parsed, set(program.params) | set(scope))
    parsed = fold(parsed, scope, optable=optable) if scope else parsed
    typed = check_assertion(parsed, program, optable, location)
    return fold(typed, program.param_values(), {name: param.ty for name, param in program.params.items()}, optable)


def print_assertion(a: Assertion) -> str:
    return print_expr(a, equality='=')


# Shapes:

def is_eq_shaped(a: Assertion) -> bool:
    """:return: True if the assertion is a conjunction of equalities e<1> = e<2> between identical expressions."""
    for part in conjuncts(a):
        if not (isinstance(part, Op) and part.name == 'eq'):
            return False
        left, right = part.args
        if untag(left) != untag(right) or {frozenset(expr_sides(left)), frozenset(expr_sides(right))} != \
                {frozenset({1}), frozenset({2})}:
            return False
    return True


def is_discrete_carried(a: Assertion, ctx: TypingContext) -> bool:
    """:return: True if every variable the assertion reads has a discrete type."""
    return all(ctx.get(name) is not None and ctx[name].is_discrete() for name in assertion_names(a))


def diagonal(a: Assertion) -> Assertion:
    """:return: The assertion evaluated on a single memory read twice, i.e. Φ(m, m)."""
    return rename_sides(a, {2: 1})


# Evaluation:

def l1_distance(left: Any, right: Any) -> Fraction:
    if isinstance(left, tuple):
        return sum((abs(Fraction(x) - Fraction(y)) for x, y in zip(left, right)), Fraction(0))
    if isinstance(left, bool):
        return Fraction(int(left != right))
    return abs(Fraction(left) - Fraction(right))


def holds(a: Assertion, memories: Mapping[int, Mapping[str, Any]], params: Optional[Mapping[str, Any]] = None,
          optable: Optional[OpTable] = None) -> bool:
    """
    Evaluates an assertion on tagged memories.

    :param a: The assertion.
    :param memories: side -> memory.
    :param params: Parameter values for untagged names.
    :param optable: The operation table.
    :return: The truth value.
    """
    optable = optable or default_optable()
    params = params or {}

    def read(name: str, side: int) -> Any:
        try:
            return memories[side][name]
        except KeyError:
            raise EvaluationError(f'The variable `{name}<{side}>` is unbound.')

    def walk(node: Any) -> Any:
        if isinstance(node, Lit):
            return node.value
        if isinstance(node, SVar):
            return read(node.name, node.side)
        if isinstance(node, Var):
            if node.name in params:
                return params[node.name]
            raise EvaluationError(f'The untagged name `{node.name}` is not a parameter.')
        if isinstance(node, AdjAtom):
            first, second = node.sides
            return sum((l1_distance(read(name, first), read(name, second)) for name in node.names),
                       Fraction(0)) <= node.bound
        if isinstance(node, Op):
            if node.name == 'and':
                return all(walk(arg) for arg in node.args)
            if node.name == 'or':
                return any(walk(arg) for arg in node.args)
            if node.name == 'implies':
                return (not walk(node.args[0])) or bool(walk(node.args[1]))
            args = [walk(arg) for arg in node.args]
            try:
                return optable.op(node.name).exact(*args)
            except ZeroDivisionError:
                raise EvaluationError(f'Division by zero while evaluating `{node.name}`.')
        raise EvaluationError(f'Cannot evaluate {node!r}.')

    return bool(walk(a))


def relation_of(a: Assertion, params: Optional[Mapping[str, Any]] = None,
                optable: Optional[OpTable] = None) -> Relation:
    """:return: The relation {(m1, m2) | a holds on (m1, m2)} on memories."""
    optable = optable or default_optable()
    return PredicatePair(lambda m1, m2: holds(a, {1: m1, 2: m2}, params, optable), print_assertion(a))
