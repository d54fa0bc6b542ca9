from .syntax import Ty, BOOL, INT, REAL, OpDecl, Program, join_numeric, assignable
from ..mechanisms import Mechanism, Laplace, Gauss, Cauchy, Bernoulli, UniformInt, RandomizedResponse, \
    Exponential, distance_score
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import operator
import numpy as np


class UnknownOperation(Exception):
    """An exception raised when a program or assertion names an operation that is not registered."""
    pass


class SignatureError(Exception):
    """An exception raised by a signature when the argument types do not fit; the typechecker turns it
    into a located PWhileTypeError."""
    pass


@dataclass(frozen=True)
class OpSpec:
    name: str
    """The operation name used in the syntax tree."""

    arity: int
    """The number of arguments."""

    infer: Callable[[Sequence[Ty]], Ty]
    """Computes the result type from the argument types, raising SignatureError on a mismatch."""

    exact: Callable[..., Any]
    """The evaluator on exact values (bools, ints, Fractions, tuples)."""

    vector: Optional[Callable[..., Any]] = None
    """The evaluator on numpy arrays (one entry per trial); defaults to the exact evaluator."""

    symbol: Optional[str] = None
    """The infix or prefix symbol, for operators."""

    sensitivity: Dict[int, Fraction] = field(default_factory=dict)
    """Declared sensitivities: argument index -> s, meaning |p(.., x, ..) - p(.., y, ..)| <= s * ||x - y||_1."""

    def evaluate_vector(self, *args: Any) -> Any:
        return (self.vector or self.exact)(*args)


@dataclass(frozen=True)
class DistSpec:
    name: str
    """The distribution operation name."""

    param_count: int
    """The number of static parameters written in the first pair of parentheses."""

    arg_types: Tuple[str, ...]
    """The expected argument categories: 'real', 'int' or 'bool'."""

    result: Ty
    """The type of the sampled value."""

    build: Callable[..., Mechanism]
    """Builds the mechanism from the evaluated static parameters."""

    continuous: bool
    """True for mechanisms with a density on the reals."""


# Signatures:

def _numeric(name: str, types: Sequence[Ty]) -> None:
    for ty in types:
        if not ty.is_numeric():
            raise SignatureError(f'`{name}` expects numeric arguments, found {ty}.')


def _arith(name: str) -> Callable[[Sequence[Ty]], Ty]:
    def infer(types: Sequence[Ty]) -> Ty:
        _numeric(name, types)
        result = types[0]
        for ty in types[1:]:
            result = join_numeric(result, ty)
        return INT if result.is_intlike() else REAL
    return infer


def _division(types: Sequence[Ty]) -> Ty:
    _numeric('/', types)
    return REAL


def _order(name: str) -> Callable[[Sequence[Ty]], Ty]:
    def infer(types: Sequence[Ty]) -> Ty:
        _numeric(name, types)
        return BOOL
    return infer


def _equality(types: Sequence[Ty]) -> Ty:
    left, right = types
    if not (assignable(left, right) or assignable(right, left)):
        raise SignatureError(f'Cannot compare values of types {left} and {right}.')
    return BOOL


def _boolean(name: str) -> Callable[[Sequence[Ty]], Ty]:
    def infer(types: Sequence[Ty]) -> Ty:
        for ty in types:
            if ty.base != 'bool':
                raise SignatureError(f'`{name}` expects bool arguments, found {ty}.')
        return BOOL
    return infer


def _ite(types: Sequence[Ty]) -> Ty:
    guard, left, right = types
    if guard.base != 'bool':
        raise SignatureError(f'The condition of `ite` must be bool, found {guard}.')
    if left.is_numeric() and right.is_numeric():
        return join_numeric(left, right)
    if left != right:
        raise SignatureError(f'The branches of `ite` have different types {left} and {right}.')
    return left


def _size(types: Sequence[Ty]) -> Ty:
    if types[0].name != 'queries':
        raise SignatureError(f'`size` expects a value of type queries, found {types[0]}.')
    return INT


def _eval(types: Sequence[Ty]) -> Ty:
    queries, index, data = types
    if queries.name != 'queries' or not index.is_intlike() or data.base != 'vec':
        raise SignatureError(f'`eval` expects (queries, int, data), found ({queries}, {index}, {data}).')
    return REAL


# Evaluators:

def _exact_div(a: Any, b: Any) -> Any:
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        if b == 0:
            raise ZeroDivisionError('Division by zero.')
        return Fraction(a) / Fraction(b)
    return a / b


def _exact_and(a: Any, b: Any) -> bool:
    return bool(a) and bool(b)


def _exact_or(a: Any, b: Any) -> bool:
    return bool(a) or bool(b)


def _exact_ite(c: Any, a: Any, b: Any) -> Any:
    return a if c else b


def _exact_size(queries: Any) -> int:
    return int(queries)


def query_answer(queries: Any, index: Any, data: Sequence[Any]) -> Any:
    """
    The built-in query evaluator: query j reads coordinate j of the data vector (1-based, wrapping), a
    linear query of sensitivity 1 with respect to the L1 distance on data.
    """
    return data[(int(index) - 1) % len(data)]


def _vector_eval(queries: Any, index: Any, data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    index = np.asarray(index, dtype=np.int64)
    if data.ndim == 1:
        return data[(index - 1) % data.shape[0]]
    rows = np.arange(data.shape[0])
    return data[rows, (np.broadcast_to(index, (data.shape[0],)) - 1) % data.shape[1]]


def _vector_size(queries: Any) -> Any:
    return np.asarray(queries, dtype=np.int64)


def _vector_ite(c: Any, a: Any, b: Any) -> Any:
    return np.where(c, a, b)



# Declared operations:

def _declared_signature(decl: OpDecl) -> Callable[[Sequence[Ty]], Ty]:
    def infer(types: Sequence[Ty]) -> Ty:
        for (name, expected), ty in zip(decl.params, types):
            if not assignable(ty, expected):
                raise SignatureError(f'`{decl.name}` expects {expected} for `{name}`, found {ty}.')
        return decl.result
    return infer


def _declared_exact(decl: OpDecl, table: 'OpTable') -> Callable[..., Any]:
    def exact(*args: Any) -> Any:
        from ..semantics.evaluate import EvaluationError, evaluate
        if decl.body is None:
            raise EvaluationError(f'The operation `{decl.name}` is declared without a body.')
        return evaluate(decl.body, dict(zip((name for name, _ in decl.params), args)), {}, table)
    return exact


def _declared_vector(decl: OpDecl, table: 'OpTable') -> Callable[..., Any]:
    def vector(*args: Any) -> Any:
        from ..semantics.evaluate import EvaluationError, evaluate_vector
        if decl.body is None:
            raise EvaluationError(f'The operation `{decl.name}` is declared without a body.')
        size = max((np.shape(arg)[0] for arg in args if np.ndim(arg) > 0), default=1)
        return evaluate_vector(decl.body, dict(zip((name for name, _ in decl.params), args)), size, {}, table)
    return vector


# Distribution builders:

def _build_expm(base: Any, lo: Any, hi: Any) -> Mechanism:
    return Exponential(list(range(int(lo), int(hi) + 1)), distance_score, base,
                       inputs=list(range(int(lo), int(hi) + 1)))


class OpTable:
    """The registry of deterministic operations p and distribution operations d available to programs
    and assertions."""

    def __init__(self):
        self._ops: Dict[str, OpSpec] = {}
        self._dists: Dict[str, DistSpec] = {}

    def register_op(self, spec: OpSpec) -> None:
        self._ops[spec.name] = spec

    def register_dist(self, spec: DistSpec) -> None:
        self._dists[spec.name] = spec

    def op(self, name: str) -> OpSpec:
        if name not in self._ops:
            raise UnknownOperation(f'The operation `{name}` is not registered; known operations are '
                                   f'{sorted(self._ops)}.')
        return self._ops[name]

    def dist(self, name: str) -> DistSpec:
        if name not in self._dists:
            raise UnknownOperation(f'The distribution `{name}` is not registered; known distributions are '
                                   f'{sorted(self._dists)}.')
        return self._dists[name]

    def has_op(self, name: str) -> bool:
        return name in self._ops

    def has_dist(self, name: str) -> bool:
        return name in self._dists

    def op_names(self) -> List[str]:
        return list(self._ops)

    def dist_names(self) -> List[str]:
        return list(self._dists)

    def copy(self) -> 'OpTable':
        table = OpTable()
        table._ops, table._dists = dict(self._ops), dict(self._dists)
        return table

    def declare(self, decl: OpDecl) -> None:
        """
        Registers an operation declared with `op`. Its evaluators run the declared body with the
        arguments bound, resolving operations through this table.

        :raises UnknownOperation: When the name is already registered.
        """
        if self.has_op(decl.name):
            raise UnknownOperation(f'The operation `{decl.name}` is already registered.')
        self.register_op(OpSpec(decl.name, len(decl.params), _declared_signature(decl), _declared_exact(decl, self),
                                _declared_vector(decl, self), sensitivity=dict(decl.sensitivity)))


# (name, symbol, infer, exact, vector):
_OPERATORS: List[Tuple[str, str, Callable, Callable, Optional[Callable]]] = [
    ('add', '+', _arith('+'), operator.add, None),
    ('sub', '-', _arith('-'), operator.sub, None),
    ('mul', '*', _arith('*'), operator.mul, None),
    ('div', '/', _division, _exact_div, np.true_divide),
    ('neg', '-', _arith('-'), operator.neg, None),
    ('eq', '==', _equality, operator.eq, None),
    ('ne', '!=', _equality, operator.ne, None),
    ('lt', '<', _order('<'), operator.lt, None),
    ('le', '<=', _order('<='), operator.le, None),
    ('gt', '>', _order('>'), operator.gt, None),
    ('ge', '>=', _order('>='), operator.ge, None),
    ('and', '&&', _boolean('&&'), _exact_and, np.logical_and),
    ('or', '||', _boolean('||'), _exact_or, np.logical_or),
    ('not', '!', _boolean('!'), operator.not_, np.logical_not),
]

UNARY_OPERATORS = ('neg', 'not')


def default_optable() -> OpTable:
    """:return: A table holding the built-in operations and distributions."""
    table = OpTable()
    for name, symbol, infer, exact, vector in _OPERATORS:
        arity = 1 if name in UNARY_OPERATORS else 2
        table.register_op(OpSpec(name, arity, infer, exact, vector, symbol))
    table.register_op(OpSpec('min', 2, _arith('min'), min, np.minimum))
    table.register_op(OpSpec('max', 2, _arith('max'), max, np.maximum))
    table.register_op(OpSpec('abs', 1, _arith('abs'), abs, np.abs))
    table.register_op(OpSpec('ite', 3, _ite, _exact_ite, _vector_ite))
    table.register_op(OpSpec('size', 1, _size, _exact_size, _vector_size))
    table.register_op(OpSpec('eval', 3, _eval, query_answer, _vector_eval, sensitivity={2: Fraction(1)}))

    table.register_dist(DistSpec('lap', 1, ('real',), REAL, Laplace, True))
    table.register_dist(DistSpec('gauss', 1, ('real',), REAL, Gauss, True))
    table.register_dist(DistSpec('cauchy', 1, ('real',), REAL, Cauchy, True))
    table.register_dist(DistSpec('bern', 1, (), BOOL, Bernoulli, False))
    table.register_dist(DistSpec('unif', 2, (), INT, UniformInt, False))
    table.register_dist(DistSpec('rr', 1, ('bool',), BOOL, RandomizedResponse, False))
    table.register_dist(DistSpec('expm', 3, ('int',), INT, _build_expm, False))
    return table



def program_optable(program: Program, optable: Optional[OpTable] = None) -> OpTable:
    """
    :param program: The program whose `op` declarations are added.
    :param optable: The base table (the built-in table by default).
    :return: The base table itself when it already holds every declared operation, otherwise a copy
        extended with them.
    """
    table = optable or default_optable()
    missing = [decl for name, decl in program.ops.items() if not table.has_op(name)]
    if not missing:
        return table
    table = table.copy()
    for decl in missing:
        table.declare(decl)
    return table


SYMBOLS: Dict[str, str] = {name: symbol for name, symbol, _, _, _ in _OPERATORS}
