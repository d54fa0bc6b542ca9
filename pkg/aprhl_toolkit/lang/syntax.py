from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple, Union


@dataclass(frozen=True)
class Ty:
    name: str
    """The type name, e.g. 'int', 'real' or a declared opaque name such as 'data'."""

    base: str
    """The carrier: 'bool', 'int', 'real' or 'vec' (a fixed-size real vector)."""

    dim: int = 0
    """The vector dimension for 'vec' types."""

    bounds: Optional[Tuple[int, int]] = None
    """Inclusive bounds for finite discrete types declared as discrete(lo, hi)."""

    opaque: bool = False
    """Opaque types only combine with operations declared over them."""

    def __str__(self) -> str:
        return self.name

    def is_numeric(self) -> bool:
        return not self.opaque and self.base in ('int', 'real')

    def is_intlike(self) -> bool:
        return not self.opaque and self.base == 'int'

    def is_discrete(self) -> bool:
        """:return: True if the interpretation of the type is a discrete space."""
        return self.base in ('bool', 'int')

    def describe(self) -> str:
        if self.base == 'vec':
            return f'{self.name} = vec_real({self.dim})'
        if self.bounds is not None:
            return f'{self.name} = discrete({self.bounds[0]}, {self.bounds[1]})'
        if self.opaque:
            return f'{self.name} = {self.base}'
        return self.name


BOOL = Ty('bool', 'bool')
INT = Ty('int', 'int')
REAL = Ty('real', 'real')
BASE_TYPES: Dict[str, Ty] = {'bool': BOOL, 'int': INT, 'real': REAL}


def assignable(source: Ty, target: Ty) -> bool:
    """:return: True if a value of the source type may be stored where the target type is expected."""
    if source == target:
        return True
    if source.opaque or target.opaque:
        return False
    if source.base == 'int' and target.base in ('int', 'real'):
        return True
    return False


def join_numeric(left: Ty, right: Ty) -> Ty:
    """:return: The numeric type of an arithmetic combination (int only if both sides are int-like)."""
    return INT if left.is_intlike() and right.is_intlike() else REAL


# Expressions:

@dataclass(frozen=True)
class Var:
    name: str
    ty: Optional[Ty] = field(default=None, compare=False)


@dataclass(frozen=True)
class SVar:
    """A variable read in the first or second memory of a relational assertion."""
    name: str
    side: int
    ty: Optional[Ty] = field(default=None, compare=False)


@dataclass(frozen=True)
class Lit:
    value: Any
    ty: Ty


@dataclass(frozen=True)
class Op:
    name: str
    args: Tuple['Expr', ...]
    ty: Optional[Ty] = field(default=None, compare=False)


Expr = Union[Var, SVar, Lit, Op]


@dataclass(frozen=True)
class DistExpr:
    name: str
    params: Tuple[Expr, ...]
    args: Tuple[Expr, ...]
    ty: Optional[Ty] = field(default=None, compare=False)


# Commands:

@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Null:
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Sample:
    var: str
    dist: DistExpr


@dataclass(frozen=True)
class Seq:
    first: 'Cmd'
    second: 'Cmd'


@dataclass(frozen=True)
class If:
    guard: Expr
    then: 'Cmd'
    orelse: 'Cmd'


@dataclass(frozen=True)
class While:
    guard: Expr
    body: 'Cmd'


Cmd = Union[Skip, Null, Assign, Sample, Seq, If, While]


class TypingContext:
    """An ordered typing context Γ in which every variable occurs once."""

    def __init__(self, entries: Iterable[Tuple[str, Ty]] = ()):
        self.entries: Tuple[Tuple[str, Ty], ...] = tuple(entries)
        self._types: Dict[str, Ty] = {}
        for name, ty in self.entries:
            if name in self._types:
                raise ValueError(f'The variable `{name}` occurs more than once in the typing context.')
            self._types[name] = ty

    def __contains__(self, name: str) -> bool:
        return name in self._types

    def __getitem__(self, name: str) -> Ty:
        return self._types[name]

    def __iter__(self) -> Iterator[Tuple[str, Ty]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, TypingContext) and self.entries == other.entries

    def __repr__(self) -> str:
        return 'TypingContext(' + ', '.join(f'{name}:{ty}' for name, ty in self.entries) + ')'

    def names(self) -> List[str]:
        return [name for name, _ in self.entries]

    def get(self, name: str) -> Optional[Ty]:
        return self._types.get(name)


@dataclass(frozen=True)
class Param:
    ty: Ty
    value: Any


@dataclass(frozen=True)
class OpDecl:
    """An operation declared in a program prelude with `op`."""

    name: str
    """The operation name."""

    params: Tuple[Tuple[str, Ty], ...]
    """The argument names and types."""

    result: Ty
    """The result type."""

    sensitivity: Tuple[Tuple[int, Fraction], ...] = ()
    """Declared sensitivities as (argument index, s) pairs."""

    body: Optional[Expr] = None
    """The defining expression over the arguments; operations without one can be reasoned about but not run."""


@dataclass
class Program:
    """A parsed pWHILE source file."""

    types: Dict[str, Ty]
    """Declared opaque types by name."""

    params: Dict[str, Param]
    """Named constants, in declaration order."""

    ctx: TypingContext
    """The variable declarations."""

    body: 'Cmd'
    """The program body."""

    ops: Dict[str, OpDecl] = field(default_factory=dict)
    """Operations declared in the prelude, in declaration order."""

    def param_values(self) -> Dict[str, Any]:
        return {name: param.value for name, param in self.params.items()}

    def with_params(self, values: Dict[str, Any]) -> 'Program':
        """:return: A copy of the program with some parameter values replaced."""
        from .typecheck import coerce_value
        params = dict(self.params)
        for name, value in values.items():
            if name in params:
                params[name] = Param(params[name].ty, coerce_value(value, params[name].ty, name))
        return Program(dict(self.types), params, self.ctx, self.body, dict(self.ops))


# Command helpers:

def seq(*commands: Cmd) -> Cmd:
    """:return: The right-nested sequence of the commands (skip if there are none)."""
    parts = [command for command in commands]
    if not parts:
        return Skip()
    result = parts[-1]
    for command in reversed(parts[:-1]):
        result = Seq(command, result)
    return result


def flatten_seq(command: Cmd) -> List[Cmd]:
    """:return: The commands of a (possibly nested) sequence, in execution order."""
    if isinstance(command, Seq):
        return flatten_seq(command.first) + flatten_seq(command.second)
    return [command]


def normalize(command: Cmd) -> Cmd:
    """:return: The command with every sequence re-associated to the right."""
    if isinstance(command, Seq):
        return seq(*[normalize(part) for part in flatten_seq(command)])
    if isinstance(command, If):
        return If(command.guard, normalize(command.then), normalize(command.orelse))
    if isinstance(command, While):
        return While(command.guard, normalize(command.body))
    return command


def same_command(left: Cmd, right: Cmd) -> bool:
    """:return: True if the commands are equal modulo the association of sequences."""
    return normalize(left) == normalize(right)


def desugar_bounded(loop: While, n: int) -> Cmd:
    """
    Unrolls a loop a bounded number of times:
    [while b do c]_0 = if b then null else skip and
    [while b do c]_(k+1) = if b then (c; [while b do c]_k) else skip.

    :param loop: The While node.
    :param n: The number of unrollings (n >= 0).
    :return: The unrolled command.
    """
    if not isinstance(loop, While):
        raise ValueError(f'Only while loops can be unrolled, not {type(loop).__name__}.')
    if n < 0:
        raise ValueError(f'The unrolling depth `{n}` must be nonnegative.')
    result: Cmd = If(loop.guard, Null(), Skip())
    for _ in range(n):
        result = If(loop.guard, Seq(loop.body, result), Skip())
    return result


# Variables:

def _expr_vars(expr: Any, found: Set[str], params: FrozenSet[str]) -> None:
    if isinstance(expr, Var):
        if expr.name not in params:
            found.add(expr.name)
    elif isinstance(expr, SVar):
        found.add(expr.name)
    elif isinstance(expr, Op):
        for arg in expr.args:
            _expr_vars(arg, found, params)
    elif isinstance(expr, DistExpr):
        for arg in expr.params + expr.args:
            _expr_vars(arg, found, params)


def free_vars(node: Any, params: Iterable[str] = ()) -> Set[str]:
    """
    Computes the free variables of a command, expression or distribution expression. Declared
    parameters are constants and are never free.

    :param node: The syntax node.
    :param params: The names of declared parameters.
    :return: The set of free variable names.
    """
    params = frozenset(params)
    found: Set[str] = set()
    stack: List[Any] = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, (Skip, Null)):
            continue
        if isinstance(current, Assign):
            found.add(current.var)
            _expr_vars(current.expr, found, params)
        elif isinstance(current, Sample):
            found.add(current.var)
            _expr_vars(current.dist, found, params)
        elif isinstance(current, Seq):
            stack.extend([current.first, current.second])
        elif isinstance(current, If):
            _expr_vars(current.guard, found, params)
            stack.extend([current.then, current.orelse])
        elif isinstance(current, While):
            _expr_vars(current.guard, found, params)
            stack.append(current.body)
        else:
            _expr_vars(current, found, params)
    return found


def written_vars(command: Cmd) -> Set[str]:
    """:return: The variables a command may assign or sample into."""
    found: Set[str] = set()
    stack: List[Cmd] = [command]
    while stack:
        current = stack.pop()
        if isinstance(current, (Assign, Sample)):
            found.add(current.var)
        elif isinstance(current, Seq):
            stack.extend([current.first, current.second])
        elif isinstance(current, If):
            stack.extend([current.then, current.orelse])
        elif isinstance(current, While):
            stack.append(current.body)
    return found


def commands_of(command: Cmd) -> Iterator[Cmd]:
    """:return: Every command node of a command tree, preorder."""
    stack: List[Cmd] = [command]
    while stack:
        current = stack.pop()
        yield current
        if isinstance(current, Seq):
            stack.extend([current.second, current.first])
        elif isinstance(current, If):
            stack.extend([current.orelse, current.then])
        elif isinstance(current, While):
            stack.append(current.body)


# Relational tagging:

def tag(expr: Expr, side: int) -> Expr:
    """:return: The expression with every program variable read from the given memory (1 or 2)."""
    if isinstance(expr, Var):
        return SVar(expr.name, side, expr.ty)
    if isinstance(expr, SVar):
        return SVar(expr.name, side, expr.ty)
    if isinstance(expr, Op):
        return Op(expr.name, tuple(tag(arg, side) for arg in expr.args), expr.ty)
    return expr


def untag(expr: Expr) -> Expr:
    """:return: The expression with the memory tags removed."""
    if isinstance(expr, SVar):
        return Var(expr.name, expr.ty)
    if isinstance(expr, Op):
        return Op(expr.name, tuple(untag(arg) for arg in expr.args), expr.ty)
    return expr


def expr_sides(expr: Expr) -> Set[int]:
    """:return: The memory tags read by a relational expression."""
    if isinstance(expr, SVar):
        return {expr.side}
    if isinstance(expr, Op):
        sides: Set[int] = set()
        for arg in expr.args:
            sides |= expr_sides(arg)
        return sides
    return set()


def subexpressions(expr: Expr) -> Iterator[Expr]:
    stack: List[Expr] = [expr]
    while stack:
        current = stack.pop()
        yield current
        if isinstance(current, Op):
            stack.extend(reversed(current.args))
