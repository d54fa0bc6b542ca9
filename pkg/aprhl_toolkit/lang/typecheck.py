from .optable import OpTable, SignatureError, UnknownOperation, program_optable
from .syntax import Ty, BOOL, INT, REAL, Var, SVar, Lit, Op, Expr, DistExpr, Skip, Null, Assign, Sample, Seq, \
    If, While, Cmd, OpDecl, Program, TypingContext, assignable, flatten_seq, seq, free_vars
from dataclasses import replace
from ..aputils import to_fraction
from fractions import Fraction
from ..measure import Memory
from typing import Any, Dict, Mapping, Optional


class PWhileTypeError(Exception):
    """An exception raised when a program, command or assertion is ill-typed. The kind names the
    violated typing rule and the location names the offending node."""

    def __init__(self, kind: str, location: str, message: str):
        self.kind: str = kind
        self.location: str = location
        super().__init__(f'{location}: {message} [{kind}]')


def coerce_value(value: Any, ty: Ty, name: str = 'value') -> Any:
    """
    Converts a literal into the canonical exact representation of a type.

    :param value: The value (bool, int, Fraction, float or tuple).
    :param ty: The target type.
    :param name: The name used in error messages.
    :return: The coerced value.
    """
    if ty.base == 'bool':
        if not isinstance(value, bool):
            raise ValueError(f'`{name}` must be a bool, not {value!r}.')
        return value
    if ty.base == 'int':
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, Fraction) and value.denominator == 1:
                value = int(value)
            else:
                raise ValueError(f'`{name}` must be an integer, not {value!r}.')
        if ty.bounds is not None and not ty.bounds[0] <= value <= ty.bounds[1]:
            raise ValueError(f'`{name}` = {value} lies outside {ty.describe()}.')
        return value
    if ty.base == 'real':
        if isinstance(value, bool) or isinstance(value, tuple):
            raise ValueError(f'`{name}` must be a real number, not {value!r}.')
        return to_fraction(value)
    if ty.base == 'vec':
        if not isinstance(value, (tuple, list)) or len(value) != ty.dim:
            raise ValueError(f'`{name}` must be a vector of {ty.dim} reals, not {value!r}.')
        return tuple(to_fraction(item) for item in value)
    raise ValueError(f'Cannot coerce {value!r} into {ty}.')


def default_value(ty: Ty) -> Any:
    """:return: The value a variable holds when no initial value is given (zero, false or the lower bound)."""
    if ty.base == 'bool':
        return False
    if ty.base == 'int':
        return ty.bounds[0] if ty.bounds is not None else 0
    if ty.base == 'vec':
        return tuple(Fraction(0) for _ in range(ty.dim))
    return Fraction(0)


def initial_memory(ctx: TypingContext, values: Optional[Mapping[str, Any]] = None) -> Memory:
    """
    Builds an initial memory over a typing context.

    :param ctx: The declared variables.
    :param values: Initial values for some variables; the others take their default value.
    :return: The memory, with every value coerced to its type.
    :raises ValueError: When a value does not fit its type or names an undeclared variable.
    """
    values = dict(values or {})
    unknown = [name for name in values if ctx.get(name) is None]
    if unknown:
        raise ValueError(f'The variables {unknown} are not declared.')
    return Memory((name, coerce_value(values[name], ty, name) if name in values else default_value(ty))
                  for name, ty in ctx)


class TypeChecker:
    """Annotates expressions and commands with their types under a program's declarations."""

    def __init__(self, program: Program, optable: Optional[OpTable] = None):
        self.program: Program = program
        self.optable: OpTable = program_optable(program, optable)

    def variable_type(self, name: str, location: str) -> Ty:
        ty = self.program.ctx.get(name)
        if ty is None:
            raise PWhileTypeError('unbound-variable', location, f'The variable `{name}` is not declared.')
        return ty

    def expr(self, expr: Expr, location: str, relational: bool = False) -> Expr:
        """:return: The expression with every node annotated by its type."""
        if isinstance(expr, Lit):
            return expr
        if isinstance(expr, Var):
            if expr.name in self.program.params:
                return Var(expr.name, self.program.params[expr.name].ty)
            if relational:
                raise PWhileTypeError('untagged-variable', location,
                                      f'The variable `{expr.name}` must carry a memory tag <1> or <2>.')
            return Var(expr.name, self.variable_type(expr.name, location))
        if isinstance(expr, SVar):
            return SVar(expr.name, expr.side, self.variable_type(expr.name, location))
        if isinstance(expr, Op):
            try:
                spec = self.optable.op(expr.name)
            except UnknownOperation as error:
                raise PWhileTypeError('unknown-operation', location, str(error))
            if len(expr.args) != spec.arity:
                raise PWhileTypeError('arity', location, f'`{expr.name}` expects {spec.arity} arguments, '
                                                         f'found {len(expr.args)}.')
            args = tuple(self.expr(arg, location, relational) for arg in expr.args)
            try:
                ty = spec.infer([arg.ty for arg in args])
            except SignatureError as error:
                raise PWhileTypeError('signature', location, str(error))
            return Op(expr.name, args, ty)
        raise PWhileTypeError('unknown-node', location, f'Unexpected expression node {expr!r}.')

    def dist(self, dist: DistExpr, location: str) -> DistExpr:
        try:
            spec = self.optable.dist(dist.name)
        except UnknownOperation as error:
            raise PWhileTypeError('unknown-operation', location, str(error))
        if len(dist.params) != spec.param_count:
            raise PWhileTypeError('arity', location, f'`{dist.name}` expects {spec.param_count} static '
                                                     f'parameters, found {len(dist.params)}.')
        if len(dist.args) != len(spec.arg_types):
            raise PWhileTypeError('arity', location, f'`{dist.name}` expects {len(spec.arg_types)} arguments, '
                                                     f'found {len(dist.args)}.')
        params = tuple(self.expr(param, location) for param in dist.params)
        for param in params:
            if free_vars(param, self.program.params):
                raise PWhileTypeError('static-parameter', location,
                                      f'The parameters of `{dist.name}` may only mention constants.')
            if not param.ty.is_numeric():
                raise PWhileTypeError('signature', location, f'The parameters of `{dist.name}` must be numeric.')
        args = tuple(self.expr(arg, location) for arg in dist.args)
        for arg, expected in zip(args, spec.arg_types):
            fits = (expected == 'real' and arg.ty.is_numeric()) or \
                   (expected == 'int' and arg.ty.is_intlike()) or \
                   (expected == 'bool' and arg.ty.base == 'bool')
            if not fits:
                raise PWhileTypeError('signature', location, f'`{dist.name}` expects a {expected} argument, '
                                                             f'found {arg.ty}.')
        return DistExpr(dist.name, params, args, spec.result)

    def command(self, command: Cmd, location: str = 'body') -> Cmd:
        """:return: The command with every expression annotated."""
        if isinstance(command, (Skip, Null)):
            return command
        if isinstance(command, Seq):
            parts = flatten_seq(command)
            return seq(*[self.command(part, f'{location}[{index}]') for index, part in enumerate(parts)])
        if isinstance(command, Assign):
            target = self.variable_type(command.var, location)
            expr = self.expr(command.expr, location)
            if not assignable(expr.ty, target):
                raise PWhileTypeError('assignment', location, f'Cannot assign a value of type {expr.ty} to '
                                                              f'`{command.var}` of type {target}.')
            return Assign(command.var, expr)
        if isinstance(command, Sample):
            target = self.variable_type(command.var, location)
            dist = self.dist(command.dist, location)
            if not assignable(dist.ty, target):
                raise PWhileTypeError('assignment', location, f'Cannot sample a value of type {dist.ty} into '
                                                              f'`{command.var}` of type {target}.')
            return Sample(command.var, dist)
        if isinstance(command, If):
            guard = self._guard(command.guard, location)
            return If(guard, self.command(command.then, f'{location}.then'),
                      self.command(command.orelse, f'{location}.else'))
        if isinstance(command, While):
            guard = self._guard(command.guard, location)
            return While(guard, self.command(command.body, f'{location}.do'))
        raise PWhileTypeError('unknown-node', location, f'Unexpected command node {command!r}.')

    def _guard(self, guard: Expr, location: str) -> Expr:
        typed = self.expr(guard, f'{location}.guard')
        if typed.ty.base != 'bool':
            raise PWhileTypeError('guard-not-bool', f'{location}.guard',
                                  f'The guard must have type bool, found {typed.ty}.')
        return typed


def typecheck(ctx: TypingContext, command: Cmd, optable: Optional[OpTable] = None) -> Cmd:
    """
    Typechecks a command under a bare typing context (no parameters or opaque types).

    :param ctx: The typing context.
    :param command: The command.
    :param optable: The operation table.
    :return: The annotated command.
    """
    return TypeChecker(Program({}, {}, ctx, command), optable).command(command)


def typecheck_program(program: Program, optable: Optional[OpTable] = None) -> Program:
    """:return: The program with an annotated body and annotated operation bodies."""
    checker = TypeChecker(program, optable)
    ops = {name: _check_op(decl, program, checker.optable) for name, decl in program.ops.items()}
    return Program(program.types, program.params, program.ctx, checker.command(program.body), ops)


def _check_op(decl: OpDecl, program: Program, optable: OpTable) -> OpDecl:
    if decl.body is None:
        return decl
    location = f'op {decl.name}'
    scope = Program(program.types, {}, TypingContext(decl.params), Skip(), program.ops)
    body = TypeChecker(scope, optable).expr(decl.body, location)
    if not assignable(body.ty, decl.result):
        raise PWhileTypeError('op-body', location, f'The body has type {body.ty}, not the declared {decl.result}.')
    return replace(decl, body=body)


def typecheck_command(command: Cmd, program: Program, optable: Optional[OpTable] = None) -> Cmd:
    return TypeChecker(program, optable).command(command)
