from .optable import SYMBOLS
from .parser import AdjAtom
from .syntax import Var, SVar, Lit, Op, Expr, DistExpr, Skip, Null, Assign, Sample, Seq, If, While, Cmd, \
    OpDecl, Program, flatten_seq
from ..aputils import decimal_string, format_scalar
from fractions import Fraction
from typing import Any, List

# Binding strength of each operator; atoms bind tightest:
PRECEDENCE = {
    'implies': 0, 'or': 1, 'and': 2,
    'eq': 3, 'ne': 3, 'lt': 3, 'le': 3, 'gt': 3, 'ge': 3,
    'add': 4, 'sub': 4, 'mul': 5, 'div': 5, 'neg': 6, 'not': 6,
}
ATOM = 7
INFIX_SYMBOLS = dict(SYMBOLS, implies='==>')


def print_value(value: Any) -> str:
    """:return: The literal syntax of a value."""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        rendered = decimal_string(value)
        return rendered if rendered is not None else f'({value.numerator} / {value.denominator})'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return '[' + ', '.join(print_value(item) for item in value) + ']'
    return str(value)


def _precedence(expr: Any) -> int:
    if isinstance(expr, AdjAtom):
        return PRECEDENCE['le']
    if isinstance(expr, Op) and expr.name in PRECEDENCE:
        return PRECEDENCE[expr.name]
    if isinstance(expr, Lit) and isinstance(expr.value, (int, Fraction)) and expr.value < 0:
        return PRECEDENCE['neg']
    return ATOM


def print_expr(expr: Any, equality: str = '==') -> str:
    """
    Renders an expression with the minimal parentheses needed to parse back to the same tree.

    :param expr: The expression.
    :param equality: The symbol used for equality ('==' in programs, '=' in assertions).
    :return: The text.
    """
    if isinstance(expr, Lit):
        return print_value(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, SVar):
        return f'{expr.name}<{expr.side}>'
    if isinstance(expr, AdjAtom):
        sides = '' if expr.sides == (1, 2) else f'<{expr.sides[0]},{expr.sides[1]}>'
        return 'adj{' + ', '.join(expr.names) + '}' + sides + ' <= ' + print_value(expr.bound)
    if isinstance(expr, Op):
        name = expr.name
        if name in ('neg', 'not'):
            operand = expr.args[0]
            inner = print_expr(operand, equality)
            if _precedence(operand) < ATOM or isinstance(operand, Lit):
                inner = f'({inner})'
            return ('-' if name == 'neg' else '!') + inner
        if name in PRECEDENCE:
            level = PRECEDENCE[name]
            left, right = expr.args
            left_text, right_text = print_expr(left, equality), print_expr(right, equality)
            if name == 'implies':
                left_wrap, right_wrap = _precedence(left) <= level, _precedence(right) < level
            elif level == 3:
                left_wrap, right_wrap = _precedence(left) <= level, _precedence(right) <= level
            else:
                left_wrap, right_wrap = _precedence(left) < level, _precedence(right) <= level
            if left_wrap:
                left_text = f'({left_text})'
            if right_wrap:
                right_text = f'({right_text})'
            symbol = equality if name == 'eq' else INFIX_SYMBOLS[name]
            return f'{left_text} {symbol} {right_text}'
        return f'{name}(' + ', '.join(print_expr(arg, equality) for arg in expr.args) + ')'
    raise ValueError(f'Cannot print the expression {expr!r}.')


def print_dist(dist: DistExpr) -> str:
    text = f'{dist.name}(' + ', '.join(print_expr(param) for param in dist.params) + ')'
    if dist.args:
        text += '(' + ', '.join(print_expr(arg) for arg in dist.args) + ')'
    return text


def print_cmd(command: Cmd, indent: int = 0) -> str:
    """:return: The command as (indented, multi-line) source text."""
    pad = '    ' * indent
    if isinstance(command, Seq):
        return ';\n'.join(print_cmd(part, indent) for part in flatten_seq(command))
    if isinstance(command, Skip):
        return f'{pad}skip'
    if isinstance(command, Null):
        return f'{pad}null'
    if isinstance(command, Assign):
        return f'{pad}{command.var} <- {print_expr(command.expr)}'
    if isinstance(command, Sample):
        return f'{pad}{command.var} <$ {print_dist(command.dist)}'
    if isinstance(command, If):
        return (f'{pad}if {print_expr(command.guard)} then {{\n{print_cmd(command.then, indent + 1)}\n'
                f'{pad}}} else {{\n{print_cmd(command.orelse, indent + 1)}\n{pad}}}')
    if isinstance(command, While):
        return f'{pad}while {print_expr(command.guard)} do {{\n{print_cmd(command.body, indent + 1)}\n{pad}}}'
    raise ValueError(f'Cannot print the command {command!r}.')


def print_inline(command: Cmd) -> str:
    """:return: The command on a single line."""
    return ' '.join(line.strip() for line in print_cmd(command).splitlines())


def print_program(program: Program) -> str:
    """:return: The program as .pwhile source text."""
    lines: List[str] = []
    for ty in program.types.values():
        lines.append(f'type {ty.describe()};')
    for decl in program.ops.values():
        lines.append(print_op(decl))
    for name, param in program.params.items():
        lines.append(f'param {name} : {param.ty} = {print_value(param.value)};')
    for name, ty in program.ctx:
        lines.append(f'var {name} : {ty};')
    if lines:
        lines.append('')
    lines.append(print_cmd(program.body))
    return '\n'.join(lines) + '\n'


def describe_value(value: Any) -> str:
    """Formats a value for reports (reals as decimals where possible)."""
    if isinstance(value, tuple):
        return '[' + ', '.join(describe_value(item) for item in value) + ']'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return format_scalar(value)


def print_op(decl: OpDecl) -> str:
    """:return: The declaration of an operation as .pwhile prelude text."""
    args = ', '.join(f'{name} : {ty}' for name, ty in decl.params)
    text = f'op {decl.name}({args}) : {decl.result}'
    if decl.sensitivity:
        names = [name for name, _ in decl.params]
        text += ' sensitivity {' + ', '.join(f'{names[index]}: {print_value(value)}'
                                             for index, value in decl.sensitivity) + '}'
    if decl.body is not None:
        text += f' = {print_expr(decl.body)}'
    return text + ';'
