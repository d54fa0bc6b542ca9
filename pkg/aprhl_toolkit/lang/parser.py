from .lexer import Lexer, Token, TokenStream, PWhileSyntaxError, describe
from .optable import OpTable, UnknownOperation, default_optable, program_optable
from .syntax import Ty, BOOL, INT, REAL, BASE_TYPES, Var, SVar, Lit, Op, Expr, DistExpr, Skip, Null, Assign, \
    Sample, Seq, If, While, Cmd, TypingContext, Param, OpDecl, Program, seq
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple
import logging
import os

logger = logging.getLogger(__name__)

KEYWORDS = frozenset({'skip', 'null', 'if', 'then', 'else', 'while', 'do', 'true', 'false',
                      'var', 'vars', 'param', 'type', 'op'})

COMPARISONS: Dict[str, str] = {'==': 'eq', '=': 'eq', '!=': 'ne', '<': 'lt', '<=': 'le', '>': 'gt', '>=': 'ge'}


@dataclass(frozen=True)
class AdjAtom:
    """The assertion atom adj{d, ...} <= k, i.e. ||d<1> - d<2>||_1 <= k summed over the variables."""
    names: Tuple[str, ...]
    bound: Fraction
    sides: Tuple[int, int] = (1, 2)


class ExprParser:
    """A recursive-descent parser for pWHILE expressions. In relational mode it additionally accepts
    memory tags (x<1>, (e)<2>), implication `==>` and adjacency atoms `adj{d} <= k`."""

    def __init__(self, stream: TokenStream, optable: OpTable, relational: bool = False):
        self.stream: TokenStream = stream
        self.optable: OpTable = optable
        self.relational: bool = relational

    def expression(self) -> Expr:
        if self.relational:
            return self._implication()
        return self._disjunction()

    def _implication(self) -> Expr:
        left = self._disjunction()
        if self.stream.accept('==>'):
            return Op('implies', (left, self._implication()))
        return left

    def _disjunction(self) -> Expr:
        left = self._conjunction()
        while self.stream.accept('||'):
            left = Op('or', (left, self._conjunction()))
        return left

    def _conjunction(self) -> Expr:
        left = self._comparison()
        while self.stream.accept('&&'):
            left = Op('and', (left, self._comparison()))
        return left

    def _comparison(self) -> Expr:
        if self.relational and self.stream.at('adj'):
            return self._adjacency()
        left = self._additive()
        token = self.stream.peek()
        if token.kind == 'op' and token.text in COMPARISONS:
            self.stream.next()
            right = self._additive()
            following = self.stream.peek()
            if following.kind == 'op' and following.text in COMPARISONS:
                raise self.stream.error('Comparisons do not chain; add parentheses.', following)
            return Op(COMPARISONS[token.text], (left, right))
        return left

    def _adjacency(self) -> Expr:
        self.stream.expect('adj')
        self.stream.expect('{')
        names = [self.stream.expect_kind('ident', 'a variable').text]
        while self.stream.accept(','):
            names.append(self.stream.expect_kind('ident', 'a variable').text)
        self.stream.expect('}')
        self.stream.expect('<=')
        token = self.stream.expect_kind('number', 'a numeric bound')
        return AdjAtom(tuple(names), Fraction(token.value))

    def _additive(self) -> Expr:
        left = self._multiplicative()
        while True:
            if self.stream.accept('+'):
                left = Op('add', (left, self._multiplicative()))
            elif self.stream.accept('-'):
                left = Op('sub', (left, self._multiplicative()))
            else:
                return left

    def _multiplicative(self) -> Expr:
        left = self._unary()
        while True:
            if self.stream.accept('*'):
                left = Op('mul', (left, self._unary()))
            elif self.stream.accept('/'):
                left = Op('div', (left, self._unary()))
            else:
                return left

    def _unary(self) -> Expr:
        if self.stream.at('-'):
            self.stream.next()
            # A minus sign directly before a number is part of the literal:
            if self.stream.at_kind('number'):
                token = self.stream.next()
                return self._postfix(_number(token, negate=True))
            return Op('neg', (self._unary(),))
        if self.stream.accept('!'):
            return Op('not', (self._unary(),))
        return self._postfix(self._atom())

    def _postfix(self, expr: Expr) -> Expr:
        if self.stream.at_kind('tag'):
            token = self.stream.next()
            if not self.relational:
                raise self.stream.error('Memory tags are only allowed in assertions.', token)
            return _tag_all(expr, token.value)
        return expr

    def _atom(self) -> Expr:
        token = self.stream.peek()
        if token.kind == 'number':
            self.stream.next()
            return _number(token)
        if token.kind == 'ident':
            if token.text in ('true', 'false'):
                self.stream.next()
                return Lit(token.text == 'true', BOOL)
            if token.text in KEYWORDS:
                raise self.stream.error(f'Unexpected keyword `{token.text}` in an expression.', token)
            self.stream.next()
            if self.stream.at('(') and self.stream.peek().start == token.end:
                return self._call(token)
            return Var(token.text)
        if self.stream.accept('('):
            inner = self.expression()
            self.stream.expect(')')
            return inner
        raise self.stream.error(f'Expected an expression but found {describe(token)}.', token)

    def _call(self, name: Token) -> Expr:
        if not self.optable.has_op(name.text):
            raise UnknownOperation(f'{self.stream.source}:{name.line}:{name.column}: the operation '
                                   f'`{name.text}` is not registered.')
        self.stream.expect('(')
        args = self.arguments(')')
        return Op(name.text, tuple(args))

    def arguments(self, closing: str) -> List[Expr]:
        args: List[Expr] = []
        if not self.stream.accept(closing):
            args.append(self.expression())
            while self.stream.accept(','):
                args.append(self.expression())
            self.stream.expect(closing)
        return args


def _number(token: Token, negate: bool = False) -> Lit:
    value = -token.value if negate else token.value
    if isinstance(value, int):
        return Lit(value, INT)
    return Lit(Fraction(value), REAL)


def _tag_all(expr: Any, side: int) -> Any:
    if isinstance(expr, Var):
        return SVar(expr.name, side)
    if isinstance(expr, SVar):
        raise PWhileSyntaxError(f'The variable `{expr.name}` is tagged twice.')
    if isinstance(expr, Op):
        return Op(expr.name, tuple(_tag_all(arg, side) for arg in expr.args))
    return expr


class PWhileParser:
    """Parses .pwhile source text: a prelude of type, operation and parameter declarations, variable
    declarations, then the program body."""

    def __init__(self, text: str, optable: Optional[OpTable] = None, source: str = '<text>'):
        """
        :param text: The program text.
        :param optable: The operation table (the built-in table by default).
        :param source: The name reported in syntax errors, e.g. the file path.
        """
        self.optable: OpTable = optable or default_optable()
        self.source: str = source
        self.stream: TokenStream = TokenStream(Lexer(text, source).tokens(), source)
        self.expressions: ExprParser = ExprParser(self.stream, self.optable)
        self._types: Dict[str, Ty] = dict(BASE_TYPES)

    def parse(self) -> Program:
        """:return: The parsed (untyped) program."""
        types: Dict[str, Ty] = {}
        params: Dict[str, Param] = {}
        ops: Dict[str, OpDecl] = {}
        entries: List[Tuple[str, Ty]] = []

        # Prelude and declarations:
        while True:
            if self.stream.accept('type'):
                name, ty = self._type_declaration()
                types[name] = ty
                self._types[name] = ty
            elif self.stream.accept('op'):
                decl = self._op_declaration()
                if not ops:
                    self.optable = self.optable.copy()
                    self.expressions.optable = self.optable
                self.optable.declare(decl)
                ops[decl.name] = decl
            elif self.stream.accept('param'):
                name, param = self._param_declaration()
                if name in params:
                    raise self.stream.error(f'The parameter `{name}` is declared twice.')
                params[name] = param
            elif self.stream.at('var') or self.stream.at('vars'):
                self.stream.next()
                entries.extend(self._var_declarations())
            else:
                break

        names = [name for name, _ in entries]
        for name in names:
            if names.count(name) > 1:
                raise self.stream.error(f'The variable `{name}` occurs more than once in the typing context.')
            if name in params:
                raise self.stream.error(f'The variable `{name}` clashes with a parameter of the same name.')

        body = self.commands(closing=None)
        self.stream.expect_kind('eof', 'the end of the program')
        logger.debug('Parsed %s: %d variables, %d parameters', self.source, len(entries), len(params))
        return Program(types, params, TypingContext(entries), body, ops)

    def _type(self) -> Ty:
        token = self.stream.expect_kind('ident', 'a type')
        if token.text not in self._types:
            raise self.stream.error(f'Unknown type `{token.text}`.', token)
        return self._types[token.text]

    def _int_literal(self) -> int:
        negative = bool(self.stream.accept('-'))
        token = self.stream.expect_kind('number', 'an integer')
        if not isinstance(token.value, int):
            raise self.stream.error(f'Expected an integer but found `{token.text}`.', token)
        return -token.value if negative else token.value

    def _type_declaration(self) -> Tuple[str, Ty]:
        name = self.stream.expect_kind('ident', 'a type name')
        if name.text in self._types:
            raise self.stream.error(f'The type `{name.text}` is already defined.', name)
        self.stream.expect('=')
        shape = self.stream.expect_kind('ident', 'a type definition')
        if shape.text == 'vec_real':
            self.stream.expect('(')
            dim = self._int_literal()
            self.stream.expect(')')
            if dim <= 0:
                raise self.stream.error(f'The vector dimension {dim} must be positive.', shape)
            ty = Ty(name.text, 'vec', dim=dim, opaque=True)
        elif shape.text == 'discrete':
            self.stream.expect('(')
            lo = self._int_literal()
            self.stream.expect(',')
            hi = self._int_literal()
            self.stream.expect(')')
            if lo > hi:
                raise self.stream.error(f'The range discrete({lo}, {hi}) is empty.', shape)
            ty = Ty(name.text, 'int', bounds=(lo, hi))
        elif shape.text in BASE_TYPES:
            ty = Ty(name.text, shape.text, opaque=True)
        else:
            raise self.stream.error(f'Unknown type definition `{shape.text}`.', shape)
        self.stream.expect(';')
        return name.text, ty

    def _op_declaration(self) -> OpDecl:
        name = self.stream.expect_kind('ident', 'an operation name')
        if name.text in KEYWORDS or self.optable.has_op(name.text):
            raise self.stream.error(f'The operation `{name.text}` is already defined.', name)
        self.stream.expect('(')
        params: List[Tuple[str, Ty]] = []
        if not self.stream.accept(')'):
            while True:
                arg = self.stream.expect_kind('ident', 'an argument name')
                if arg.text in KEYWORDS or any(arg.text == other for other, _ in params):
                    raise self.stream.error(f'The argument name `{arg.text}` is not allowed here.', arg)
                self.stream.expect(':')
                params.append((arg.text, self._type()))
                if not self.stream.accept(','):
                    break
            self.stream.expect(')')
        self.stream.expect(':')
        result = self._type()
        sensitivity: Dict[int, Fraction] = {}
        if self.stream.accept('sensitivity'):
            self.stream.expect('{')
            while not self.stream.accept('}'):
                index = self._argument_index([arg for arg, _ in params])
                self.stream.expect(':')
                value = parse_constant(self.stream)
                if isinstance(value, (bool, tuple)) or value < 0:
                    raise self.stream.error(f'The sensitivity of `{name.text}` must be a nonnegative number.')
                sensitivity[index] = Fraction(value)
                if not self.stream.accept(','):
                    self.stream.expect('}')
                    break
        body = None
        if self.stream.accept('='):
            body = self.expressions.expression()
        self.stream.expect(';')
        return OpDecl(name.text, tuple(params), result, tuple(sorted(sensitivity.items())), body)

    def _argument_index(self, names: List[str]) -> int:
        """Reads an argument of a sensitivity map, by name or by 0-based position."""
        token = self.stream.next()
        if token.kind == 'ident' and token.text in names:
            return names.index(token.text)
        if token.kind == 'number' and isinstance(token.value, int) and 0 <= token.value < len(names):
            return token.value
        raise self.stream.error(f'Expected an argument of the operation but found {describe(token)}.', token)

    def _param_declaration(self) -> Tuple[str, Param]:
        from .typecheck import coerce_value
        name = self.stream.expect_kind('ident', 'a parameter name')
        self.stream.expect(':')
        ty = self._type()
        self.stream.expect('=')
        value = parse_constant(self.stream)
        self.stream.expect(';')
        try:
            return name.text, Param(ty, coerce_value(value, ty, name.text))
        except ValueError as error:
            raise self.stream.error(str(error), name)

    def _var_declarations(self) -> List[Tuple[str, Ty]]:
        entries: List[Tuple[str, Ty]] = []
        while True:
            name = self.stream.expect_kind('ident', 'a variable name')
            if name.text in KEYWORDS:
                raise self.stream.error(f'`{name.text}` is a keyword.', name)
            self.stream.expect(':')
            entries.append((name.text, self._type()))
            if self.stream.accept(','):
                continue
            self.stream.expect(';')
            # `vars` blocks continue while declarations follow:
            if self.stream.at_kind('ident') and self.stream.at(':', 1):
                continue
            return entries

    def commands(self, closing: Optional[str]) -> Cmd:
        """Parses `;`-separated commands up to the closing token (or the end of input)."""
        parts: List[Cmd] = [self.command()]
        while self.stream.accept(';'):
            if (closing is not None and self.stream.at(closing)) or self.stream.at_kind('eof'):
                break
            parts.append(self.command())
        return seq(*parts)

    def _block(self) -> Cmd:
        self.stream.expect('{')
        body = self.commands('}')
        self.stream.expect('}')
        return body

    def command(self) -> Cmd:
        token = self.stream.peek()
        if self.stream.accept('skip'):
            return Skip()
        if self.stream.accept('null'):
            return Null()
        if self.stream.accept('if'):
            guard = self.expressions.expression()
            self.stream.expect('then')
            then = self._block()
            self.stream.expect('else')
            return If(guard, then, self._block())
        if self.stream.accept('while'):
            guard = self.expressions.expression()
            self.stream.expect('do')
            return While(guard, self._block())
        if token.kind == 'ident' and token.text not in KEYWORDS:
            self.stream.next()
            if self.stream.accept('<-'):
                return Assign(token.text, self.expressions.expression())
            if self.stream.accept('<$'):
                return Sample(token.text, self.distribution())
            raise self.stream.error(f'Expected `<-` or `<$` after `{token.text}`.')
        raise self.stream.error(f'Expected a command but found {describe(token)}.', token)

    def distribution(self) -> DistExpr:
        name = self.stream.expect_kind('ident', 'a distribution')
        if not self.optable.has_dist(name.text):
            raise UnknownOperation(f'{self.source}:{name.line}:{name.column}: the distribution '
                                   f'`{name.text}` is not registered.')
        self.stream.expect('(')
        params = self.expressions.arguments(')')
        args: List[Expr] = []
        if self.stream.at('(') and self.stream.peek().start == self.stream.tokens[self.stream.index - 1].end:
            self.stream.expect('(')
            args = self.expressions.arguments(')')
        return DistExpr(name.text, tuple(params), tuple(args))


def parse_constant(stream: TokenStream) -> Any:
    """Parses a literal constant: a number (optionally negative), a rational (n / d), a boolean or a
    vector [a, b, ...]."""
    if stream.accept('('):
        numerator = parse_constant(stream)
        stream.expect('/')
        denominator = parse_constant(stream)
        stream.expect(')')
        if isinstance(numerator, (bool, tuple)) or isinstance(denominator, (bool, tuple)) or denominator == 0:
            raise stream.error('A rational constant needs two numbers and a nonzero denominator.')
        return Fraction(numerator) / Fraction(denominator)
    if stream.accept('['):
        values = []
        if not stream.accept(']'):
            values.append(parse_constant(stream))
            while stream.accept(','):
                values.append(parse_constant(stream))
            stream.expect(']')
        return tuple(values)
    if stream.accept('true'):
        return True
    if stream.accept('false'):
        return False
    negative = bool(stream.accept('-'))
    token = stream.expect_kind('number', 'a constant')
    return -token.value if negative else token.value


def parse_program(text: str, optable: Optional[OpTable] = None, source: str = '<text>') -> Program:
    """
    Parses and typechecks a pWHILE program.

    :param text: The program text.
    :param optable: The operation table.
    :param source: The name used in error messages.
    :return: The typed program.
    """
    from .typecheck import typecheck_program
    program = PWhileParser(text, optable, source).parse()
    return typecheck_program(program, optable or default_optable())


def parse_file(path: str, optable: Optional[OpTable] = None) -> Program:
    """Parses and typechecks a .pwhile file."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f'The path {path} does not contain a .pwhile file.')
    with open(path, 'r', encoding='utf-8') as source_file:
        return parse_program(source_file.read(), optable, path)


def parse_command(text: str, program: Program, optable: Optional[OpTable] = None) -> Cmd:
    """Parses and typechecks a command in the context of a program's declarations."""
    from .typecheck import typecheck_command
    optable = program_optable(program, optable)
    parser = PWhileParser(text, optable, '<command>')
    command = parser.commands(closing=None)
    parser.stream.expect_kind('eof', 'the end of the command')
    return typecheck_command(command, program, optable)


def parse_expression(text: str, optable: Optional[OpTable] = None, relational: bool = False,
                     source: str = '<expression>') -> Any:
    """Parses (without typechecking) a single expression."""
    stream = TokenStream(Lexer(text, source).tokens(), source)
    expr = ExprParser(stream, optable or default_optable(), relational).expression()
    stream.expect_kind('eof', 'the end of the expression')
    return expr
