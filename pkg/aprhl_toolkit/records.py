from .aputils import to_fraction
from .lang.lexer import Lexer, Token, TokenStream, PWhileSyntaxError, describe
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple
import math


class RecordSyntaxError(PWhileSyntaxError):
    """An exception raised when a proof script, audit spec or lift-check file is malformed, or when one
    of its values cannot be evaluated."""
    pass


@dataclass(frozen=True)
class Value:
    """An unevaluated record value: a literal, a name, a call, a collection or an operator node."""

    kind: str
    args: Tuple[Any, ...]
    token: Token


@dataclass(frozen=True)
class Field:
    name: str
    value: Value
    token: Token


BINARY = {
    '+': lambda a, b: a + b,
    '-': lambda a, b: a - b,
    '*': lambda a, b: a * b,
    '/': lambda a, b: Fraction(a) / Fraction(b) if _exact(a) and _exact(b) else a / b,
    '==': lambda a, b: a == b,
    '!=': lambda a, b: a != b,
    '<': lambda a, b: a < b,
    '<=': lambda a, b: a <= b,
    '>': lambda a, b: a > b,
    '>=': lambda a, b: a >= b,
}

_LEVELS = (('or', '||'), ('and', '&&'), ('==', '!=', '<', '<=', '>', '>='), ('+', '-'), ('*', '/'))


def _exact(value: Any) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def _number(value: Any) -> Any:
    """Integral rationals become ints."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value


def _exp(value: Any) -> Any:
    return 1 if value == 0 else math.exp(value)


def _log(value: Any) -> Any:
    if value <= 0:
        raise ValueError(f'log({value}) is undefined.')
    return 0 if value == 1 else math.log(value)


def _sqrt(value: Any) -> Any:
    if _exact(value):
        value = Fraction(value)
        root_n, root_d = math.isqrt(value.numerator), math.isqrt(value.denominator)
        if root_n * root_n == value.numerator and root_d * root_d == value.denominator:
            return _number(Fraction(root_n, root_d))
    return math.sqrt(value)


def _conj(*parts: str) -> str:
    if not parts:
        return 'true'
    return ' && '.join(f'({part})' for part in parts)


BUILTINS: Dict[str, Callable[..., Any]] = {
    'exp': _exp,
    'log': _log,
    'sqrt': _sqrt,
    'min': min,
    'max': max,
    'abs': abs,
    'size': lambda queries: int(queries),
    'float': float,
    'fraction': to_fraction,
    'conj': _conj,
}


class RecordReader:
    """
    A reader for the record syntax shared by proof scripts, audit specs and lift-check files: items are
    keywords followed by parenthesised field records `(name: value, ...)` and brace blocks.
    """

    def __init__(self, text: str, source: str = '<record>'):
        self.source: str = source
        self.stream: TokenStream = TokenStream(Lexer(text, source).tokens(), source)

    def error(self, message: str, token: Optional[Token] = None) -> RecordSyntaxError:
        token = token or self.stream.peek()
        return RecordSyntaxError(message, token.line, token.column, self.source)

    def location(self, token: Token) -> str:
        return f'{self.source}:{token.line}:{token.column}'

    def header(self, keyword: str, versions: Tuple[int, ...] = (1,)) -> int:
        """Reads the mandatory `keyword <version>` header."""
        token = self.stream.peek()
        if not self.stream.at(keyword):
            raise self.error(f'The file must start with `{keyword} <version>`, found {describe(token)}.', token)
        self.stream.next()
        version = self.stream.expect_kind('number', 'a version number')
        if version.value not in versions:
            raise self.error(f'Unsupported {keyword} version {version.text}; expected one of {list(versions)}.',
                             version)
        return version.value

    def at_end(self) -> bool:
        return self.stream.at_kind('eof')

    def name(self) -> Tuple[str, Token]:
        """Reads an identifier; adjacent `-ident` pieces are joined, e.g. `cond-l` or `forall-eq`."""
        first = self.stream.expect_kind('ident', 'a name')
        parts, end = [first.text], first.end
        while self.stream.at('-') and self.stream.peek().start == end and \
                self.stream.peek(1).kind == 'ident' and self.stream.peek(1).start == end + 1:
            self.stream.next()
            piece = self.stream.next()
            parts.append(piece.text)
            end = piece.end
        return '-'.join(parts), first

    def fields(self) -> List[Field]:
        """Reads `(name: value, ...)`; the parentheses are optional when the record is empty."""
        result: List[Field] = []
        if not self.stream.accept('('):
            return result
        seen = set()
        while not self.stream.at(')'):
            name, token = self.name()
            if name in seen:
                raise self.error(f'The field `{name}` is given twice.', token)
            seen.add(name)
            self.stream.expect(':')
            result.append(Field(name, self.value(), token))
            if not self.stream.accept(','):
                break
        self.stream.expect(')')
        return result

    # Values:

    def value(self) -> Value:
        token = self.stream.peek()
        if self.stream.accept('if'):
            condition = self.value()
            self.stream.expect('then')
            then = self.value()
            self.stream.expect('else')
            return Value('if', (condition, then, self.value()), token)
        return self._binary(0)

    def _binary(self, level: int) -> Value:
        if level == len(_LEVELS):
            return self._unary()
        left = self._binary(level + 1)
        while True:
            token = self.stream.peek()
            if token.kind in ('op', 'ident') and token.text in _LEVELS[level]:
                self.stream.next()
                operator = {'||': 'or', '&&': 'and'}.get(token.text, token.text)
                left = Value('binary', (operator, left, self._binary(level + 1)), token)
                if level == 2 and self.stream.peek().text in _LEVELS[2] and self.stream.peek().kind == 'op':
                    raise self.error('Comparisons do not chain; add parentheses.')
            else:
                return left

    def _unary(self) -> Value:
        token = self.stream.peek()
        if self.stream.accept('-'):
            return Value('neg', (self._unary(),), token)
        if self.stream.accept('not') or self.stream.accept('!'):
            return Value('not', (self._unary(),), token)
        return self._atom()

    def _atom(self) -> Value:
        token = self.stream.next()
        if token.kind == 'number':
            return Value('literal', (token.value,), token)
        if token.kind == 'string':
            return Value('literal', (token.value,), token)
        if token.kind == 'ident':
            if token.text in ('true', 'false'):
                return Value('literal', (token.text == 'true',), token)
            if self.stream.at('(') and self.stream.peek().start == token.end:
                self.stream.next()
                args = self._items(')')
                return Value('call', (token.text, tuple(args)), token)
            return Value('name', (token.text,), token)
        if token.text == '(':
            first = self.value()
            if self.stream.accept(')'):
                return first
            self.stream.expect(',')
            return Value('tuple', (first, *self._items(')')), token)
        if token.text == '[':
            if self.stream.accept(']'):
                return Value('list', (), token)
            first = self.value()
            if self.stream.accept('for'):
                variable = self.stream.expect_kind('ident', 'a variable').text
                self.stream.expect('in')
                low = self.value()
                self.stream.expect('..')
                high = self.value()
                self.stream.expect(']')
                return Value('comprehension', (first, variable, low, high), token)
            items = [first]
            while self.stream.accept(','):
                if self.stream.at(']'):
                    break
                items.append(self.value())
            self.stream.expect(']')
            return Value('list', tuple(items), token)
        if token.text == '{':
            fields: List[Tuple[str, Value]] = []
            while not self.stream.at('}'):
                name, _ = self.name()
                self.stream.expect(':')
                fields.append((name, self.value()))
                if not self.stream.accept(','):
                    break
            self.stream.expect('}')
            return Value('record', tuple(fields), token)
        raise self.error(f'Expected a value but found {describe(token)}.', token)

    def _items(self, closing: str) -> List[Value]:
        items: List[Value] = []
        while not self.stream.at(closing):
            items.append(self.value())
            if not self.stream.accept(','):
                break
        self.stream.expect(closing)
        return items

    # Evaluation:

    def evaluate(self, value: Value, env: Mapping[str, Any],
                 builtins: Optional[Mapping[str, Callable[..., Any]]] = None) -> Any:
        """
        Evaluates a record value. Names are looked up in `env`; calls go to the built-in functions.

        :raises RecordSyntaxError: When a name is unbound or an operation fails, located at the value.
        """
        functions = dict(BUILTINS)
        functions.update(builtins or {})
        try:
            return self._evaluate(value, env, functions)
        except RecordSyntaxError:
            raise
        except (TypeError, ValueError, ZeroDivisionError, OverflowError) as error:
            raise self.error(str(error), value.token)

    def _evaluate(self, value: Value, env: Mapping[str, Any], functions: Mapping[str, Callable[..., Any]]) -> Any:
        kind, args = value.kind, value.args
        if kind == 'literal':
            return args[0]
        if kind == 'name':
            if args[0] not in env:
                raise self.error(f'The name `{args[0]}` is not bound.', value.token)
            return env[args[0]]
        if kind == 'call':
            name, items = args
            if name not in functions:
                raise self.error(f'Unknown function `{name}`; expected one of {sorted(functions)}.', value.token)
            return functions[name](*[self._evaluate(item, env, functions) for item in items])
        if kind == 'tuple':
            return tuple(self._evaluate(item, env, functions) for item in args)
        if kind == 'list':
            return [self._evaluate(item, env, functions) for item in args]
        if kind == 'record':
            return {name: self._evaluate(item, env, functions) for name, item in args}
        if kind == 'comprehension':
            body, variable, low, high = args
            low, high = self._integer(low, env, functions), self._integer(high, env, functions)
            return [self._evaluate(body, {**env, variable: k}, functions) for k in range(low, high + 1)]
        if kind == 'if':
            condition = self._evaluate(args[0], env, functions)
            return self._evaluate(args[1] if condition else args[2], env, functions)
        if kind == 'neg':
            return -self._evaluate(args[0], env, functions)
        if kind == 'not':
            return not self._evaluate(args[0], env, functions)
        operator, left, right = args
        if operator == 'and':
            return bool(self._evaluate(left, env, functions)) and bool(self._evaluate(right, env, functions))
        if operator == 'or':
            return bool(self._evaluate(left, env, functions)) or bool(self._evaluate(right, env, functions))
        result = BINARY[operator](self._evaluate(left, env, functions), self._evaluate(right, env, functions))
        return _number(result)

    def _integer(self, value: Value, env: Mapping[str, Any], functions: Mapping[str, Callable[..., Any]]) -> int:
        result = _number(self._evaluate(value, env, functions))
        if isinstance(result, bool) or not isinstance(result, int):
            raise self.error(f'Expected an integer, found {result!r}.', value.token)
        return result

    def range_of(self, low: Value, high: Value, env: Mapping[str, Any]) -> range:
        """:return: The inclusive integer range low .. high."""
        functions = dict(BUILTINS)
        return range(self._integer(low, env, functions), self._integer(high, env, functions) + 1)
