from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional


class PWhileSyntaxError(Exception):
    """An exception raised when program, assertion or record text cannot be parsed. The message names
    the line and column of the offending token."""

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = '<text>'):
        self.line: int = line
        self.column: int = column
        self.source: str = source
        super().__init__(f'{source}:{line}:{column}: {message}')


@dataclass(frozen=True)
class Token:
    kind: str
    """One of 'ident', 'number', 'string', 'tag', 'op' or 'eof'."""

    text: str
    """The source text of the token."""

    value: Any
    """The decoded value: an int or Fraction for numbers, the contents of strings, 1 or 2 for tags."""

    line: int
    column: int
    start: int
    end: int


# Longest operators first:
OPERATORS = ('==>', '<-', '<$', '..', '==', '!=', '<=', '>=', '&&', '||',
             '<', '>', '=', '+', '-', '*', '/', '!', '(', ')', '{', '}', '[', ']', ';', ':', ',')


class Lexer:
    """Splits text into tokens. A tag `<1>` or `<2>` directly after an identifier or a closing
    parenthesis marks a relational variable or expression."""

    def __init__(self, text: str, source: str = '<text>'):
        self.text: str = text
        self.source: str = source

    def error(self, message: str, position: int) -> PWhileSyntaxError:
        line = self.text.count('\n', 0, position) + 1
        column = position - (self.text.rfind('\n', 0, position) + 1) + 1
        return PWhileSyntaxError(message, line, column, self.source)

    def _digits(self, position: int) -> int:
        while position < len(self.text) and self.text[position].isdigit():
            position += 1
        return position

    def tokens(self) -> List[Token]:
        text = self.text
        result: List[Token] = []
        position = 0
        line, line_start = 1, 0

        def make(kind: str, start: int, end: int, value: Any) -> Token:
            return Token(kind, text[start:end], value, line, start - line_start + 1, start, end)

        while position < len(text):
            char = text[position]

            # Whitespace and comments:
            if char == '\n':
                line += 1
                line_start = position + 1
                position += 1
                continue
            if char.isspace():
                position += 1
                continue
            if char == '#':
                while position < len(text) and text[position] != '\n':
                    position += 1
                continue

            # Tags directly after an identifier or a closing parenthesis:
            if char == '<' and result and result[-1].end == position and \
                    (result[-1].kind == 'ident' or result[-1].text == ')') and \
                    text[position + 1:position + 2] in ('1', '2') and text[position + 2:position + 3] == '>':
                result.append(make('tag', position, position + 3, int(text[position + 1])))
                position += 3
                continue

            # Identifiers and keywords:
            if char.isalpha() or char == '_':
                end = position
                while end < len(text) and (text[end].isalnum() or text[end] == '_'):
                    end += 1
                result.append(make('ident', position, end, text[position:end]))
                position = end
                continue

            # Numbers (a '.' only belongs to a number when a digit follows it):
            if char.isdigit():
                end = self._digits(position)
                decimal = False
                if text[end:end + 1] == '.' and text[end + 1:end + 2].isdigit():
                    end = self._digits(end + 1)
                    decimal = True
                if text[end:end + 1] in ('e', 'E'):
                    exponent = end + 1
                    if text[exponent:exponent + 1] in ('+', '-'):
                        exponent += 1
                    if text[exponent:exponent + 1].isdigit():
                        end = self._digits(exponent)
                        decimal = True
                literal = text[position:end]
                result.append(make('number', position, end, Fraction(literal) if decimal else int(literal)))
                position = end
                continue

            # Strings:
            if char == '"':
                end = position + 1
                chars: List[str] = []
                while end < len(text) and text[end] != '"':
                    if text[end] == '\\' and end + 1 < len(text):
                        end += 1
                    if text[end] == '\n':
                        raise self.error('Unterminated string.', position)
                    chars.append(text[end])
                    end += 1
                if end >= len(text):
                    raise self.error('Unterminated string.', position)
                result.append(make('string', position, end + 1, ''.join(chars)))
                position = end + 1
                continue

            # Operators and punctuation:
            for operator in OPERATORS:
                if text.startswith(operator, position):
                    result.append(make('op', position, position + len(operator), operator))
                    position += len(operator)
                    break
            else:
                raise self.error(f'Unexpected character {char!r}.', position)

        result.append(Token('eof', '', None, line, position - line_start + 1, position, position))
        return result


class TokenStream:
    """A cursor over a token list with the usual peek/expect helpers."""

    def __init__(self, tokens: List[Token], source: str = '<text>'):
        self.tokens: List[Token] = tokens
        self.index: int = 0
        self.source: str = source

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        token = self.peek()
        self.index = min(self.index + 1, len(self.tokens) - 1)
        return token

    def at(self, text: str, offset: int = 0) -> bool:
        token = self.peek(offset)
        return token.kind in ('op', 'ident') and token.text == text

    def at_kind(self, kind: str, offset: int = 0) -> bool:
        return self.peek(offset).kind == kind

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        token = self.peek()
        if not self.at(text):
            raise self.error(f'Expected `{text}` but found {describe(token)}.', token)
        return self.next()

    def expect_kind(self, kind: str, what: Optional[str] = None) -> Token:
        token = self.peek()
        if token.kind != kind:
            raise self.error(f'Expected {what or kind} but found {describe(token)}.', token)
        return self.next()

    def error(self, message: str, token: Optional[Token] = None) -> PWhileSyntaxError:
        token = token or self.peek()
        return PWhileSyntaxError(message, token.line, token.column, self.source)


def describe(token: Token) -> str:
    if token.kind == 'eof':
        return 'the end of the input'
    return f'`{token.text}`'
