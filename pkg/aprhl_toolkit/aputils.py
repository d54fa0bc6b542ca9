from fractions import Fraction
from typing import Any, Union
import math

Scalar = Union[int, float, Fraction]


def to_fraction(value: Any) -> Fraction:
    """
    Converts a number (or a numeric string such as '0.25' or '1/3') into an exact rational. Floats are
    converted through their shortest decimal representation so that 0.1 becomes 1/10.

    :param value: The value to convert.
    :return: The exact rational.
    """
    if isinstance(value, bool):
        raise TypeError(f'The boolean `{value}` is not a number.')
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f'The value `{value}` is not finite.')
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f'The value `{value!r}` cannot be converted into a rational.')


def is_exact(value: Any) -> bool:
    """:return: True if the value is an int or a Fraction (but not a bool)."""
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def exp_scalar(value: Scalar) -> Scalar:
    """Computes exp exactly where possible (exp(0) = 1), otherwise as a float."""
    if value == 0:
        return Fraction(1)
    return math.exp(value)


def decimal_string(value: Fraction) -> Union[str, None]:
    """
    Renders a rational as a terminating decimal literal (always containing a '.'), or returns None when
    the decimal expansion does not terminate.
    """
    denominator = value.denominator
    twos = fives = 0
    while denominator % 2 == 0:
        denominator //= 2
        twos += 1
    while denominator % 5 == 0:
        denominator //= 5
        fives += 1
    if denominator != 1:
        return None
    places = max(twos, fives)
    scaled = abs(value.numerator) * (10 ** places) // value.denominator
    digits = str(scaled).rjust(places + 1, '0')
    whole, frac = digits[:len(digits) - places], digits[len(digits) - places:]
    sign = '-' if value < 0 else ''
    return f'{sign}{whole}.{frac or "0"}'


def format_scalar(value: Any) -> str:
    """Formats a numeric value for human-readable reports."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        rendered = decimal_string(value)
        return rendered if rendered is not None and len(rendered) <= 14 else f'{value} (~{float(value):.6g})'
    if isinstance(value, float):
        return f'{value:.10g}'
    return str(value)
