from aprhl_toolkit import aputils
from fractions import Fraction
import math
import pytest


class TestFractions:
    """Ensures numbers are converted into exact rationals and bad values raise helpful errors."""

    @pytest.mark.parametrize('value, expected', [
        (3, Fraction(3)),
        (0.1, Fraction(1, 10)),
        ('1/3', Fraction(1, 3)),
        (' 0.25 ', Fraction(1, 4)),
        (Fraction(2, 7), Fraction(2, 7)),
    ])
    def test_to_fraction(self, value, expected: Fraction):
        assert aputils.to_fraction(value) == expected

    def test_bool_rejected(self):
        """Ensures booleans are not silently read as 0 and 1."""
        with pytest.raises(TypeError):
            aputils.to_fraction(True)

    def test_not_finite(self):
        with pytest.raises(ValueError):
            aputils.to_fraction(math.inf)

    def test_is_exact(self):
        assert aputils.is_exact(2) and aputils.is_exact(Fraction(1, 2))
        assert not aputils.is_exact(0.5)
        assert not aputils.is_exact(False)

    def test_exp_scalar(self):
        assert aputils.exp_scalar(0) == Fraction(1)
        assert math.isclose(aputils.exp_scalar(1), math.e)


class TestFormatting:
    """Ensures rationals are rendered as decimals where the expansion terminates."""

    @pytest.mark.parametrize('value, expected', [
        (Fraction(1, 4), '0.25'),
        (Fraction(-5, 2), '-2.5'),
        (Fraction(3), '3.0'),
        (Fraction(-1, 20), '-0.05'),
        (Fraction(1, 3), None),
    ])
    def test_decimal_string(self, value: Fraction, expected):
        assert aputils.decimal_string(value) == expected

    @pytest.mark.parametrize('value, expected', [
        (Fraction(4), '4'),
        (Fraction(1, 2), '0.5'),
        (Fraction(1, 3), '1/3 (~0.333333)'),
        (2.5, '2.5'),
        (True, 'True'),
    ])
    def test_format_scalar(self, value, expected: str):
        assert aputils.format_scalar(value) == expected
