from .aputils import Scalar, to_fraction, is_exact, exp_scalar, format_scalar
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Tuple
import math

# Float comparisons of grades (e.g. irrational log_gamma values) use this relative slack:
GRADE_TOLERANCE: float = 1e-12


class GradeError(Exception):
    """An exception raised when a grade would leave the monoid ([1, inf), x, 1) x ([0, inf), +, 0)."""
    pass


def _normalise(value: Any) -> Scalar:
    if isinstance(value, float):
        return value
    return to_fraction(value)


@dataclass(frozen=True)
class Grade:
    log_gamma: Scalar
    """The canonical ratio component ε = ln γ (exact rational where possible)."""

    delta: Scalar
    """The additive slack δ."""

    exact_gamma: Optional[Fraction] = field(default=None, compare=False)
    """The ratio γ itself, when it is a known rational whose logarithm is not."""

    def __post_init__(self):
        object.__setattr__(self, 'log_gamma', _normalise(self.log_gamma))
        object.__setattr__(self, 'delta', _normalise(self.delta))
        if self.log_gamma < 0:
            raise GradeError(f'The grade log_gamma `{self.log_gamma}` must be nonnegative (gamma >= 1).')
        if self.delta < 0:
            raise GradeError(f'The grade delta `{self.delta}` must be nonnegative.')

    @staticmethod
    def from_gamma(gamma: Any, delta: Any = 0) -> 'Grade':
        """
        Builds a grade from its multiplicative form.

        :param gamma: The ratio γ >= 1; a rational γ is kept exactly.
        :param delta: The slack δ.
        :return: The grade.
        """
        if isinstance(gamma, float):
            if gamma < 1:
                raise GradeError(f'The grade gamma `{gamma}` must be at least 1.')
            return Grade(math.log(gamma), delta)
        gamma = to_fraction(gamma)
        if gamma < 1:
            raise GradeError(f'The grade gamma `{gamma}` must be at least 1.')
        if gamma == 1:
            return Grade(0, delta)
        return Grade(math.log(gamma), delta, exact_gamma=gamma)

    @staticmethod
    def identity() -> 'Grade':
        return Grade(0, 0)

    @property
    def gamma(self) -> Scalar:
        """:return: γ = exp(log_gamma), exact when known."""
        if self.exact_gamma is not None:
            return self.exact_gamma
        return exp_scalar(self.log_gamma)

    @property
    def eps(self) -> Scalar:
        return self.log_gamma

    def is_exact(self) -> bool:
        """:return: True if both γ and δ are exact rationals."""
        return is_exact(self.delta) and (self.exact_gamma is not None or self.log_gamma == 0)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Grade):
            return NotImplemented
        return _same(self.log_gamma, other.log_gamma) and _same(self.delta, other.delta)

    def __hash__(self) -> int:
        # Consistent with the tolerant __eq__:
        return hash(Grade)

    def __str__(self) -> str:
        return f'(gamma=exp({format_scalar(self.log_gamma)}), delta={format_scalar(self.delta)})'

    def as_pair(self) -> Tuple[Scalar, Scalar]:
        return self.gamma, self.delta

    def to_record(self) -> dict:
        return {
            'gamma': float(self.gamma),
            'eps': format_scalar(self.log_gamma),
            'delta': format_scalar(self.delta),
        }


def _same(a: Scalar, b: Scalar) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=GRADE_TOLERANCE, abs_tol=GRADE_TOLERANCE)


def _leq(a: Scalar, b: Scalar) -> bool:
    if is_exact(a) and is_exact(b):
        return a <= b
    return a <= b or _same(a, b)


def _exact_product(g1: Grade, g2: Grade) -> Optional[Fraction]:
    gammas = [g.exact_gamma if g.exact_gamma is not None else (Fraction(1) if g.log_gamma == 0 else None)
              for g in (g1, g2)]
    if None in gammas or (g1.exact_gamma is None and g2.exact_gamma is None):
        return None
    return gammas[0] * gammas[1]


def grade_seq(g1: Grade, g2: Grade) -> Grade:
    """
    Sequential composition of grades: (γγ', δ + δ').

    :return: The composed grade.
    """
    gamma = _exact_product(g1, g2)
    return Grade(g1.log_gamma + g2.log_gamma, g1.delta + g2.delta, exact_gamma=gamma)


def grade_comp(g1: Grade, g2: Grade) -> Grade:
    """
    Composition of grades for relation composition: (γγ', max(δ + γδ', δ' + γ'δ)).

    The forward direction of the composed lifting needs δ + γδ' and the backward direction needs
    δ' + γ'δ, so a lifting checked in both directions takes the larger.

    :return: The composed grade.
    """
    gamma = _exact_product(g1, g2)
    delta = max(g1.delta + g1.gamma * g2.delta, g2.delta + g2.gamma * g1.delta)
    return Grade(g1.log_gamma + g2.log_gamma, delta, exact_gamma=gamma)


def grade_leq(g1: Grade, g2: Grade) -> bool:
    """:return: True if g1 is below g2 in the product order."""
    return _leq(g1.log_gamma, g2.log_gamma) and _leq(g1.delta, g2.delta)


def grade_join(g1: Grade, g2: Grade) -> Grade:
    """:return: The componentwise maximum of two grades."""
    return g1 if grade_leq(g2, g1) else (g2 if grade_leq(g1, g2) else
                                          Grade(max(g1.log_gamma, g2.log_gamma), max(g1.delta, g2.delta)))


def grade_sum(grades) -> Grade:
    """:return: The sequential composition of a list of grades (the identity for an empty list)."""
    total = Grade.identity()
    for grade in grades:
        total = grade_seq(total, grade)
    return total
