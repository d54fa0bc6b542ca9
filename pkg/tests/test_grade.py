from aprhl_toolkit.grade import Grade, GradeError, grade_seq, grade_comp, grade_leq, grade_join, grade_sum
from fractions import Fraction
from hypothesis import given, strategies as st
import math
import pytest

exact = st.fractions(min_value=0, max_value=5, max_denominator=20)
grades = st.builds(Grade, exact, st.fractions(min_value=0, max_value=1, max_denominator=20))


class TestGrade:
    """Ensures grades stay in the grade monoid and keep exact components exact."""

    def test_exact_components(self):
        grade = Grade(Fraction(1, 2), 0.25)
        assert grade.log_gamma == Fraction(1, 2)
        assert grade.delta == 0.25
        assert grade.eps == Fraction(1, 2)

    @pytest.mark.parametrize('log_gamma, delta', [(-1, 0), (0, -Fraction(1, 10))])
    def test_negative_components(self, log_gamma, delta):
        """Ensures negative components raise an error."""
        with pytest.raises(GradeError):
            Grade(log_gamma, delta)

    def test_from_gamma_keeps_rational_gamma(self):
        """Ensures a rational ratio is kept exactly next to its logarithm."""
        grade = Grade.from_gamma(3)
        assert grade.gamma == 3
        assert math.isclose(grade.log_gamma, math.log(3))
        assert Grade.from_gamma(1) == Grade.identity()

    def test_from_gamma_below_one(self):
        with pytest.raises(GradeError):
            Grade.from_gamma(Fraction(1, 2))
        with pytest.raises(GradeError):
            Grade.from_gamma(0.5)

    def test_identity_gamma(self):
        assert Grade.identity().gamma == 1
        assert Grade.identity().is_exact()

    def test_float_equality_tolerance(self):
        """Ensures grades computed along different float paths compare equal."""
        assert Grade(math.log(6), 0) == Grade(math.log(2) + math.log(3), 0)


class TestGradeAlgebra:
    """Ensures the sequential and composition operations follow their closed forms."""

    def test_seq(self):
        g = grade_seq(Grade(Fraction(1, 2), Fraction(1, 10)), Grade(Fraction(1, 4), Fraction(1, 5)))
        assert g == Grade(Fraction(3, 4), Fraction(3, 10))

    def test_seq_exact_gamma(self):
        """Ensures the product of rational ratios stays exact."""
        g = grade_seq(Grade.from_gamma(2), Grade.from_gamma(3))
        assert g.gamma == 6

    def test_comp(self):
        """Ensures composition takes the larger of the two cross terms."""
        g1, g2 = Grade.from_gamma(2, Fraction(1, 10)), Grade.from_gamma(3, Fraction(1, 20))
        g = grade_comp(g1, g2)
        assert g.gamma == 6
        assert g.delta == Fraction(1, 20) + 3 * Fraction(1, 10)

    def test_comp_balanced(self):
        """Ensures equal cross terms give their common value."""
        g = grade_comp(Grade.from_gamma(2, Fraction(1, 10)), Grade.from_gamma(3, Fraction(1, 5)))
        assert g.gamma == 6 and g.delta == Fraction(1, 2)

    @given(grades, grades)
    def test_comp_covers_both_directions(self, g1, g2):
        g = grade_comp(g1, g2)
        assert g.delta >= g1.delta + g1.gamma * g2.delta
        assert g.delta >= g2.delta + g2.gamma * g1.delta

    @pytest.mark.parametrize('first, second', [
        (Grade(Fraction(1, 3), 0), Grade(1 / 3, 0)),
        (Grade(0.1 + 0.2, Fraction(1, 10)), Grade(0.3, 0.1)),
        (Grade.from_gamma(2, Fraction(1, 4)), Grade(math.log(2), 0.25)),
        (Grade(1 + 5e-10, 0), Grade(1 + 5e-10 + 1e-13, 0)),
    ])
    def test_equal_grades_hash_alike(self, first: Grade, second: Grade):
        """Ensures grades that compare equal within the tolerance land in the same set slot."""
        assert first == second
        assert hash(first) == hash(second)
        assert len({first, second}) == 1

    def test_leq(self):
        assert grade_leq(Grade(1, 0), Grade(1, Fraction(1, 2)))
        assert not grade_leq(Grade(2, 0), Grade(1, 1))

    def test_join(self):
        assert grade_join(Grade(2, 0), Grade(1, 1)) == Grade(2, 1)
        assert grade_join(Grade(1, 0), Grade(2, 0)) == Grade(2, 0)

    def test_sum(self):
        assert grade_sum([]) == Grade.identity()
        assert grade_sum([Grade(1, 0)] * 3) == Grade(3, 0)

    @given(grades, grades, grades)
    def test_seq_associative(self, g1, g2, g3):
        assert grade_seq(grade_seq(g1, g2), g3) == grade_seq(g1, grade_seq(g2, g3))

    @given(grades)
    def test_seq_identity(self, g):
        assert grade_seq(Grade.identity(), g) == g
        assert grade_seq(g, Grade.identity()) == g

    @given(grades, grades)
    def test_seq_monotone(self, g1, g2):
        """Ensures composing never lowers a grade."""
        assert grade_leq(g1, grade_seq(g1, g2))
