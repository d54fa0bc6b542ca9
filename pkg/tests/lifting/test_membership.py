from aprhl_toolkit.grade import Grade
from aprhl_toolkit.lifting import Eq, Explicit, PredicatePair, LiftingError, SupportTooLarge, full_relation, \
    empty_relation, lifting_member, min_delta, skew_distance, endo_member, forall_eq_combine
from aprhl_toolkit.measure import SubDist
from fractions import Fraction
from hypothesis import given, strategies as st
import pytest

ON_FALSE = SubDist([(False, Fraction(3, 4)), (True, Fraction(1, 4))])
ON_TRUE = SubDist([(False, Fraction(1, 4)), (True, Fraction(3, 4))])
LOW = SubDist((v, Fraction(1, 4)) for v in range(4))
HIGH = SubDist((v + 1, Fraction(1, 4)) for v in range(4))
SHIFT = Explicit(frozenset((v, v + 1) for v in range(4)))

# Distributions over {0, 1, 2}:
dists = st.lists(st.fractions(min_value=0, max_value=1, max_denominator=12), min_size=3, max_size=3) \
    .filter(lambda ws: sum(ws) > 0) \
    .map(lambda ws: SubDist((point, w / sum(ws)) for point, w in enumerate(ws)))


class TestLiftingMember:
    """Ensures lifting membership is decided exactly and names the worst event."""

    def test_randomized_response(self):
        assert lifting_member(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(3), symmetric=True)[0]

    def test_violation_certificate(self):
        """Ensures a failed membership comes with the violating event and both sides of the inequality."""
        member, certificate = lifting_member(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(2))
        assert not member
        assert certificate.event == (False,)
        assert certificate.lhs == Fraction(3, 4)
        assert certificate.rhs == Fraction(1, 2)
        assert certificate.excess == Fraction(1, 4)

    def test_delta_absorbs_excess(self):
        assert lifting_member(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(2, Fraction(1, 4)), symmetric=True)[0]

    def test_min_delta(self):
        assert min_delta(ON_FALSE, ON_TRUE, Eq(), 2) == Fraction(1, 4)
        assert min_delta(ON_FALSE, ON_TRUE, Eq(), 3) == 0

    def test_explicit_relation(self):
        """Ensures a shift relation relates two shifted uniform distributions at the identity grade."""
        assert lifting_member(LOW, HIGH, SHIFT, Grade.identity(), symmetric=True)[0]
        assert not lifting_member(LOW, HIGH, Eq(), Grade.identity())[0]
        assert min_delta(LOW, HIGH, Eq(), 1, symmetric=True) == Fraction(1, 4)

    def test_full_and_empty(self):
        assert lifting_member(LOW, HIGH, full_relation(), Grade.identity(), symmetric=True)[0]
        assert min_delta(LOW, HIGH, empty_relation(), 1) == 1

    def test_opposite(self):
        """Ensures the mirrored check uses the converse relation."""
        opposite = SHIFT.opposite()
        assert opposite.contains(1, 0) and not opposite.contains(0, 1)
        assert Eq().opposite() == Eq()

    def test_support_too_large(self):
        """Ensures a connected enumeration beyond the bound raises an error instead of running."""
        nu1 = SubDist((v, Fraction(1, 20)) for v in range(20))
        nu2 = SubDist((v, Fraction(1, 21)) for v in range(21))
        chain = PredicatePair(lambda x, y: y in (x, x + 1), 'chain')
        with pytest.raises(SupportTooLarge):
            lifting_member(nu1, nu2, chain, Grade.identity(), bound=16)

    @given(dists, dists, st.fractions(min_value=1, max_value=4, max_denominator=4))
    def test_equality_matches_skew_distance(self, nu1, nu2, gamma):
        """Ensures the least δ of the symmetric equality lifting is the skew distance."""
        assert min_delta(nu1, nu2, Eq(), gamma, symmetric=True) == skew_distance(nu1, nu2, gamma)

    @given(dists, dists, st.fractions(min_value=1, max_value=4, max_denominator=4))
    def test_min_delta_is_tight(self, nu1, nu2, gamma):
        delta = min_delta(nu1, nu2, Eq(), gamma)
        assert lifting_member(nu1, nu2, Eq(), Grade.from_gamma(gamma, delta))[0]


class TestSkewDistance:
    """Ensures the skew distance follows its positive-part closed form."""

    def test_value(self):
        d1 = SubDist([(0, Fraction(1, 2)), (1, Fraction(1, 2))])
        d2 = SubDist([(0, Fraction(1, 4)), (1, Fraction(3, 4))])
        assert skew_distance(d1, d2, 1) == Fraction(1, 4)
        assert skew_distance(d1, d2, 2) == 0

    def test_gamma_below_one(self):
        with pytest.raises(ValueError):
            skew_distance(ON_FALSE, ON_TRUE, Fraction(1, 2))


class TestEndoMember:
    """Ensures the endorelational lifting only quantifies over closed events."""

    def test_equality(self):
        assert endo_member(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(3))[0]
        assert not endo_member(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(2))[0]

    def test_full_relation(self):
        """Ensures the full relation only closes the whole carrier, so equal masses suffice."""
        assert endo_member(ON_FALSE, ON_TRUE, full_relation(), Grade.identity())[0]


class TestForallEq:
    """Ensures per-value memberships combine into an equality membership with summed δ."""

    nu = SubDist([((0, 'a'), Fraction(1, 2)), ((1, 'a'), Fraction(1, 2))])

    def test_combine(self):
        grade = Grade.from_gamma(2, Fraction(1, 10))
        result = forall_eq_combine([(0, grade), (1, grade)], self.nu, self.nu)
        assert result
        assert result.grade == Grade.from_gamma(2, Fraction(1, 5))
        assert result.premises == [(0, True), (1, True)]

    def test_failed_premise(self):
        nu1, nu2 = SubDist([((0,), 1)]), SubDist([((1,), 1)])
        result = forall_eq_combine([(0, Grade.identity()), (1, Grade.identity())], nu1, nu2)
        assert not result
        assert result.premises[0] == (0, False)

    def test_mixed_gamma(self):
        with pytest.raises(LiftingError):
            forall_eq_combine([(0, Grade.from_gamma(2)), (1, Grade.from_gamma(3))], self.nu, self.nu)

    def test_uncovered_value(self):
        """Ensures every value of the first support needs a membership."""
        with pytest.raises(LiftingError):
            forall_eq_combine([(0, Grade.identity())], self.nu, self.nu)

    def test_no_memberships(self):
        with pytest.raises(ValueError):
            forall_eq_combine([], self.nu, self.nu)
