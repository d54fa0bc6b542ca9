from aprhl_toolkit.grade import Grade
from aprhl_toolkit.lifting import Eq, Explicit, WitnessPair, Infeasible, witness_search, skew_distance, \
    empty_relation
from aprhl_toolkit.measure import SubDist
from fractions import Fraction

ON_FALSE = SubDist([(False, Fraction(3, 4)), (True, Fraction(1, 4))])
ON_TRUE = SubDist([(False, Fraction(1, 4)), (True, Fraction(3, 4))])


class TestWitnessSearch:
    """Ensures witness pairs have the right marginals and skew distance, and infeasibility is reported."""

    def test_diagonal_witness(self):
        witness = witness_search(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(3))
        assert isinstance(witness, WitnessPair)
        assert witness.d_left((False, False)) == Fraction(3, 4)
        assert witness.d_right((True, True)) == Fraction(3, 4)
        assert witness.skew == 0

    def test_diagonal_infeasible(self):
        witness = witness_search(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(2))
        assert isinstance(witness, Infeasible)
        assert witness.status == 'infeasible'

    def test_linear_program_witness(self):
        """Ensures the LP witness for a shift relation is rational and verified exactly."""
        low = SubDist((v, Fraction(1, 4)) for v in range(4))
        high = SubDist((v + 1, Fraction(1, 4)) for v in range(4))
        shift = Explicit(frozenset((v, v + 1) for v in range(4)))
        witness = witness_search(low, high, shift, Grade.identity())
        assert isinstance(witness, WitnessPair)
        assert witness.d_left.map(lambda pair: pair[0]) == low
        assert witness.d_right.map(lambda pair: pair[1]) == high
        assert all(shift.contains(x, y) for x, y in witness.d_left.support())
        assert skew_distance(witness.d_left, witness.d_right, 1) == witness.skew == 0

    def test_unrelated_points(self):
        witness = witness_search(ON_FALSE, ON_TRUE, empty_relation(), Grade.identity())
        assert isinstance(witness, Infeasible)
        assert 'related to nothing' in witness.reason

    def test_infeasible_program(self):
        """Ensures the LP reports infeasibility when the marginals force too much skew."""
        d1 = SubDist([(0, Fraction(3, 4)), (1, Fraction(1, 4))])
        d2 = SubDist([(0, Fraction(1, 4)), (1, Fraction(3, 4))])
        relation = Explicit(frozenset([(0, 0), (1, 1), (1, 0)]))
        witness = witness_search(d1, d2, relation, Grade.identity())
        assert isinstance(witness, Infeasible)

    def test_record(self):
        record = witness_search(ON_FALSE, ON_TRUE, Eq(), Grade.from_gamma(3)).to_record()
        assert record['status'] == 'feasible'
        assert record['skew'] == '0'
