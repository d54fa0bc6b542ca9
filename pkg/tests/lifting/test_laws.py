from aprhl_toolkit.grade import Grade
from aprhl_toolkit.lifting import Eq, Explicit, WitnessPair, full_relation, lifting_member, min_delta, \
    skew_distance, witness_search
from aprhl_toolkit.measure import SubDist, bind, dirac
from fractions import Fraction
from hypothesis import given, settings, strategies as st
from itertools import combinations, product
import pytest

POINTS = (0, 1, 2)
GAMMAS = (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3))

weights = st.fractions(min_value=0, max_value=1, max_denominator=8)
# Sub-distributions over {0, 1, 2}, rescaled only when their mass exceeds one:
subdists = st.lists(weights, min_size=3, max_size=3) \
    .map(lambda ws: SubDist((point, w / max(1, sum(ws))) for point, w in zip(POINTS, ws)))
relations = st.frozensets(st.tuples(st.sampled_from(POINTS), st.sampled_from(POINTS))).map(Explicit)
kernels = st.lists(subdists, min_size=3, max_size=3)
gammas = st.sampled_from(GAMMAS)


class TestLiftingLaws:
    """Ensures the graded lifting satisfies the unit, multiplication, functoriality and monotonicity laws
    on random finite instances, in exact arithmetic."""

    @given(relations)
    def test_unit(self, phi: Explicit):
        for x, y in phi.pairs:
            assert lifting_member(dirac(x), dirac(y), phi, Grade.identity(), symmetric=True)[0]

    @settings(max_examples=200)
    @given(subdists, subdists, relations, kernels, kernels, gammas, gammas)
    def test_multiplication(self, nu1, nu2, phi, k1, k2, gamma, gamma2):
        """Ensures binding related continuations multiplies the ratios and adds the slacks."""
        delta = min_delta(nu1, nu2, phi, gamma)
        delta2 = max((min_delta(k1[x], k2[y], Eq(), gamma2) for x, y in phi.pairs), default=Fraction(0))
        mu1, mu2 = bind(nu1, lambda x: k1[x]), bind(nu2, lambda y: k2[y])
        assert lifting_member(mu1, mu2, Eq(), Grade.from_gamma(gamma * gamma2, delta + delta2))[0]

    @settings(max_examples=200)
    @given(subdists, subdists, relations, st.lists(st.integers(0, 1), min_size=3, max_size=3),
           st.lists(st.integers(0, 1), min_size=3, max_size=3), gammas)
    def test_functoriality(self, nu1, nu2, phi, h1, h2, gamma):
        """Ensures mapping both sides keeps the membership for the image relation."""
        delta = min_delta(nu1, nu2, phi, gamma)
        image = Explicit(frozenset((h1[x], h2[y]) for x, y in phi.pairs))
        mapped1, mapped2 = nu1.map(lambda x: h1[x]), nu2.map(lambda y: h2[y])
        assert lifting_member(mapped1, mapped2, image, Grade.from_gamma(gamma, delta))[0]

    @settings(max_examples=200)
    @given(subdists, subdists, relations, relations, gammas, gammas, weights)
    def test_monotone(self, nu1, nu2, phi, extra, gamma, gamma2, slack):
        """Ensures a larger grade or a larger relation keeps the membership."""
        delta = min_delta(nu1, nu2, phi, gamma)
        larger = Explicit(phi.pairs | extra.pairs)
        assert lifting_member(nu1, nu2, larger, Grade.from_gamma(max(gamma, gamma2), delta + slack))[0]
        assert lifting_member(nu1, nu2, full_relation(), Grade.identity())[0] == (nu1.mass() <= nu2.mass())


class TestWitnessAgreement:
    """Ensures witness pairs imply the symmetric lifting, and that for equality the lifting, the skew
    distance and the witness search agree."""

    @settings(max_examples=100, deadline=None)
    @given(subdists, subdists, relations, gammas, weights)
    def test_witness_implies_membership(self, nu1, nu2, psi, gamma, delta):
        witness = witness_search(nu1, nu2, psi, Grade.from_gamma(gamma, delta))
        if isinstance(witness, WitnessPair):
            assert lifting_member(nu1, nu2, psi, Grade.from_gamma(gamma, delta), symmetric=True)[0]

    @settings(max_examples=300)
    @given(subdists, subdists, gammas, weights)
    def test_equality_three_ways(self, nu1, nu2, gamma, delta):
        grade = Grade.from_gamma(gamma, delta)
        member = lifting_member(nu1, nu2, Eq(), grade, symmetric=True)[0]
        assert member == (skew_distance(nu1, nu2, gamma) <= delta)
        assert member == isinstance(witness_search(nu1, nu2, Eq(), grade), WitnessPair)


def response_table(keep: Fraction):
    """:return: The output distribution of two-bit randomized response, each bit kept with probability `keep`."""
    inputs = list(product((0, 1), repeat=2))
    return {a: SubDist((o, (keep if o[0] == a[0] else 1 - keep) * (keep if o[1] == a[1] else 1 - keep))
                       for o in inputs) for a in inputs}


RESPONSES = response_table(Fraction(3, 4))
ADJACENT = [(a, b) for a in RESPONSES for b in RESPONSES if sum(x != y for x, y in zip(a, b)) == 1]


class TestPrivacyAsLifting:
    """Ensures (γ, δ)-privacy checked on every event agrees with the symmetric equality lifting."""

    table = RESPONSES
    adjacent = ADJACENT

    def private(self, gamma: Fraction, delta: Fraction) -> bool:
        outputs = list(self.table[(0, 0)].support())
        events = [event for size in range(len(outputs) + 1) for event in combinations(outputs, size)]
        return all(sum(self.table[a](o) for o in event) <= gamma * sum(self.table[b](o) for o in event) + delta
                   for a, b in self.adjacent for event in events)

    @pytest.mark.parametrize('gamma', [Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4)])
    @pytest.mark.parametrize('delta', [Fraction(0), Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)])
    def test_grid(self, gamma: Fraction, delta: Fraction):
        lifted = all(lifting_member(self.table[a], self.table[b], Eq(), Grade.from_gamma(gamma, delta),
                                    symmetric=True)[0] for a, b in self.adjacent)
        assert lifted == self.private(gamma, delta)

    def test_extremes(self):
        """Ensures the grid crosses the privacy boundary: one flipped bit has ratio exactly 3."""
        assert self.private(Fraction(3), Fraction(0))
        assert not self.private(Fraction(2), Fraction(0))
