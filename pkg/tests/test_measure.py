from aprhl_toolkit.measure import Memory, SubDist, SubDistError, ChainNotMonotone, dirac, mix, bind, product, \
    event_prob, sup_chain, prune, zero
from fractions import Fraction
from hypothesis import given, strategies as st
import pytest


# Lists of weights summing to at most one:
weights = st.lists(st.fractions(min_value=0, max_value=1, max_denominator=16), min_size=1, max_size=6) \
    .map(lambda ws: [w / max(sum(ws), 1) for w in ws])


class TestMemory:
    """Ensures memories behave as immutable, hashable maps."""

    def test_order_independent(self):
        """Ensures the binding order does not affect equality or hashing."""
        first, second = Memory({'x': 1, 'y': True}), Memory([('y', True), ('x', 1)])
        assert first == second
        assert hash(first) == hash(second)
        assert list(first) == ['x', 'y']

    def test_set(self):
        """Ensures an update returns a new memory and leaves the original untouched."""
        memory = Memory({'x': 1})
        updated = memory.set('x', 2)
        assert updated['x'] == 2 and memory['x'] == 1

    def test_set_unbound(self):
        """Ensures updating an unbound variable raises an error."""
        with pytest.raises(KeyError):
            Memory({'x': 1}).set('y', 2)

    def test_duplicate_binding(self):
        """Ensures a variable cannot be bound twice."""
        with pytest.raises(ValueError):
            Memory([('x', 1), ('x', 2)])

    def test_project_and_drop(self):
        memory = Memory({'x': 1, 'y': 2, 'z': 3})
        assert memory.project(['x', 'z']) == Memory({'x': 1, 'z': 3})
        assert memory.drop('y') == Memory({'x': 1, 'z': 3})
        assert memory.drop('y').extend('y', 5)['y'] == 5


class TestSubDist:
    """Ensures finite subdistributions keep exact weights and reject malformed input."""

    def test_merges_points(self):
        """Ensures repeated points are merged and zero weights are dropped."""
        nu = SubDist([(0, Fraction(1, 4)), (0, Fraction(1, 4)), (1, 0)])
        assert nu(0) == Fraction(1, 2)
        assert 1 not in nu
        assert len(nu) == 1

    def test_negative_weight(self):
        """Ensures a negative weight raises an error."""
        with pytest.raises(SubDistError):
            SubDist({0: Fraction(-1, 2)})

    def test_over_mass(self):
        """Ensures a total mass above one raises an error."""
        with pytest.raises(SubDistError):
            SubDist({0: Fraction(3, 4), 1: Fraction(1, 2)})

    def test_float_weights_are_exact(self):
        """Ensures float weights become the rationals they print as."""
        nu = SubDist({0: 0.1, 1: 0.9})
        assert nu(0) == Fraction(1, 10)
        assert nu.mass() == 1

    def test_map(self):
        """Ensures the pushforward merges points with the same image."""
        nu = SubDist({0: Fraction(1, 3), 1: Fraction(1, 3), 2: Fraction(1, 3)})
        assert nu.map(lambda x: x % 2) == SubDist({0: Fraction(2, 3), 1: Fraction(1, 3)})

    def test_restrict_and_scale(self):
        nu = SubDist({0: Fraction(1, 2), 1: Fraction(1, 2)})
        assert nu.restrict(lambda x: x == 1).mass() == Fraction(1, 2)
        assert nu.scale(Fraction(1, 2))(0) == Fraction(1, 4)

    def test_total_variation(self):
        nu1 = SubDist({0: Fraction(3, 4), 1: Fraction(1, 4)})
        nu2 = SubDist({0: Fraction(1, 4), 1: Fraction(3, 4)})
        assert nu1.total_variation(nu2) == Fraction(1, 2)
        assert nu1.total_variation(nu1) == 0


class TestMonad:
    """Ensures the unit, bind and mixing operations satisfy the monad laws on examples."""

    coin = SubDist({True: Fraction(1, 2), False: Fraction(1, 2)})

    def test_left_unit(self):
        """Ensures binding a Dirac distribution applies the function once."""
        function = lambda b: SubDist({int(b): Fraction(1, 3)})
        assert bind(dirac(True), function) == function(True)

    def test_right_unit(self):
        """Ensures binding with the unit gives the distribution back."""
        assert bind(self.coin, dirac) == self.coin

    def test_associativity(self):
        """Ensures nested binds can be regrouped."""
        f = lambda b: SubDist({0: Fraction(1, 2), int(b) + 1: Fraction(1, 2)})
        g = lambda n: SubDist({n * 10: Fraction(2, 3)})
        assert bind(bind(self.coin, f), g) == bind(self.coin, lambda b: bind(f(b), g))

    def test_mix(self):
        nu = mix([(Fraction(1, 2), dirac(0)), (Fraction(1, 4), dirac(1))])
        assert nu == SubDist({0: Fraction(1, 2), 1: Fraction(1, 4)})
        assert nu.mass() == Fraction(3, 4)

    def test_product(self):
        nu = product(self.coin, dirac(7))
        assert nu((True, 7)) == Fraction(1, 2)
        assert event_prob(nu, lambda pair: pair[0]) == Fraction(1, 2)

    @given(weights)
    def test_bind_keeps_mass(self, ws):
        """Ensures binding with total functions keeps the total mass."""
        nu = SubDist(enumerate(ws))
        assert bind(nu, lambda point: dirac(point % 2)).mass() == nu.mass()


class TestChains:
    """Ensures suprema of chains and pruning behave as expected."""

    def test_sup_chain(self):
        chain = [zero(), SubDist({0: Fraction(1, 2)}), SubDist({0: Fraction(1, 2), 1: Fraction(1, 4)})]
        assert sup_chain(chain) == chain[-1]
        assert sup_chain([]) == zero()

    def test_sup_chain_not_monotone(self):
        """Ensures a decreasing chain raises an error."""
        with pytest.raises(ChainNotMonotone):
            sup_chain([dirac(0), SubDist({0: Fraction(1, 2)})])

    def test_prune(self):
        nu = SubDist({0: Fraction(1, 1000), 1: Fraction(999, 1000)})
        kept, dropped = prune(nu, Fraction(1, 100))
        assert kept == SubDist({1: Fraction(999, 1000)})
        assert dropped == Fraction(1, 1000)

    def test_prune_negative_threshold(self):
        with pytest.raises(ValueError):
            prune(dirac(0), -1)
