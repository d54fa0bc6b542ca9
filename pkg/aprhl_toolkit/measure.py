from .aputils import to_fraction
from fractions import Fraction
from typing import Any, Callable, Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

# Values are Python bools, ints, exact Fractions (reals in exact mode), floats (reals in the
# sampling interpreter) or tuples of these (fixed-size real vectors):
Value = Union[bool, int, Fraction, float, Tuple[Any, ...]]


class SubDistError(Exception):
    """An exception raised when a subprobability distribution would be malformed, e.g., negative
    weights or a total mass above one."""
    pass


class ChainNotMonotone(SubDistError):
    """An exception raised when a chain passed to sup_chain is not pointwise nondecreasing."""
    pass


def value_key(value: Any) -> Tuple:
    # Orders values of mixed types deterministically:
    if isinstance(value, bool):
        return 0, int(value)
    if isinstance(value, (int, Fraction, float)):
        return 1, value
    if isinstance(value, tuple):
        return 2, tuple(value_key(item) for item in value)
    if isinstance(value, Memory):
        return 3, tuple((name, value_key(item)) for name, item in value.items())
    if isinstance(value, SubDist):
        return 4, tuple((value_key(point), weight) for point, weight in value.items())
    return 5, repr(value)


class Memory(Mapping[str, Any]):
    """An immutable, hashable memory: a finite map from variable names to values. Bindings are kept in
    sorted variable order so that equal memories compare and hash equal."""

    __slots__ = ('_bindings', '_hash')

    def __init__(self, bindings: Union[Mapping[str, Any], Iterable[Tuple[str, Any]]] = ()):
        pairs = bindings.items() if isinstance(bindings, Mapping) else bindings
        self._bindings: Tuple[Tuple[str, Any], ...] = tuple(sorted(pairs, key=lambda pair: pair[0]))
        names = [name for name, _ in self._bindings]
        if len(set(names)) != len(names):
            raise ValueError(f'The memory bindings {names} contain a duplicate variable.')
        self._hash: int = hash(self._bindings)

    def __getitem__(self, name: str) -> Any:
        for key, value in self._bindings:
            if key == name:
                return value
        raise KeyError(name)

    def __iter__(self) -> Iterator[str]:
        return (name for name, _ in self._bindings)

    def __len__(self) -> int:
        return len(self._bindings)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, Memory):
            return self._hash == other._hash and self._bindings == other._bindings
        return NotImplemented

    def __lt__(self, other: 'Memory') -> bool:
        return value_key(self) < value_key(other)

    def __repr__(self) -> str:
        return '{' + ', '.join(f'{name}={value}' for name, value in self._bindings) + '}'

    def set(self, name: str, value: Any) -> 'Memory':
        """:return: A copy of the memory with `name` rebound to `value` (the update m[x := v])."""
        if name not in self:
            raise KeyError(f'The variable `{name}` is not bound in the memory {self}.')
        return Memory((key, value if key == name else old) for key, old in self._bindings)

    def project(self, names: Iterable[str]) -> 'Memory':
        """:return: The restriction of the memory to the given variables."""
        keep = set(names)
        return Memory((key, value) for key, value in self._bindings if key in keep)

    def drop(self, name: str) -> 'Memory':
        return Memory((key, value) for key, value in self._bindings if key != name)

    def extend(self, name: str, value: Any) -> 'Memory':
        return Memory(self._bindings + ((name, value),))


class SubDist:
    """A finite-support subprobability distribution with exact rational weights. Points are arbitrary
    hashable values (memories, values or tuples of them). Zero weights are never stored."""

    __slots__ = ('_weights', '_hash')

    def __init__(self, weights: Union[Mapping[Hashable, Any], Iterable[Tuple[Hashable, Any]]] = ()):
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        merged: Dict[Hashable, Fraction] = {}
        for point, weight in pairs:
            weight = to_fraction(weight)
            if weight < 0:
                raise SubDistError(f'The point {point!r} has a negative weight {weight}.')
            if weight:
                merged[point] = merged.get(point, Fraction(0)) + weight

        # Verify the total mass:
        total = sum(merged.values(), Fraction(0))
        if total > 1:
            raise SubDistError(f'The total mass {total} exceeds one.')

        self._weights: Dict[Hashable, Fraction] = dict(sorted(merged.items(), key=lambda item: value_key(item[0])))
        self._hash: Optional[int] = None

    def __call__(self, point: Hashable) -> Fraction:
        return self._weights.get(point, Fraction(0))

    def __contains__(self, point: Hashable) -> bool:
        return point in self._weights

    def __len__(self) -> int:
        return len(self._weights)

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, SubDist):
            return self._weights == other._weights
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._weights.items()))
        return self._hash

    def __repr__(self) -> str:
        return 'SubDist({' + ', '.join(f'{point!r}: {weight}' for point, weight in self._weights.items()) + '})'

    def items(self) -> List[Tuple[Hashable, Fraction]]:
        return list(self._weights.items())

    def support(self) -> List[Hashable]:
        return list(self._weights)

    def mass(self) -> Fraction:
        return sum(self._weights.values(), Fraction(0))

    def is_zero(self) -> bool:
        return not self._weights

    def map(self, function: Callable[[Hashable], Hashable]) -> 'SubDist':
        """:return: The pushforward of the distribution along a function (the functor action G f)."""
        return SubDist((function(point), weight) for point, weight in self._weights.items())

    def scale(self, factor: Any) -> 'SubDist':
        factor = to_fraction(factor)
        return SubDist((point, weight * factor) for point, weight in self._weights.items())

    def restrict(self, predicate: Callable[[Hashable], bool]) -> 'SubDist':
        """:return: The distribution with the mass outside the predicate removed."""
        return SubDist((point, weight) for point, weight in self._weights.items() if predicate(point))

    def dominated_by(self, other: 'SubDist') -> bool:
        """:return: True if every point weighs at most as much as in the other distribution."""
        return all(weight <= other(point) for point, weight in self._weights.items())

    def total_variation(self, other: 'SubDist') -> Fraction:
        points = set(self._weights) | set(other._weights)
        return sum((abs(self(point) - other(point)) for point in points), Fraction(0)) / 2


ZERO: SubDist = SubDist()


def zero() -> SubDist:
    """:return: The null measure."""
    return ZERO


def dirac(point: Hashable) -> SubDist:
    """
    The unit of the monad: the distribution with all of its mass on a single point.

    :param point: The support point (a memory or value).
    :return: The Dirac distribution at the point.
    """
    return SubDist([(point, 1)])


def mix(parts: Iterable[Tuple[Any, SubDist]]) -> SubDist:
    """:return: The weighted sum of distributions, weights given as (weight, distribution) pairs."""
    weights: Dict[Hashable, Fraction] = {}
    for weight, dist in parts:
        weight = to_fraction(weight)
        for point, inner in dist.items():
            weights[point] = weights.get(point, Fraction(0)) + weight * inner
    return SubDist(weights)


def bind(nu: SubDist, function: Callable[[Hashable], SubDist]) -> SubDist:
    """
    The Kleisli extension: runs `function` on every support point of `nu` and averages the results by
    the weights of `nu`.

    :param nu: The input distribution.
    :param function: A total map from points to distributions.
    :return: The bound distribution.
    """
    return mix((weight, function(point)) for point, weight in nu.items())


def product(nu1: SubDist, nu2: SubDist) -> SubDist:
    """:return: The independent product distribution over pairs (x, y)."""
    return SubDist(((x, y), wx * wy) for x, wx in nu1.items() for y, wy in nu2.items())


def event_prob(nu: SubDist, event: Callable[[Hashable], bool]) -> Fraction:
    """:return: The probability of the event (a predicate on points) under the distribution."""
    return sum((weight for point, weight in nu.items() if event(point)), Fraction(0))


def sup_chain(chain: List[SubDist]) -> SubDist:
    """
    Computes the pointwise supremum of an ω-chain of distributions. The chain must be pointwise
    nondecreasing, so the supremum of a finite chain is its last element.

    :param chain: The chain, in order.
    :return: The supremum.
    """
    for index in range(1, len(chain)):
        if not chain[index - 1].dominated_by(chain[index]):
            raise ChainNotMonotone(f'The chain element at index {index} does not dominate its predecessor.')
    return chain[-1] if chain else ZERO


def prune(nu: SubDist, eps: Any) -> Tuple[SubDist, Fraction]:
    """
    Removes the points whose weight is below a threshold.

    :param nu: The distribution.
    :param eps: The threshold (a nonnegative rational).
    :return: The pruned distribution and the total mass dropped.
    """
    eps = to_fraction(eps)
    if eps < 0:
        raise ValueError(f'The prune threshold `{eps}` must be nonnegative.')
    kept = [(point, weight) for point, weight in nu.items() if weight >= eps]
    dropped = sum((weight for _, weight in nu.items() if weight < eps), Fraction(0))
    return SubDist(kept), dropped
