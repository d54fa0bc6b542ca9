from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple


class LiftingError(Exception):
    """The base class of errors raised by the lifting lab."""
    pass


class SupportTooLarge(LiftingError):
    """An exception raised when an event enumeration would exceed the configured brute-force bound."""

    def __init__(self, units: int, bound: int):
        self.units: int = units
        self.bound: int = bound
        super().__init__(f'Deciding the lifting needs an enumeration over {units} independent points, '
                         f'more than the bound {bound}.')


class Relation(ABC):
    """A relation Φ between two carriers, given extensionally, as equality, or by a decidable predicate."""

    name: str = 'relation'

    @abstractmethod
    def contains(self, x: Hashable, y: Hashable) -> bool:
        pass

    def __call__(self, x: Hashable, y: Hashable) -> bool:
        return self.contains(x, y)

    def image(self, points: Iterable[Hashable], carrier: Iterable[Hashable]) -> Set[Hashable]:
        """:return: Φ(A) ∩ carrier = {y in carrier | some x in A has (x, y) in Φ}."""
        points = list(points)
        return {y for y in carrier if any(self.contains(x, y) for x in points)}

    def opposite(self) -> 'Relation':
        """:return: The converse relation {(y, x) | (x, y) in Φ}."""
        return PredicatePair(lambda x, y: self.contains(y, x), f'op({self.name})')


@dataclass(frozen=True)
class Explicit(Relation):
    pairs: FrozenSet[Tuple[Hashable, Hashable]]
    """The finite set of related pairs."""

    left: Optional[FrozenSet[Hashable]] = None
    """The declared first carrier, if any."""

    right: Optional[FrozenSet[Hashable]] = None
    """The declared second carrier, if any."""

    name: str = 'explicit'

    def __post_init__(self):
        object.__setattr__(self, 'pairs', frozenset(self.pairs))
        for x, y in self.pairs:
            if (self.left is not None and x not in self.left) or (self.right is not None and y not in self.right):
                raise LiftingError(f'The pair ({x!r}, {y!r}) lies outside the declared carriers.')

    def contains(self, x: Hashable, y: Hashable) -> bool:
        return (x, y) in self.pairs

    def opposite(self) -> 'Relation':
        return Explicit(frozenset((y, x) for x, y in self.pairs), self.right, self.left, f'op({self.name})')


@dataclass(frozen=True)
class Eq(Relation):
    """The equality relation Eq_X."""

    name: str = 'eq'

    def contains(self, x: Hashable, y: Hashable) -> bool:
        return x == y

    def image(self, points: Iterable[Hashable], carrier: Iterable[Hashable]) -> Set[Hashable]:
        return set(points) & set(carrier)

    def opposite(self) -> 'Relation':
        return self


@dataclass(frozen=True)
class PredicatePair(Relation):
    predicate: Callable[[Hashable, Hashable], bool] = field(compare=False)
    """A total decidable predicate on pairs of points."""

    name: str = 'predicate'

    def contains(self, x: Hashable, y: Hashable) -> bool:
        return bool(self.predicate(x, y))


def full_relation() -> Relation:
    """:return: The relation relating every pair of points."""
    return PredicatePair(lambda x, y: True, 'full')


def empty_relation() -> Relation:
    return Explicit(frozenset(), name='empty')


def key_equality(key: Callable[[Hashable], Any], name: str = 'key-eq') -> Relation:
    """:return: The relation {(x, y) | key(x) = key(y)}, e.g. equality of one coordinate."""
    return PredicatePair(lambda x, y: key(x) == key(y), name)


def key_implication(key: Callable[[Hashable], Any], value: Any) -> Relation:
    """:return: The relation {(x, y) | key(x) = value implies key(y) = value}."""
    return PredicatePair(lambda x, y: key(x) != value or key(y) == value, f'key-implies({value!r})')
