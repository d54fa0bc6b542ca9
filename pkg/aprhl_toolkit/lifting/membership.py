from .relation import Relation, Eq, SupportTooLarge
from ..aputils import Scalar, is_exact
from ..grade import Grade, GRADE_TOLERANCE
from ..measure import SubDist, value_key
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Hashable, List, Optional, Sequence, Tuple
import logging

logger = logging.getLogger(__name__)

DEFAULT_BRUTE_FORCE_BOUND: int = 16


@dataclass
class LiftingCertificate:
    member: bool
    """Whether the membership holds."""

    direction: str
    """'forward' (events of the first distribution) or 'backward' (the mirrored, symmetric check)."""

    event: Tuple[Hashable, ...]
    """The worst event A: a violating event when `member` is False."""

    lhs: Scalar
    """ν1(A)."""

    rhs: Scalar
    """γ ν2(Φ(A)) + δ."""

    excess: Scalar
    """The largest value of ν1(A) - γ ν2(Φ(A)) over all events (at least 0), i.e. the least valid δ."""

    units: int = 0
    """The number of independent point groups enumerated."""

    def to_record(self) -> Dict[str, Any]:
        return {'member': self.member, 'direction': self.direction, 'event': [repr(point) for point in self.event],
                'lhs': str(self.lhs), 'rhs': str(self.rhs), 'excess': str(self.excess)}


def _within(value: Scalar, bound: Scalar) -> bool:
    if is_exact(value) and is_exact(bound):
        return value <= bound
    return float(value) <= float(bound) + GRADE_TOLERANCE


def _components(masks: Sequence[int]) -> List[List[int]]:
    """:return: The groups of indices whose bitmasks are connected through shared bits."""
    parent = list(range(len(masks)))

    def find(index: int) -> int:
        while parent[index] != index:
            parent[index] = parent[parent[index]]
            index = parent[index]
        return index

    owner: Dict[int, int] = {}
    for index, mask in enumerate(masks):
        bit = 0
        while mask >> bit:
            if (mask >> bit) & 1:
                if bit in owner:
                    parent[find(index)] = find(owner[bit])
                else:
                    owner[bit] = index
            bit += 1
    groups: Dict[int, List[int]] = {}
    for index in range(len(masks)):
        groups.setdefault(find(index), []).append(index)
    return list(groups.values())


def _mask_mass(mask: int, weights: Sequence[Fraction], cache: Dict[int, Fraction]) -> Fraction:
    if mask not in cache:
        total = Fraction(0)
        bit = 0
        while mask >> bit:
            if (mask >> bit) & 1:
                total += weights[bit]
            bit += 1
        cache[mask] = total
    return cache[mask]


def worst_event(nu1: SubDist, nu2: SubDist, phi: Relation, gamma: Scalar,
                bound: int = DEFAULT_BRUTE_FORCE_BOUND) -> Tuple[Scalar, Tuple[Hashable, ...], int]:
    """
    Maximises ν1(A) - γ ν2(Φ(A)) over the events A ⊆ supp(ν1). Points with the same image are grouped,
    and groups whose images are disjoint are decided independently, so only connected groups are enumerated
    subset by subset (equality decomposes into single points).

    :return: The maximum (at least 0, attained by the empty event), the maximising event and the number of groups.
    """
    targets = nu2.support()
    target_index = {point: index for index, point in enumerate(targets)}
    target_weights = [nu2(point) for point in targets]

    # Group the points of the first support by their image:
    units: Dict[FrozenSet[Hashable], List[Hashable]] = {}
    for point in nu1.support():
        units.setdefault(frozenset(phi.image([point], targets)), []).append(point)
    images = list(units)
    masks = [sum(1 << target_index[y] for y in image) for image in images]
    unit_weights = [sum((nu1(point) for point in units[image]), Fraction(0)) for image in images]

    total: Scalar = Fraction(0)
    chosen: List[Hashable] = []
    cache: Dict[int, Fraction] = {}
    for component in _components(masks):
        if len(component) > bound:
            raise SupportTooLarge(len(component), bound)
        size = len(component)
        weights: List[Fraction] = [Fraction(0)] * (1 << size)
        image_masks: List[int] = [0] * (1 << size)
        best_value: Scalar = Fraction(0)
        best_mask = 0
        for subset in range(1, 1 << size):
            low = subset & -subset
            position = low.bit_length() - 1
            previous = subset ^ low
            weights[subset] = weights[previous] + unit_weights[component[position]]
            image_masks[subset] = image_masks[previous] | masks[component[position]]
            value = weights[subset] - gamma * _mask_mass(image_masks[subset], target_weights, cache)
            if value > best_value:
                best_value, best_mask = value, subset
        total += best_value
        for position in range(size):
            if (best_mask >> position) & 1:
                chosen.extend(units[images[component[position]]])
    return total, tuple(sorted(chosen, key=value_key)), len(images)


def _direction(nu1: SubDist, nu2: SubDist, phi: Relation, grade: Grade, bound: int,
               direction: str) -> LiftingCertificate:
    gamma = grade.gamma
    excess, event, units = worst_event(nu1, nu2, phi, gamma, bound)
    lhs = sum((nu1(point) for point in event), Fraction(0))
    rhs = gamma * sum((nu2(point) for point in phi.image(event, nu2.support())), Fraction(0)) + grade.delta
    return LiftingCertificate(_within(excess, grade.delta), direction, event, lhs, rhs, excess, units)


def lifting_member(nu1: SubDist, nu2: SubDist, phi: Relation, g: Grade, symmetric: bool = False,
                   bound: int = DEFAULT_BRUTE_FORCE_BOUND) -> Tuple[bool, LiftingCertificate]:
    """
    Decides membership (ν1, ν2) ∈ G^(γ,δ)Φ: for every event A ⊆ supp(ν1),
    ν1(A) <= γ ν2(Φ(A)) + δ; in symmetric mode also the mirrored condition for Φ-opposite.

    :param nu1: The first distribution.
    :param nu2: The second distribution.
    :param phi: The relation.
    :param g: The grade.
    :param symmetric: Whether to decide the symmetrised lifting.
    :param bound: The largest number of connected point groups enumerated subset by subset.
    :return: The verdict and a certificate naming the worst (or violating) event.
    """
    forward = _direction(nu1, nu2, phi, g, bound, 'forward')
    if not forward.member or not symmetric:
        return forward.member, forward
    backward = _direction(nu2, nu1, phi.opposite(), g, bound, 'backward')
    if not backward.member:
        return False, backward
    return True, forward


def min_delta(nu1: SubDist, nu2: SubDist, phi: Relation, gamma: Scalar, symmetric: bool = False,
              bound: int = DEFAULT_BRUTE_FORCE_BOUND) -> Scalar:
    """:return: The least δ such that (ν1, ν2) is in the (symmetric) lifting of Φ at (γ, δ)."""
    excess, _, _ = worst_event(nu1, nu2, phi, gamma, bound)
    if symmetric:
        backward, _, _ = worst_event(nu2, nu1, phi.opposite(), gamma, bound)
        excess = max(excess, backward)
    return excess


def skew_distance(d1: SubDist, d2: SubDist, gamma: Scalar) -> Scalar:
    """
    The skew distance max(Σ_x max(0, d1(x) - γ d2(x)), Σ_x max(0, d2(x) - γ d1(x))): the supremum over
    events C of d1(C) - γ d2(C) (and mirrored) collapses to the positive-part sums.

    :param d1: The first distribution.
    :param d2: The second distribution.
    :param gamma: The ratio γ >= 1.
    :return: The skew distance.
    """
    if gamma < 1:
        raise ValueError(f'The skew distance needs gamma >= 1, not {gamma}.')
    points = set(d1.support()) | set(d2.support())
    forward = sum((max(Fraction(0), d1(point) - gamma * d2(point)) for point in points), Fraction(0))
    backward = sum((max(Fraction(0), d2(point) - gamma * d1(point)) for point in points), Fraction(0))
    return max(forward, backward)


def _closed_excess(nu1: SubDist, nu2: SubDist, phi: Relation, gamma: Scalar, bound: int) -> Tuple[Scalar, Tuple]:
    """:return: The largest ν1(A) - γ ν2(A) over the Φ-closed events A (Φ(A) ⊆ A) of the joint support."""
    carrier = sorted(set(nu1.support()) | set(nu2.support()), key=value_key)
    index = {point: position for position, point in enumerate(carrier)}
    successors = [sum(1 << index[y] for y in phi.image([x], carrier)) for x in carrier]
    links = [successors[position] | (1 << position) for position in range(len(carrier))]
    total: Scalar = Fraction(0)
    chosen: List[Hashable] = []
    for component in _components(links):
        if len(component) > bound:
            raise SupportTooLarge(len(component), bound)
        size = len(component)
        members = sum(1 << position for position in component)
        reach: List[int] = [0] * (1 << size)
        value: List[Scalar] = [Fraction(0)] * (1 << size)
        selected: List[int] = [0] * (1 << size)
        best_value: Scalar = Fraction(0)
        best_set = 0
        for subset in range(1, 1 << size):
            low = subset & -subset
            position = low.bit_length() - 1
            previous = subset ^ low
            point = carrier[component[position]]
            reach[subset] = reach[previous] | successors[component[position]]
            selected[subset] = selected[previous] | (1 << component[position])
            value[subset] = value[previous] + nu1(point) - gamma * nu2(point)
            if reach[subset] & members & ~selected[subset] == 0 and value[subset] > best_value:
                best_value, best_set = value[subset], selected[subset]
        total += best_value
        chosen.extend(carrier[position] for position in range(len(carrier)) if (best_set >> position) & 1)
    return total, tuple(chosen)


def endo_member(nu1: SubDist, nu2: SubDist, phi: Relation, g: Grade, symmetric: bool = True,
                bound: int = DEFAULT_BRUTE_FORCE_BOUND) -> Tuple[bool, LiftingCertificate]:
    """
    Decides the endorelational lifting: every Φ-closed event A satisfies ν1(A) <= γ ν2(A) + δ (and, when
    symmetric, every Φ-opposite-closed event satisfies ν2(A) <= γ ν1(A) + δ).

    :return: The verdict and a certificate naming the worst closed event.
    """
    gamma = g.gamma
    checks = [('forward', nu1, nu2, phi)]
    if symmetric:
        checks.append(('backward', nu2, nu1, phi.opposite()))
    certificate: Optional[LiftingCertificate] = None
    for direction, first, second, relation in checks:
        excess, event = _closed_excess(first, second, relation, gamma, bound)
        lhs = sum((first(point) for point in event), Fraction(0))
        rhs = gamma * sum((second(point) for point in event), Fraction(0)) + g.delta
        certificate = LiftingCertificate(_within(excess, g.delta), direction, event, lhs, rhs, excess)
        if not certificate.member:
            return False, certificate
    return True, certificate
