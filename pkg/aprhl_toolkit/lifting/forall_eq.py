from .membership import lifting_member, DEFAULT_BRUTE_FORCE_BOUND
from .relation import LiftingError, key_equality, key_implication
from ..grade import Grade, grade_sum
from ..measure import SubDist
from dataclasses import dataclass
from typing import Any, Callable, Hashable, List, Sequence, Tuple
import logging

logger = logging.getLogger(__name__)


def first_coordinate(point: Hashable) -> Any:
    return point[0]


@dataclass
class ForallEqResult:
    combined: bool
    """Whether (ν1, ν2) lies in the lifting of x<1> = x<2> at the combined grade."""

    grade: Grade
    """The combined grade (γ, Σ_i δ_i)."""

    premises: List[Tuple[Any, bool]]
    """Each value i with whether its membership x<1> = i ⇒ x<2> = i held."""

    def __bool__(self) -> bool:
        return self.combined


def forall_eq_combine(
        memberships: Sequence[Tuple[Any, Grade]],
        nu1: SubDist,
        nu2: SubDist,
        key: Callable[[Hashable], Any] = first_coordinate,
        bound: int = DEFAULT_BRUTE_FORCE_BOUND
) -> ForallEqResult:
    """
    Combines per-value memberships (ν1, ν2) ∈ G^(γ,δ_i)(x<1> = i ⇒ x<2> = i) into the membership
    (ν1, ν2) ∈ G^(γ,Σδ_i)(x<1> = x<2>), where x is read by `key` (the first coordinate by default).

    :param memberships: The pairs (i, grade of the membership for i); every grade must share γ.
    :param nu1: The first distribution.
    :param nu2: The second distribution.
    :param key: Reads the discrete coordinate x from a point.
    :param bound: The brute-force bound of the membership checks.
    :return: The verdict with the per-value premise checks.
    """
    if not memberships:
        raise ValueError('At least one membership is needed.')
    gammas = {grade.log_gamma for _, grade in memberships}
    if len(gammas) > 1:
        raise LiftingError(f'The memberships must share gamma; found log-gammas {sorted(map(float, gammas))}.')

    premises: List[Tuple[Any, bool]] = []
    for value, grade in memberships:
        member, _ = lifting_member(nu1, nu2, key_implication(key, value), grade, bound=bound)
        premises.append((value, member))

    values = {value for value, _ in memberships}
    missing = {key(point) for point in nu1.support()} - values
    if missing:
        raise LiftingError(f'The memberships do not cover the values {sorted(missing, key=repr)}.')

    template = memberships[0][1]
    combined_grade = Grade(template.log_gamma, grade_sum([grade for _, grade in memberships]).delta,
                           exact_gamma=template.exact_gamma)
    combined, _ = lifting_member(nu1, nu2, key_equality(key), combined_grade, bound=bound)
    logger.debug('Forall-eq over %d values: premises %s, combined %s', len(memberships), premises, combined)
    return ForallEqResult(combined, combined_grade, premises)
