from dataclasses import dataclass
from fractions import Fraction
from math import floor, ceil, gcd
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Tuple
import logging

logger = logging.getLogger(__name__)

# Relations of a constraint `terms + const REL 0`:
LE, LT, EQ = 'le', 'lt', 'eq'


class BudgetExceeded(Exception):
    """An exception raised when elimination would build more constraints than allowed."""
    pass


@dataclass(frozen=True)
class Constraint:
    """The constraint Σ coeffs[a]·a + const (<=, < or =) 0 over rational atoms."""

    coeffs: FrozenSet[Tuple[Hashable, Fraction]]
    const: Fraction
    relation: str

    @staticmethod
    def build(coeffs: Dict[Hashable, Fraction], const: Fraction, relation: str) -> 'Constraint':
        return Constraint(frozenset((atom, Fraction(value)) for atom, value in coeffs.items() if value != 0),
                          Fraction(const), relation)

    def terms(self) -> Dict[Hashable, Fraction]:
        return dict(self.coeffs)

    def atoms(self) -> List[Hashable]:
        return [atom for atom, _ in self.coeffs]

    def trivial(self) -> Optional[bool]:
        """:return: The truth value of a constraint without atoms, None otherwise."""
        if self.coeffs:
            return None
        if self.relation == LE:
            return self.const <= 0
        if self.relation == LT:
            return self.const < 0
        return self.const == 0


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def tighten(constraint: Constraint, integral: Callable[[Hashable], bool]) -> Optional[Constraint]:
    """
    Strengthens a constraint whose atoms are all integers: coefficients are scaled to coprime integers and
    the constant is rounded, turning strict inequalities into non-strict ones.

    :return: The tightened constraint, or None when an equality has no integer solution.
    """
    if not constraint.coeffs or not all(integral(atom) for atom in constraint.atoms()):
        return constraint
    terms = constraint.terms()
    scale = 1
    for value in terms.values():
        scale = _lcm(scale, value.denominator)
    scaled = {atom: int(value * scale) for atom, value in terms.items()}
    divisor = 0
    for value in scaled.values():
        divisor = gcd(divisor, abs(value))
    const = constraint.const * scale / divisor
    coeffs = {atom: Fraction(value, divisor) for atom, value in scaled.items()}
    if constraint.relation == EQ:
        if const.denominator != 1:
            return None
        return Constraint.build(coeffs, const, EQ)
    if constraint.relation == LT:
        return Constraint.build(coeffs, Fraction(floor(const) + 1), LE)
    return Constraint.build(coeffs, Fraction(ceil(const)), LE)


def _combine(upper: Constraint, lower: Constraint, atom: Hashable) -> Constraint:
    a = upper.terms()[atom]
    b = -lower.terms()[atom]
    coeffs: Dict[Hashable, Fraction] = {}
    for source, factor in ((upper, b), (lower, a)):
        for other, value in source.coeffs:
            coeffs[other] = coeffs.get(other, Fraction(0)) + factor * value
    coeffs.pop(atom, None)
    relation = LT if LT in (upper.relation, lower.relation) else LE
    return Constraint.build(coeffs, b * upper.const + a * lower.const, relation)


def _substitute(constraint: Constraint, atom: Hashable, pivot: Constraint) -> Constraint:
    """Eliminates `atom` from a constraint using the equality `pivot`."""
    terms = constraint.terms()
    if atom not in terms:
        return constraint
    factor = terms[atom] / pivot.terms()[atom]
    coeffs = dict(terms)
    for other, value in pivot.coeffs:
        coeffs[other] = coeffs.get(other, Fraction(0)) - factor * value
    coeffs.pop(atom, None)
    return Constraint.build(coeffs, constraint.const - factor * pivot.const, constraint.relation)


def infeasible(constraints: Iterable[Constraint], integral: Callable[[Hashable], bool] = lambda atom: False,
               limit: int = 4_000) -> bool:
    """
    Decides whether a conjunction of linear constraints has no rational solution, strengthened by
    integer rounding for constraints over integer atoms. Equalities are eliminated first, then the
    remaining inequalities by Fourier-Motzkin elimination.

    :param constraints: The constraints.
    :param integral: Tells which atoms range over the integers.
    :param limit: The largest number of constraints kept at any elimination step.
    :return: True if the constraints are proven unsatisfiable, False otherwise.
    :raises BudgetExceeded: When elimination exceeds the limit.
    """
    pending: List[Constraint] = []
    for constraint in constraints:
        tightened = tighten(constraint, integral)
        if tightened is None:
            return True
        pending.append(tightened)

    # Equalities:
    while True:
        pivot = next((c for c in pending if c.relation == EQ and c.coeffs), None)
        if pivot is None:
            break
        atom = min(pivot.atoms(), key=repr)
        rest: List[Constraint] = []
        for constraint in pending:
            if constraint is pivot:
                continue
            reduced = tighten(_substitute(constraint, atom, pivot), integral)
            if reduced is None:
                return True
            rest.append(reduced)
        pending = rest

    # Inequalities:
    current = set(pending)
    while True:
        if any(c.trivial() is False for c in current):
            return True
        current = {c for c in current if c.trivial() is None}
        if not current:
            return False
        atoms = {atom for c in current for atom in c.atoms()}

        def cost(atom: Hashable) -> int:
            up = sum(1 for c in current if c.terms().get(atom, 0) > 0)
            down = sum(1 for c in current if c.terms().get(atom, 0) < 0)
            return up * down - up - down

        atom = min(sorted(atoms, key=repr), key=cost)
        uppers = [c for c in current if c.terms().get(atom, 0) > 0]
        lowers = [c for c in current if c.terms().get(atom, 0) < 0]
        following = {c for c in current if atom not in c.terms()}
        for upper in uppers:
            for lower in lowers:
                combined = tighten(_combine(upper, lower, atom), integral)
                following.add(combined)
                if len(following) > limit:
                    raise BudgetExceeded(f'Elimination exceeded {limit} constraints.')
        current = following
