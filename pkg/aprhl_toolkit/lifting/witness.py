from .membership import skew_distance, _within
from .relation import Relation, Eq
from ..aputils import to_fraction
from ..grade import Grade
from ..measure import SubDist, SubDistError
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Hashable, Tuple, Union
import logging
import warnings
import pulp

logger = logging.getLogger(__name__)

# Float LP values are rationalised with this denominator bound before exact re-verification:
RATIONAL_DENOMINATOR: int = 10 ** 9


@dataclass
class WitnessPair:
    d_left: SubDist
    """The left witness d_L over pairs (x, y) in Ψ, with first marginal d1."""

    d_right: SubDist
    """The right witness d_R over pairs (x, y) in Ψ, with second marginal d2."""

    skew: Any
    """The skew distance Δ_γ(d_L, d_R), at most δ."""

    def to_record(self) -> Dict[str, Any]:
        return {'status': 'feasible',
                'd_left': [[repr(x), repr(y), str(weight)] for (x, y), weight in self.d_left.items()],
                'd_right': [[repr(x), repr(y), str(weight)] for (x, y), weight in self.d_right.items()],
                'skew': str(self.skew)}


@dataclass
class Infeasible:
    reason: str
    """Why no witness exists (or why none could be confirmed)."""

    inconclusive: bool = False
    """True when the LP found a float solution that did not survive exact re-verification."""

    @property
    def status(self) -> str:
        return 'inconclusive' if self.inconclusive else 'infeasible'

    def to_record(self) -> Dict[str, Any]:
        return {'status': self.status, 'reason': self.reason}


def _marginal(dist: SubDist, side: int) -> SubDist:
    return dist.map(lambda pair: pair[side])


def _repair(values: Dict[Tuple[Hashable, Hashable], Fraction], target: SubDist, side: int) -> Dict:
    """Moves the rationalisation error of each marginal onto its heaviest pair so the marginal is exact."""
    repaired = dict(values)
    for point, weight in target.items():
        pairs = [pair for pair in repaired if pair[side] == point]
        if not pairs:
            continue
        error = weight - sum((repaired[pair] for pair in pairs), Fraction(0))
        heaviest = max(pairs, key=lambda pair: repaired[pair])
        repaired[heaviest] = max(Fraction(0), repaired[heaviest] + error)
    return repaired


def witness_search(d1: SubDist, d2: SubDist, psi: Relation, g: Grade) -> Union[WitnessPair, Infeasible]:
    """
    Searches for witnesses d_L, d_R over Ψ ∩ (supp d1 × supp d2) with Dπ1(d_L) = d1, Dπ2(d_R) = d2 and
    Δ_γ(d_L, d_R) <= δ. Equality has the exact diagonal witness; other relations are solved as an LP whose
    solution is rationalised, repaired and re-verified exactly.

    :param d1: The first distribution.
    :param d2: The second distribution.
    :param psi: The relation the witnesses live on.
    :param g: The grade (γ, δ).
    :return: The witness pair, or Infeasible.
    """
    gamma, delta = g.gamma, g.delta

    if isinstance(psi, Eq):
        d_left = d1.map(lambda x: (x, x))
        d_right = d2.map(lambda y: (y, y))
        skew = skew_distance(d_left, d_right, gamma)
        if _within(skew, delta):
            return WitnessPair(d_left, d_right, skew)
        return Infeasible(f'the diagonal witnesses have skew distance {skew} > delta = {delta}')

    pairs = [(x, y) for x in d1.support() for y in d2.support() if psi.contains(x, y)]
    uncovered = [x for x in d1.support() if not any(pair[0] == x for pair in pairs)] + \
                [y for y in d2.support() if not any(pair[1] == y for pair in pairs)]
    if uncovered:
        return Infeasible(f'the points {uncovered!r} are related to nothing in the other support')

    # Define the feasibility LP over the related pairs, with slack variables
    # bounding the positive parts of d_L - γ d_R and d_R - γ d_L:
    index = range(len(pairs))
    model: pulp.LpProblem = pulp.LpProblem('Witness', pulp.LpMinimize)
    left = pulp.LpVariable.dicts('left', index, lowBound=0)
    right = pulp.LpVariable.dicts('right', index, lowBound=0)
    over = pulp.LpVariable.dicts('over', index, lowBound=0)
    under = pulp.LpVariable.dicts('under', index, lowBound=0)
    g_float, delta_float = float(gamma), float(delta)

    model += pulp.lpSum([over[i] + under[i] for i in index])
    for x, weight in d1.items():
        model += pulp.lpSum([left[i] for i in index if pairs[i][0] == x]) == float(weight)
    for y, weight in d2.items():
        model += pulp.lpSum([right[i] for i in index if pairs[i][1] == y]) == float(weight)
    for i in index:
        model += over[i] >= left[i] - g_float * right[i]
        model += under[i] >= right[i] - g_float * left[i]
    model += pulp.lpSum([over[i] for i in index]) <= delta_float
    model += pulp.lpSum([under[i] for i in index]) <= delta_float

    model.solve(pulp.PULP_CBC_CMD(msg=False))
    status = pulp.LpStatus[model.status]
    logger.debug('Witness LP over %d pairs: %s', len(pairs), status)
    if status == 'Infeasible':
        return Infeasible('the witness LP is infeasible')
    if status != 'Optimal':
        return Infeasible(f'the witness LP ended with status {status}', inconclusive=True)

    # Rationalise, repair the marginals, and verify exactly:
    def rational(variable: pulp.LpVariable) -> Fraction:
        return max(Fraction(0), to_fraction(float(variable.value() or 0.0)).limit_denominator(RATIONAL_DENOMINATOR))

    left_values = _repair({pairs[i]: rational(left[i]) for i in index}, d1, 0)
    right_values = _repair({pairs[i]: rational(right[i]) for i in index}, d2, 1)
    try:
        d_left, d_right = SubDist(left_values), SubDist(right_values)
    except SubDistError as error:
        return Infeasible(f'the rationalised witnesses are not sub-distributions: {error}', inconclusive=True)
    skew = skew_distance(d_left, d_right, gamma)
    if _marginal(d_left, 0) == d1 and _marginal(d_right, 1) == d2 and _within(skew, delta):
        return WitnessPair(d_left, d_right, skew)
    warnings.warn(f'The witness LP solution did not survive exact re-verification (skew {float(skew):.3g}).')
    return Infeasible('the LP solution did not survive exact re-verification', inconclusive=True)
