from .membership import LiftingCertificate, lifting_member, min_delta
from .relation import Relation, Explicit, Eq, full_relation, empty_relation
from .witness import WitnessPair, Infeasible, witness_search
from ..aputils import Scalar, format_scalar
from ..grade import Grade, GradeError
from ..measure import SubDist, SubDistError
from ..records import RecordReader
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union
import logging
import os

logger = logging.getLogger(__name__)

LIFT_VERSIONS: Tuple[int, ...] = (1,)

NAMED_RELATIONS = {
    'eq': Eq,
    'full': full_relation,
    'empty': empty_relation,
}


def _hashable(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_hashable(item) for item in value)
    return value


@dataclass
class LiftCheck:
    """One lifting question: are two distributions related by the lifting of a relation at a grade?"""

    left: SubDist
    right: SubDist
    relation: Relation
    grade: Grade
    symmetric: bool = True
    witness: bool = False
    """Whether to also search for a witness pair."""

    expect: Optional[bool] = None
    """The expected membership verdict, if the file states one."""

    location: str = '<lift>'


@dataclass
class LiftCheckResult:
    check: LiftCheck
    member: bool
    """The membership verdict."""

    certificate: LiftingCertificate
    """The worst (or violating) event."""

    delta: Scalar
    """The least δ that makes the membership hold at the check's γ."""

    witness: Optional[Union[WitnessPair, Infeasible]] = None

    @property
    def passed(self) -> bool:
        """:return: True if the verdict matches the expectation (or membership holds when none is given)."""
        return self.member == (self.check.expect if self.check.expect is not None else True)

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            'location': self.check.location,
            'relation': self.check.relation.name,
            'grade': self.check.grade.to_record(),
            'symmetric': self.check.symmetric,
            'member': self.member,
            'min_delta': format_scalar(self.delta),
            'event': self.certificate.to_record(),
            'passed': self.passed,
        }
        if self.check.expect is not None:
            record['expect'] = self.check.expect
        if self.witness is not None:
            record['witness'] = self.witness.to_record()
        return record


def run_lift_check(check: LiftCheck) -> LiftCheckResult:
    member, certificate = lifting_member(check.left, check.right, check.relation, check.grade, check.symmetric)
    delta = min_delta(check.left, check.right, check.relation, check.grade.gamma, check.symmetric)
    witness = witness_search(check.left, check.right, check.relation, check.grade) if check.witness else None
    logger.debug('%s: member=%s, least delta %s', check.location, member, delta)
    return LiftCheckResult(check, member, certificate, delta, witness)


class LiftLoader:
    """
    Reads a lift-check file:

        lift 1
        dist nu1 = [(0, 1/2), (1, 1/2)]
        dist nu2 = [(0, 1/4), (1, 3/4)]
        check(left: nu1, right: nu2, relation: "eq", gamma: 3, delta: 0, expect: true)

    Relations are `eq`, `full`, `empty` or an explicit list of related pairs.
    """

    FIELDS = {'left', 'right', 'relation', 'gamma', 'eps', 'delta', 'symmetric', 'witness', 'expect'}

    def __init__(self, text: str, source: str = '<lift>'):
        self.reader: RecordReader = RecordReader(text, source)
        self.env: Dict[str, Any] = {}

    def load(self) -> List[LiftCheck]:
        self.reader.header('lift', LIFT_VERSIONS)
        stream = self.reader.stream
        checks: List[LiftCheck] = []
        while not self.reader.at_end():
            keyword, token = self.reader.name()
            if keyword in ('dist', 'let'):
                name = stream.expect_kind('ident', 'a name')
                stream.expect('=')
                value = self.reader.evaluate(self.reader.value(), self.env)
                self.env[name.text] = self._dist(value, name) if keyword == 'dist' else value
            elif keyword == 'check':
                checks.append(self._check(token))
            else:
                raise self.reader.error(f'Unknown item `{keyword}`; expected dist, let or check.', token)
        return checks

    def _dist(self, value: Any, token) -> SubDist:
        if isinstance(value, SubDist):
            return value
        try:
            return SubDist((_hashable(point), weight) for point, weight in value)
        except (SubDistError, TypeError, ValueError) as error:
            raise self.reader.error(f'Expected a list of (point, weight) pairs: {error}', token)

    def _relation(self, value: Any, token) -> Relation:
        if isinstance(value, str):
            if value not in NAMED_RELATIONS:
                raise self.reader.error(f'Unknown relation `{value}`; expected one of {sorted(NAMED_RELATIONS)} '
                                        f'or a list of pairs.', token)
            return NAMED_RELATIONS[value]()
        try:
            return Explicit(frozenset((_hashable(x), _hashable(y)) for x, y in value))
        except (TypeError, ValueError) as error:
            raise self.reader.error(f'Expected a list of related pairs: {error}', token)

    def _check(self, token) -> LiftCheck:
        values = {item.name: self.reader.evaluate(item.value, self.env) for item in self.reader.fields()}
        unknown = set(values) - self.FIELDS
        if unknown:
            raise self.reader.error(f'Unknown fields {sorted(unknown)}.', token)
        for required in ('left', 'right'):
            if required not in values:
                raise self.reader.error(f'The check needs `{required}`.', token)
        try:
            if 'gamma' in values:
                grade = Grade.from_gamma(values['gamma'], values.get('delta', 0))
            else:
                grade = Grade(values.get('eps', 0), values.get('delta', 0))
        except (GradeError, TypeError) as error:
            raise self.reader.error(str(error), token)
        return LiftCheck(self._dist(values['left'], token), self._dist(values['right'], token),
                         self._relation(values.get('relation', 'eq'), token), grade,
                         bool(values.get('symmetric', True)), bool(values.get('witness', False)),
                         values.get('expect'), self.reader.location(token))


def load_lift_checks(path: str) -> List[LiftCheck]:
    if not os.path.isfile(path):
        raise FileNotFoundError(f'The lift-check file {path} does not exist.')
    with open(path, 'r', encoding='utf-8') as lift_file:
        return LiftLoader(lift_file.read(), path).load()
