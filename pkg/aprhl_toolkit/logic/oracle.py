from .assertion import holds, relation_of
from .judgement import Judgement
from ..aputils import Scalar
from ..config import RunConfig
from ..lang.optable import OpTable, program_optable
from ..lang.syntax import Cmd, Program
from ..lifting import LiftingCertificate, lifting_member, endo_member, min_delta
from ..measure import Memory
from ..semantics import ExactResult, interp_exact
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple
import logging

logger = logging.getLogger(__name__)


class OracleRefusal(Exception):
    """An exception raised when the oracle cannot decide a judgement: a variable has no finite domain,
    or the exact interpreter leaves too much mass undecided."""
    pass


@dataclass
class OracleResult:
    valid: bool
    """Whether every pair of initial memories satisfying the precondition yields output distributions
    in the lifting of the postcondition."""

    pairs: int
    """The number of initial memory pairs checked."""

    counterexample: Optional[Tuple[Memory, Memory]] = None
    """The first pair of initial memories whose outputs violate the lifting."""

    certificate: Optional[LiftingCertificate] = None
    """The lifting certificate of the counterexample, naming the violating event."""

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {'valid': self.valid, 'pairs': self.pairs}
        if self.counterexample is not None:
            record['counterexample'] = [dict(memory) for memory in self.counterexample]
            record['event'] = self.certificate.to_record() if self.certificate is not None else None
        return record


def universe(program: Program, ranges: Optional[Mapping[str, Sequence[Any]]] = None) -> List[Memory]:
    """
    Enumerates the memories over a program's variables.

    :param program: The program.
    :param ranges: Explicit value lists for some variables; the others need a finite type (bool or a
        bounded discrete type).
    :return: All memories, in a fixed order.
    :raises OracleRefusal: When a variable has neither a range nor a finite type.
    """
    ranges = dict(ranges or {})
    names, domains = [], []
    for name, ty in program.ctx:
        if name in ranges:
            domain = list(ranges[name])
        elif ty.base == 'bool':
            domain = [False, True]
        elif ty.base == 'int' and ty.bounds is not None:
            domain = list(range(ty.bounds[0], ty.bounds[1] + 1))
        else:
            raise OracleRefusal(f'The variable `{name}` of type {ty} has no finite domain; give it a range.')
        names.append(name)
        domains.append(domain)
    return [Memory(dict(zip(names, values))) for values in product(*domains)]


class RunCache:
    """Caches exact runs of commands on memories."""

    def __init__(self, program: Program, config: RunConfig, optable: OpTable):
        self.params: Dict[str, Any] = program.param_values()
        self.config: RunConfig = config
        self.optable: OpTable = optable
        self.cache: Dict[Tuple[Cmd, Memory], ExactResult] = {}

    def __call__(self, command: Cmd, memory: Memory) -> ExactResult:
        key = (command, memory)
        if key not in self.cache:
            result = interp_exact(command, memory, self.config.exact, self.params, self.optable)
            if result.uncertain > self.config.exact.mass_tol:
                raise OracleRefusal(f'The exact run from {dict(memory)} leaves mass {float(result.uncertain):.3g} '
                                    f'undecided.')
            self.cache[key] = result
        return self.cache[key]


def _pairs(judgement: Judgement, memories: Sequence[Memory], params: Mapping[str, Any],
           optable: OpTable) -> List[Tuple[Memory, Memory]]:
    return [(m1, m2) for m1 in memories for m2 in memories
            if holds(judgement.pre, {1: m1, 2: m2}, params, optable)]


def judgement_valid(judgement: Judgement, memories: Sequence[Memory], program: Program,
                    config: Optional[RunConfig] = None, optable: Optional[OpTable] = None,
                    runs: Optional[RunCache] = None) -> OracleResult:
    """
    Decides a judgement extensionally: for every pair of memories satisfying the precondition, the
    exact output distributions must lie in the symmetric lifting of the postcondition at the judgement's
    grade (the endorelational lifting for endorelational judgements).

    :param judgement: The judgement.
    :param memories: The finite universe of initial memories.
    :param program: The program supplying declarations and parameters.
    :param config: The run configuration (unroll budget and lifting bound).
    :param optable: The operation table.
    :param runs: A cache of exact runs shared between calls.
    :return: The verdict, with a counterexample when invalid.
    """
    config = config or RunConfig()
    optable = program_optable(program, optable)
    params = program.param_values()
    runs = runs or RunCache(program, config, optable)
    relation = relation_of(judgement.post, params, optable)
    decide = endo_member if judgement.endo else lifting_member
    pairs = _pairs(judgement, memories, params, optable)
    for m1, m2 in pairs:
        member, certificate = decide(runs(judgement.left, m1).dist, runs(judgement.right, m2).dist, relation,
                                     judgement.grade, symmetric=True, bound=config.lifting.brute_force_bound)
        if not member:
            logger.debug('The judgement fails from %s and %s.', dict(m1), dict(m2))
            return OracleResult(False, len(pairs), (m1, m2), certificate)
    return OracleResult(True, len(pairs))


def required_delta(judgement: Judgement, memories: Sequence[Memory], program: Program,
                   config: Optional[RunConfig] = None, optable: Optional[OpTable] = None,
                   runs: Optional[RunCache] = None) -> Scalar:
    """:return: The least δ that makes the judgement valid at its γ over the universe."""
    config = config or RunConfig()
    optable = program_optable(program, optable)
    params = program.param_values()
    runs = runs or RunCache(program, config, optable)
    relation = relation_of(judgement.post, params, optable)
    worst: Scalar = Fraction(0)
    for m1, m2 in _pairs(judgement, memories, params, optable):
        delta = min_delta(runs(judgement.left, m1).dist, runs(judgement.right, m2).dist, relation,
                          judgement.grade.gamma, symmetric=True, bound=config.lifting.brute_force_bound)
        worst = max(worst, delta)
    return worst
