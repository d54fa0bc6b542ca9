from ..aputils import Scalar, to_fraction
from ..config import RunConfig
from ..grade import Grade, GradeError
from ..lang.lexer import PWhileSyntaxError
from ..lang.optable import OpTable, default_optable, program_optable
from ..lang.parser import parse_file, parse_expression
from ..lang.syntax import Expr, Program
from ..lang.typecheck import TypeChecker, PWhileTypeError, initial_memory
from ..logic.assertion import l1_distance
from ..measure import Memory
from ..records import RecordReader, RecordSyntaxError
from ..semantics import SampleResult, sample_program
from ..semantics.evaluate import evaluate_vector
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple
from scipy import stats
import logging
import numpy as np
import os

logger = logging.getLogger(__name__)

AUDIT_VERSIONS: Tuple[int, ...] = (1,)

# Audits below this many trials per run are rejected.
MIN_TRIALS: int = 1000


class AuditError(Exception):
    """An exception raised when an audit spec is malformed: too few trials, an adjacency pair that
    exceeds its declared bound, or an event family that does not fit the program's outputs."""
    pass


@dataclass
class AdjacentPair:
    left: Memory
    """The initial memory of the first run."""

    right: Memory
    """The initial memory of the second run."""

    bound: Scalar
    """The declared AdjL1 bound between the two memories."""

    @property
    def distance(self) -> Fraction:
        """:return: The L1 distance between the two memories, summed over the variables."""
        return sum((l1_distance(self.left[name], self.right[name]) for name in self.left), Fraction(0))

    def swapped(self) -> 'AdjacentPair':
        return AdjacentPair(self.right, self.left, self.bound)


@dataclass
class EventFamily:
    """
    The events an audit tests. Either histogram events over one output variable (equal-probability bins of
    the pooled sample for reals, one event per value for discrete outputs, or explicit bin edges or
    values), or explicit predicates over the final memory.
    """

    output: Optional[str] = None
    bins: Optional[int] = None
    edges: Optional[List[float]] = None
    values: Optional[List[Any]] = None
    predicates: List[str] = field(default_factory=list)


@dataclass
class AuditSpec:
    program: Program
    """The typed program, with its parameters already substituted."""

    pairs: List[AdjacentPair]
    """The adjacent input pairs; each pair is audited in both directions."""

    claim: Grade
    """The claimed privacy grade (e^ε, δ)."""

    events: EventFamily
    """The tested events."""

    trials: int
    """The number of runs per input."""

    seed: int
    """The seed shared by both runs of a pair (common random numbers)."""

    alpha: float = 0.001
    """The family-wise significance level."""

    fuel: int = 10_000
    """The loop-iteration budget of each run."""

    workers: int = 1
    """The number of threads sampling blocks of trials."""

    source: str = '<audit>'

    def __post_init__(self):
        if self.trials < MIN_TRIALS:
            raise AuditError(f'An audit needs at least {MIN_TRIALS} trials per run, not {self.trials}.')
        if not 0 < self.alpha < 1:
            raise AuditError(f'The significance level `{self.alpha}` must lie in (0, 1).')
        if not self.pairs:
            raise AuditError('An audit needs at least one adjacent pair.')
        for pair in self.pairs:
            if pair.distance > to_fraction(pair.bound):
                raise AuditError(f'The inputs {dict(pair.left)} and {dict(pair.right)} are at L1 distance '
                                 f'{pair.distance}, above their declared bound {pair.bound}.')


@dataclass
class Margin:
    estimate: float
    """The estimated margin p1 - (e^ε p2 + δ)."""

    lower: float
    """The lower confidence bound of the margin."""

    upper: float
    """The upper confidence bound of the margin."""

    def to_record(self) -> Dict[str, float]:
        return {'estimate': self.estimate, 'lower': self.lower, 'upper': self.upper}


@dataclass
class EventEstimate:
    event: str
    """A readable description of the event."""

    p1: float
    """The fraction of the first input's runs that land in the event."""

    p2: float
    """The same fraction for the second input."""

    interval1: Tuple[float, float]
    """The confidence interval of p1 (the upper end includes the exhausted runs)."""

    interval2: Tuple[float, float]

    forward: Margin
    """The margin p1 - (e^ε p2 + δ)."""

    backward: Margin
    """The margin p2 - (e^ε p1 + δ)."""

    def to_record(self) -> Dict[str, Any]:
        return {
            'event': self.event,
            'p1': self.p1,
            'p2': self.p2,
            'ci1': list(self.interval1),
            'ci2': list(self.interval2),
            'forward': self.forward.to_record(),
            'backward': self.backward.to_record(),
        }


@dataclass
class Violation:
    pair: int
    """The index of the adjacent pair."""

    event: str
    """The event whose inequality fails."""

    direction: str
    """`forward` when the first input's probability is too large, `backward` otherwise."""

    margin: Margin
    """The margin, whose lower confidence bound exceeds 0."""

    def to_record(self) -> Dict[str, Any]:
        return {'pair': self.pair, 'event': self.event, 'direction': self.direction, 'margin': self.margin.to_record()}


@dataclass
class PairReport:
    pair: AdjacentPair
    estimates: List[EventEstimate]
    exhausted: Tuple[int, int]
    """The runs of each input that produced no outcome (fuel exhaustion or `null`)."""

    @property
    def forward(self) -> List[Margin]:
        return [estimate.forward for estimate in self.estimates]

    @property
    def backward(self) -> List[Margin]:
        return [estimate.backward for estimate in self.estimates]

    def to_record(self) -> Dict[str, Any]:
        return {
            'left': {name: _json_value(value) for name, value in self.pair.left.items()},
            'right': {name: _json_value(value) for name, value in self.pair.right.items()},
            'bound': _json_value(self.pair.bound),
            'exhausted': list(self.exhausted),
            'events': [estimate.to_record() for estimate in self.estimates],
        }


@dataclass
class AuditReport:
    claim: Grade
    """The audited grade."""

    pairs: List[PairReport]
    """One table of estimates per adjacent pair."""

    violation: Optional[Violation]
    """The worst violation found, if any."""

    level: float
    """The one-sided level of each confidence bound after the Bonferroni correction."""

    trials: int
    seed: int

    @property
    def verdict(self) -> str:
        """:return: `Violation` or `Consistent`; an audit never concludes that a program is private."""
        return 'Violation' if self.violation is not None else 'Consistent'

    @property
    def inconclusive(self) -> bool:
        """:return: True if the audit is Consistent but some margin's upper bound is above 0."""
        return self.violation is None and any(margin.upper > 0 for report in self.pairs
                                              for margin in report.forward + report.backward)

    def worst(self) -> Tuple[str, Margin]:
        """:return: The event and margin with the largest estimate across pairs and directions."""
        candidates = [(estimate.event, margin) for report in self.pairs for estimate in report.estimates
                      for margin in (estimate.forward, estimate.backward)]
        return max(candidates, key=lambda item: item[1].estimate)

    def to_record(self) -> Dict[str, Any]:
        event, margin = self.worst()
        return {
            'verdict': self.verdict,
            'inconclusive': self.inconclusive,
            'claim': self.claim.to_record(),
            'trials': self.trials,
            'seed': self.seed,
            'bound_level': self.level,
            'worst': {'event': event, 'margin': margin.to_record()},
            'violation': self.violation.to_record() if self.violation is not None else None,
            'pairs': [report.to_record() for report in self.pairs],
        }

    def describe(self) -> str:
        event, margin = self.worst()
        lines = [f'Verdict: {self.verdict}' + (' (inconclusive: some confidence intervals cross 0)'
                                               if self.inconclusive else ''),
                 f'Claim: {self.claim}, {self.trials} trials per run, seed {self.seed}',
                 f'Worst margin: {margin.estimate:.5f} on `{event}` '
                 f'(CI [{margin.lower:.5f}, {margin.upper:.5f}])']
        if self.violation is not None:
            lines.append(f'Violation on pair {self.violation.pair}, event `{self.violation.event}` '
                         f'({self.violation.direction}): margin lower bound {self.violation.margin.lower:.5f} > 0')
        return '\n'.join(lines)


def _json_value(value: Any) -> Any:
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else float(value)
    if isinstance(value, tuple):
        return [_json_value(item) for item in value]
    return value


# Statistics:

def clopper_pearson(count: int, trials: int, level: float) -> Tuple[float, float]:
    """
    Computes one-sided Clopper–Pearson bounds of a binomial proportion.

    :param count: The number of successes.
    :param trials: The number of trials.
    :param level: The probability that each bound fails.
    :return: The lower and upper bounds.
    """
    if not 0 <= count <= trials:
        raise ValueError(f'The count `{count}` must lie in [0, {trials}].')
    lower = 0.0 if count == 0 else float(stats.beta.ppf(level, count, trials - count + 1))
    upper = 1.0 if count == trials else float(stats.beta.ppf(1 - level, count + 1, trials - count))
    return lower, upper


def _margin(p1: float, bounds1: Tuple[float, float], p2: float, bounds2: Tuple[float, float], gamma: float,
            delta: float) -> Margin:
    return Margin(p1 - (gamma * p2 + delta), bounds1[0] - (gamma * bounds2[1] + delta),
                  bounds1[1] - (gamma * bounds2[0] + delta))


# Events:

def _histogram_events(events: EventFamily, first: np.ndarray, second: np.ndarray, discrete: bool,
                      default_bins: int) -> List[Tuple[str, np.ndarray, np.ndarray]]:
    name = events.output
    if events.values is not None or (discrete and events.edges is None and events.bins is None):
        values = events.values if events.values is not None else \
            sorted(set(np.unique(first).tolist()) | set(np.unique(second).tolist()))
        return [(f'{name} = {value}', first == value, second == value) for value in values]
    if events.edges is not None:
        edges = np.asarray(sorted(float(edge) for edge in events.edges))
    else:
        pooled = np.concatenate([first, second]).astype(float)
        bins = events.bins or default_bins
        edges = np.unique(np.quantile(pooled, np.linspace(0, 1, bins + 1)[1:-1])) if len(pooled) else np.array([])
    index1, index2 = np.searchsorted(edges, first, side='left'), np.searchsorted(edges, second, side='left')
    labels = []
    for k in range(len(edges) + 1):
        if len(edges) == 0:
            labels.append(f'{name} any')
        elif k == 0:
            labels.append(f'{name} <= {edges[0]:.6g}')
        elif k == len(edges):
            labels.append(f'{name} > {edges[-1]:.6g}')
        else:
            labels.append(f'{edges[k - 1]:.6g} < {name} <= {edges[k]:.6g}')
    return [(label, index1 == k, index2 == k) for k, label in enumerate(labels)]


class _Events:
    """Turns the samples of the two runs into per-event indicator arrays."""

    def __init__(self, spec: AuditSpec, optable: OpTable, default_bins: int):
        self.spec: AuditSpec = spec
        self.optable: OpTable = optable
        self.default_bins: int = default_bins
        events = spec.events
        if (events.output is None) == (not events.predicates):
            raise AuditError('The events need either an `output` variable or `predicates`, not both.')
        self.predicates: List[Tuple[str, Expr]] = []
        if events.output is not None:
            ty = spec.program.ctx.get(events.output)
            if ty is None:
                raise AuditError(f'The output `{events.output}` is not a program variable.')
            if ty.base == 'vec':
                raise AuditError(f'The output `{events.output}` is a vector; use predicates instead.')
            self.discrete: bool = ty.is_discrete()
        for text in events.predicates:
            try:
                parsed = parse_expression(text, optable, source='<event>')
                typed = TypeChecker(spec.program, optable).expr(parsed, f'event `{text}`')
            except (PWhileSyntaxError, PWhileTypeError) as error:
                raise AuditError(f'The event `{text}` is malformed: {error}')
            self.predicates.append((text, typed))

    def split(self, first: SampleResult, second: SampleResult) -> List[Tuple[str, np.ndarray, np.ndarray]]:
        if self.spec.events.output is not None:
            return _histogram_events(self.spec.events, first.values(self.spec.events.output),
                                     second.values(self.spec.events.output), self.discrete, self.default_bins)
        params = self.spec.program.param_values()
        return [(text, np.asarray(evaluate_vector(expr, first.columns, first.completed, params, self.optable),
                                  dtype=bool),
                 np.asarray(evaluate_vector(expr, second.columns, second.completed, params, self.optable), dtype=bool))
                for text, expr in self.predicates]


def _count_events(spec: AuditSpec, optable: OpTable, config: RunConfig) -> Tuple[List[Tuple], List[Tuple]]:
    """:return: For each pair, the event counts of both runs and the numbers of exhausted runs."""
    events = _Events(spec, optable, config.audit.bins)
    counted, exhausted = [], []
    for pair in spec.pairs:
        runs = [sample_program(spec.program, memory, spec.trials, spec.fuel, spec.seed,
                               block_size=config.audit.block_size, workers=spec.workers)
                for memory in (pair.left, pair.right)]
        counted.append([(label, int(np.sum(hits1)), int(np.sum(hits2)))
                        for label, hits1, hits2 in events.split(*runs)])
        exhausted.append((runs[0].exhausted, runs[1].exhausted))
    return counted, exhausted


def audit_dp(spec: AuditSpec, config: Optional[RunConfig] = None, optable: Optional[OpTable] = None) -> AuditReport:
    """
    Audits a claimed (ε, δ)-differential-privacy guarantee statistically. Each input of each adjacent pair
    is run `trials` times from the same random stream; for every event A the two directions
    P1(A) <= e^ε P2(A) + δ and P2(A) <= e^ε P1(A) + δ are tested with Clopper–Pearson bounds,
    Bonferroni-corrected over all events and directions. Runs without an outcome are added to the upper
    bound of their input's probabilities.

    :param spec: The audit spec.
    :param config: The run configuration (default bin count and block size).
    :param optable: The operation table.
    :return: The report; Violation only when a margin's lower confidence bound exceeds 0.
    """
    config = config or RunConfig()
    optable = program_optable(spec.program, optable)
    counted, exhausted = _count_events(spec, optable, config)
    tests = sum(len(items) for items in counted)
    level = spec.alpha / (4 * max(tests, 1))
    gamma, delta = float(spec.claim.gamma), float(spec.claim.delta)
    n = spec.trials

    reports: List[PairReport] = []
    violation: Optional[Violation] = None
    for index, (pair, items, (lost1, lost2)) in enumerate(zip(spec.pairs, counted, exhausted)):
        estimates: List[EventEstimate] = []
        for label, count1, count2 in items:
            low1, high1 = clopper_pearson(count1, n, level)
            low2, high2 = clopper_pearson(count2, n, level)
            bounds1, bounds2 = (low1, min(1.0, high1 + lost1 / n)), (low2, min(1.0, high2 + lost2 / n))
            p1, p2 = count1 / n, count2 / n
            estimate = EventEstimate(label, p1, p2, bounds1, bounds2, _margin(p1, bounds1, p2, bounds2, gamma, delta),
                                     _margin(p2, bounds2, p1, bounds1, gamma, delta))
            estimates.append(estimate)
            for direction, margin in (('forward', estimate.forward), ('backward', estimate.backward)):
                if margin.lower > 0 and (violation is None or margin.lower > violation.margin.lower):
                    violation = Violation(index, label, direction, margin)
        reports.append(PairReport(pair, estimates, (lost1, lost2)))
    report = AuditReport(spec.claim, reports, violation, level, spec.trials, spec.seed)
    logger.info('Audit of %s at %s: %s over %d events.', spec.source, spec.claim, report.verdict, tests)
    return report


# Spec files:

class AuditLoader:
    """
    Reads an audit spec in record syntax:

        audit 1
        program "laplace_release.pwhile"
        param sigma = 1
        pair(left: {x: 0}, right: {x: 1}, bound: 1)
        claim(eps: 1, delta: 0)
        events(output: "y", bins: 40)
        trials(n: 1000000, seed: 7, alpha: 0.001)
    """

    def __init__(self, text: str, source: str = '<audit>', base_dir: str = '.',
                 overrides: Optional[Mapping[str, Any]] = None, config: Optional[RunConfig] = None,
                 optable: Optional[OpTable] = None):
        self.reader: RecordReader = RecordReader(text, source)
        self.source: str = source
        self.base_dir: str = base_dir
        self.overrides: Dict[str, Any] = dict(overrides or {})
        self.config: RunConfig = config or RunConfig()
        self.optable: OpTable = optable or default_optable()
        self.program: Optional[Program] = None
        self.env: Dict[str, Any] = {}

    def load(self) -> AuditSpec:
        self.reader.header('audit', AUDIT_VERSIONS)
        stream = self.reader.stream
        raw_pairs: List[Tuple[Dict[str, Any], Any]] = []
        claim: Optional[Grade] = None
        events: Optional[EventFamily] = None
        settings: Dict[str, Any] = {}
        while not self.reader.at_end():
            keyword, token = self.reader.name()
            if keyword == 'program':
                path_token = stream.expect_kind('string', 'a program path')
                path = path_token.value if os.path.isabs(path_token.value) else \
                    os.path.join(self.base_dir, path_token.value)
                if not os.path.isfile(path):
                    raise self.reader.error(f'The program file {path} does not exist.', path_token)
                self.program = parse_file(path, self.optable)
                self.optable = program_optable(self.program, self.optable)
                self._substitute({})
            elif keyword in ('param', 'let'):
                name = stream.expect_kind('ident', 'a name')
                stream.expect('=')
                value = self.reader.evaluate(self.reader.value(), self.env)
                if keyword == 'param':
                    self._substitute({name.text: self.overrides.get(name.text, value)})
                else:
                    self.env[name.text] = value
            elif keyword == 'pair':
                raw_pairs.append((self._fields(token, {'left', 'right', 'bound'}), token))
            elif keyword == 'claim':
                claim = self._claim(self._fields(token, {'eps', 'gamma', 'delta'}), token)
            elif keyword == 'events':
                values = self._fields(token, {'output', 'bins', 'edges', 'values', 'predicates'})
                events = EventFamily(values.get('output'), values.get('bins'), values.get('edges'),
                                     values.get('values'), list(values.get('predicates', [])))
            elif keyword == 'trials':
                settings = self._fields(token, {'n', 'seed', 'alpha', 'fuel', 'workers'})
            else:
                raise self.reader.error(f'Unknown item `{keyword}`; expected program, param, let, pair, claim, '
                                        f'events or trials.', token)
        if self.program is None or claim is None or events is None or 'n' not in settings:
            raise self.reader.error('The audit needs a `program`, a `claim(...)`, `events(...)` and `trials(n: ...)`.')
        pairs = [self._pair(values, token) for values, token in raw_pairs]
        return AuditSpec(self.program, pairs, claim, events, int(settings['n']),
                         int(settings.get('seed', self.config.seed)),
                         float(settings.get('alpha', self.config.audit.alpha)), int(settings.get('fuel', 10_000)),
                         int(settings.get('workers', 1)), self.source)

    def _substitute(self, values: Mapping[str, Any]) -> None:
        if self.program is None:
            raise self.reader.error('The audit must name its `program` before its parameters.')
        shared = {name: value for name, value in self.overrides.items() if name in self.program.params}
        shared.update(values)
        try:
            self.program = self.program.with_params(shared)
        except ValueError as error:
            raise self.reader.error(str(error))
        self.env.update(self.program.param_values())

    def _fields(self, token, allowed: set) -> Dict[str, Any]:
        values = {item.name: self.reader.evaluate(item.value, self.env) for item in self.reader.fields()}
        unknown = set(values) - allowed
        if unknown:
            raise self.reader.error(f'Unknown fields {sorted(unknown)}; expected some of {sorted(allowed)}.', token)
        return values

    def _claim(self, values: Mapping[str, Any], token) -> Grade:
        try:
            if 'gamma' in values:
                return Grade.from_gamma(values['gamma'], values.get('delta', 0))
            return Grade(values['eps'], values.get('delta', 0))
        except KeyError:
            raise self.reader.error('The claim needs `eps` or `gamma`.', token)
        except (GradeError, TypeError) as error:
            raise self.reader.error(str(error), token)

    def _pair(self, values: Mapping[str, Any], token) -> AdjacentPair:
        if 'left' not in values or 'right' not in values:
            raise self.reader.error('A pair needs `left` and `right` memories.', token)
        try:
            left = initial_memory(self.program.ctx, values['left'])
            right = initial_memory(self.program.ctx, values['right'])
        except ValueError as error:
            raise self.reader.error(str(error), token)
        return AdjacentPair(left, right, values.get('bound', 1))


def load_audit(path: str, overrides: Optional[Mapping[str, Any]] = None, config: Optional[RunConfig] = None,
               optable: Optional[OpTable] = None) -> AuditSpec:
    """
    Loads an audit spec file; the program path is resolved relative to the spec's directory.

    :param path: The .audit file.
    :param overrides: Values replacing program parameters, e.g. {'eps': 0.5}.
    :return: The audit spec.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'The audit spec {path} does not exist.')
    with open(path, 'r', encoding='utf-8') as spec_file:
        text = spec_file.read()
    return AuditLoader(text, path, os.path.dirname(os.path.abspath(path)), overrides, config, optable).load()
