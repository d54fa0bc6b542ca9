from .evaluate import evaluate_vector, build_mechanism, param_values, EvaluationError
from ..lang.optable import OpTable, default_optable, program_optable
from ..lang.syntax import Ty, Skip, Null, Assign, Sample, Seq, If, While, Cmd, Program, TypingContext
from ..measure import Memory, SubDist
from concurrent import futures
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple
import logging
import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE: int = 65_536


def block_generator(seed: int, block: int) -> np.random.Generator:
    """:return: The counter-based random stream of one block of trials, keyed by (seed, block)."""
    return np.random.Generator(np.random.Philox(key=[seed % 2 ** 64, block]))


def _column(value: Any, size: int, ty: Optional[Ty] = None) -> np.ndarray:
    if isinstance(value, bool):
        return np.full(size, value, dtype=bool)
    if isinstance(value, int) and (ty is None or ty.base != 'real'):
        return np.full(size, value, dtype=np.int64)
    if isinstance(value, tuple):
        return np.tile(np.asarray([float(item) for item in value]), (size, 1))
    return np.full(size, float(value), dtype=float)


def _python_value(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return tuple(float(item) for item in value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass
class SampleResult:
    trials: int
    """The number of executions."""

    columns: Dict[str, np.ndarray]
    """The final value of every variable, one entry per run that produced an outcome."""

    exhausted: int
    """The runs without an outcome: fuel exhaustion or an executed `null`."""

    seed: int
    """The seed of the counter-based generator."""

    fuel: int
    """The loop-iteration budget of each run."""

    block_size: int = DEFAULT_BLOCK_SIZE
    """The number of trials sharing one random stream."""

    nulled: int = 0
    """The part of `exhausted` caused by `null` rather than fuel."""

    @property
    def completed(self) -> int:
        return self.trials - self.exhausted

    @property
    def outcomes(self) -> List[Memory]:
        """:return: The final memories of the completed runs (materialised on demand)."""
        names = sorted(self.columns)
        return [Memory((name, _python_value(self.columns[name][index])) for name in names)
                for index in range(self.completed)]

    def values(self, name: str) -> np.ndarray:
        return self.columns[name]

    def frequencies(self, names: Optional[Sequence[str]] = None) -> SubDist:
        """
        :param names: The variables to keep (all by default).
        :return: The empirical distribution of the projected outcomes, as a fraction of all trials.
        """
        names = sorted(names if names is not None else self.columns)
        counts: Dict[Memory, int] = {}
        for index in range(self.completed):
            memory = Memory((name, _python_value(self.columns[name][index])) for name in names)
            counts[memory] = counts.get(memory, 0) + 1
        return SubDist((memory, Fraction(count, self.trials)) for memory, count in counts.items())

    def to_record(self) -> Dict[str, Any]:
        summary: Dict[str, Any] = {}
        for name, column in sorted(self.columns.items()):
            if column.ndim == 1 and column.dtype != bool and len(column):
                summary[name] = {'mean': float(np.mean(column)), 'min': float(np.min(column)),
                                 'max': float(np.max(column))}
            elif column.ndim == 1 and len(column):
                summary[name] = {'true_fraction': float(np.mean(column))}
        return {'trials': self.trials, 'completed': self.completed, 'exhausted': self.exhausted,
                'nulled': self.nulled, 'seed': self.seed, 'fuel': self.fuel, 'block_size': self.block_size,
                'summary': summary}


class _Block:
    """Executes a command on every trial of one block, lane by lane in lockstep."""

    def __init__(self, sampler: 'Sampler', columns: Dict[str, np.ndarray], size: int, rng: np.random.Generator):
        self.sampler: Sampler = sampler
        self.columns: Dict[str, np.ndarray] = columns
        self.rng: np.random.Generator = rng
        self.size: int = size
        self.alive: np.ndarray = np.ones(self.size, dtype=bool)
        self.nulled: np.ndarray = np.zeros(self.size, dtype=bool)
        self.steps: np.ndarray = np.zeros(self.size, dtype=np.int64)

    def value(self, expr: Any) -> np.ndarray:
        return evaluate_vector(expr, self.columns, self.size, self.sampler.params, self.sampler.optable)

    def execute(self, command: Cmd, mask: np.ndarray) -> None:
        mask = mask & self.alive
        if not mask.any() or isinstance(command, Skip):
            return
        if isinstance(command, Null):
            self.alive[mask] = False
            self.nulled[mask] = True
        elif isinstance(command, Assign):
            column = self.columns[command.var]
            column[mask] = self.value(command.expr)[mask].astype(column.dtype, copy=False)
        elif isinstance(command, Sample):
            mech = self.sampler.mechanism(command)
            args = [self.value(arg)[mask] for arg in command.dist.args]
            draws = mech.sample_many(args[0] if args else None, int(mask.sum()), self.rng)
            column = self.columns[command.var]
            column[mask] = np.asarray(draws).astype(column.dtype, copy=False)
        elif isinstance(command, Seq):
            self.execute(command.first, mask)
            self.execute(command.second, mask)
        elif isinstance(command, If):
            truth = self.value(command.guard).astype(bool)
            self.execute(command.then, mask & truth)
            self.execute(command.orelse, mask & ~truth)
        elif isinstance(command, While):
            active = mask & self.value(command.guard).astype(bool)
            while active.any():
                self.steps[active] += 1
                starved = active & (self.steps > self.sampler.fuel)
                self.alive[starved] = False
                active &= ~starved
                self.execute(command.body, active)
                active &= self.alive & self.value(command.guard).astype(bool)
        else:
            raise EvaluationError(f'Unexpected command node {command!r}.')


class Sampler:
    """The Monte-Carlo interpreter. Trials are split into blocks; block b draws from the Philox stream
    keyed by (seed, b), so a trial's trajectory depends only on the seed and its index."""

    def __init__(self, params: Optional[Mapping[str, Any]] = None, optable: Optional[OpTable] = None,
                 fuel: int = 10_000, block_size: int = DEFAULT_BLOCK_SIZE, ctx: Optional[TypingContext] = None):
        if fuel < 0:
            raise ValueError(f'The fuel `{fuel}` must be nonnegative.')
        if block_size <= 0:
            raise ValueError(f'The block size `{block_size}` must be positive.')
        self.params: Dict[str, Any] = param_values(params)
        self.optable: OpTable = optable or default_optable()
        self.fuel: int = fuel
        self.block_size: int = block_size
        self.types: Dict[str, Ty] = dict(ctx) if ctx is not None else {}
        self._mechanisms: Dict[Any, Any] = {}

    def mechanism(self, sample: Sample) -> Any:
        if sample.dist not in self._mechanisms:
            self._mechanisms[sample.dist] = build_mechanism(sample.dist, self.params, self.optable)
        return self._mechanisms[sample.dist]

    def run_block(self, command: Cmd, memory: Mapping[str, Any], seed: int, block: int,
                  size: int) -> Tuple[Dict[str, np.ndarray], int, int]:
        """:return: The columns of the completed runs, the number of exhausted runs and of nulled runs."""
        columns = {name: _column(value, size, self.types.get(name)) for name, value in memory.items()}
        state = _Block(self, columns, size, block_generator(seed, block))
        state.execute(command, np.ones(size, dtype=bool))
        completed = {name: column[state.alive] for name, column in state.columns.items()}
        return completed, int((~state.alive).sum()), int(state.nulled.sum())

    def run(self, command: Cmd, memory: Mapping[str, Any], trials: int, seed: int,
            workers: int = 1) -> SampleResult:
        if trials < 0:
            raise ValueError(f'The number of trials `{trials}` must be nonnegative.')
        for name in memory:
            if isinstance(memory[name], SubDist):
                raise ValueError(f'The initial value of `{name}` must be a single value.')
        blocks = [(index, min(self.block_size, trials - index * self.block_size))
                  for index in range(-(-trials // self.block_size))]

        # Blocks are independent streams, so the schedule never changes the result:
        if workers > 1 and len(blocks) > 1:
            with futures.ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda item: self.run_block(command, memory, seed, *item), blocks))
        else:
            parts = [self.run_block(command, memory, seed, index, size) for index, size in blocks]

        names = list(memory)
        columns = {name: np.concatenate([part[0][name] for part in parts]) if parts
                   else _column(memory[name], 0) for name in names}
        exhausted = sum(part[1] for part in parts)
        nulled = sum(part[2] for part in parts)
        logger.debug('Sampled %d trials (seed %d): %d exhausted', trials, seed, exhausted)
        return SampleResult(trials, columns, exhausted, seed, self.fuel, self.block_size, nulled)


def interp_sample(
        command: Cmd,
        memory: Mapping[str, Any],
        trials: int,
        fuel: int,
        seed: int,
        params: Optional[Mapping[str, Any]] = None,
        optable: Optional[OpTable] = None,
        block_size: int = DEFAULT_BLOCK_SIZE,
        workers: int = 1,
        ctx: Optional[TypingContext] = None
) -> SampleResult:
    """
    Runs a command many times with fresh randomness.

    :param command: The typed command.
    :param memory: The initial memory.
    :param trials: The number of runs.
    :param fuel: The loop-iteration budget of each run; runs that exceed it are counted as exhausted.
    :param seed: The generator seed.
    :param params: Declared parameter values.
    :param optable: The operation table.
    :param block_size: The number of trials per random stream.
    :param workers: The number of threads executing blocks.
    :param ctx: The typing context, fixing the carrier of each variable (int literals in real cells).
    :return: The sample result.
    """
    return Sampler(params, optable, fuel, block_size, ctx).run(command, memory, trials, seed, workers)


def sample_program(program: Program, memory: Mapping[str, Any], trials: int, fuel: int, seed: int,
                   optable: Optional[OpTable] = None, **kwargs: Any) -> SampleResult:
    return interp_sample(program.body, memory, trials, fuel, seed, program.param_values(),
                         program_optable(program, optable), ctx=program.ctx, **kwargs)
