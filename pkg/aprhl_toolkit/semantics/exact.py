from .evaluate import evaluate, store_value, build_mechanism, param_values, EvaluationError
from ..config import ExactConfig
from ..lang.optable import OpTable, default_optable, program_optable
from ..lang.syntax import Skip, Null, Assign, Sample, Seq, If, While, Cmd, Program
from ..measure import Memory, SubDist, ZERO, dirac, mix, bind, prune
from ..mechanisms import ContinuousInExactMode, Mechanism
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union
import logging
import warnings

logger = logging.getLogger(__name__)


class UnrollBudgetExceeded(Exception):
    """An exception raised when a loop still holds more than the tolerated mass after the unroll budget
    and the configuration demands a certain result."""

    def __init__(self, residual: Fraction, budget: int):
        self.residual: Fraction = residual
        self.budget: int = budget
        super().__init__(f'The loop still holds mass {float(residual):.3g} after {budget} unrollings.')


@dataclass
class ExactResult:
    dist: SubDist
    """The output sub-distribution over memories."""

    residual: Fraction
    """The mass the truncated computation did not produce: loop mass left after the last unrolling,
    mass of loops that provably never exit, and pruned weight."""

    unroll_count: int
    """The number of loop unrollings performed, summed over every loop execution."""

    diverged: Fraction = Fraction(0)
    """The part of the residual held by loops that reached a fixed point without exiting; this mass
    is known to be absent from the exact result."""

    budget_exhausted: bool = False
    """True if some loop stopped on the unroll budget rather than by convergence."""

    @property
    def uncertain(self) -> Fraction:
        """:return: The residual mass whose fate is unknown (truncation and pruning)."""
        return self.residual - self.diverged

    def to_record(self) -> Dict[str, Any]:
        return {
            'dist': [{'memory': dict(point), 'weight': str(weight)} for point, weight in self.dist.items()],
            'mass': str(self.dist.mass()),
            'residual': str(self.residual),
            'diverged': str(self.diverged),
            'unroll_count': self.unroll_count,
            'budget_exhausted': self.budget_exhausted,
        }


class ExactInterpreter:
    """The finite-support denotational interpreter: commands act on whole sub-distributions of memories."""

    def __init__(self, params: Optional[Mapping[str, Any]] = None, optable: Optional[OpTable] = None,
                 config: Optional[ExactConfig] = None):
        self.params: Dict[str, Any] = param_values(params)
        self.optable: OpTable = optable or default_optable()
        self.config: ExactConfig = config or ExactConfig()
        self._mechanisms: Dict[Any, Mechanism] = {}
        self.residual: Fraction = Fraction(0)
        self.diverged: Fraction = Fraction(0)
        self.unrolls: int = 0
        self.exhausted: bool = False

    def mechanism(self, sample: Sample) -> Mechanism:
        if sample.dist not in self._mechanisms:
            if self.optable.dist(sample.dist.name).continuous:
                raise ContinuousInExactMode(f'`{sample.var} <$ {sample.dist.name}(...)` samples a continuous '
                                            f'mechanism; use the sampling interpreter.')
            self._mechanisms[sample.dist] = build_mechanism(sample.dist, self.params, self.optable)
        return self._mechanisms[sample.dist]

    def value(self, expr: Any, memory: Memory) -> Any:
        return evaluate(expr, memory, self.params, self.optable)

    def run(self, command: Cmd, start: Union[Memory, SubDist]) -> ExactResult:
        """
        Interprets a command from a memory (or an input sub-distribution).

        :param command: The typed command.
        :param start: The initial memory or sub-distribution.
        :return: The exact result.
        """
        self.residual, self.diverged, self.unrolls, self.exhausted = Fraction(0), Fraction(0), 0, False
        dist = start if isinstance(start, SubDist) else dirac(start)
        result = self.execute(command, dist)
        if self.exhausted and self.residual - self.diverged > self.config.mass_tol:
            if self.config.require_certainty:
                raise UnrollBudgetExceeded(self.residual - self.diverged, self.config.max_unroll)
            warnings.warn(f'The exact interpretation stopped on its unroll budget ({self.config.max_unroll}) '
                          f'with residual mass {float(self.residual - self.diverged):.3g}.')
        return ExactResult(result, self.residual, self.unrolls, self.diverged, self.exhausted)

    def execute(self, command: Cmd, dist: SubDist) -> SubDist:
        if dist.is_zero():
            return ZERO
        if isinstance(command, Skip):
            return dist
        if isinstance(command, Null):
            return ZERO
        if isinstance(command, Assign):
            return dist.map(lambda memory: memory.set(
                command.var, store_value(memory[command.var], self.value(command.expr, memory))))
        if isinstance(command, Sample):
            mech = self.mechanism(command)
            # Strength: pair the memory with a draw, then update the variable.
            return bind(dist, lambda memory: mech.exact_dist(
                *[self.value(arg, memory) for arg in command.dist.args]).map(
                lambda value: memory.set(command.var, store_value(memory[command.var], value))))
        if isinstance(command, Seq):
            return self.execute(command.second, self.execute(command.first, dist))
        if isinstance(command, If):
            then_part, else_part = self._split(command.guard, dist)
            return mix([(1, self.execute(command.then, then_part)), (1, self.execute(command.orelse, else_part))])
        if isinstance(command, While):
            return self._loop(command, dist)
        raise EvaluationError(f'Unexpected command node {command!r}.')

    def _split(self, guard: Any, dist: SubDist) -> Tuple[SubDist, SubDist]:
        truth = {memory: bool(self.value(guard, memory)) for memory in dist.support()}
        return dist.restrict(lambda memory: truth[memory]), dist.restrict(lambda memory: not truth[memory])

    def _loop(self, loop: While, dist: SubDist) -> SubDist:
        """The sup of the unrollings: each pass moves the mass that fails the guard to the output."""
        output = ZERO
        live = dist
        for _ in range(self.config.max_unroll):
            inside, leaving = self._split(loop.guard, live)
            output = mix([(1, output), (1, leaving)])
            if inside.mass() < self.config.mass_tol:
                self.residual += inside.mass()
                return output
            self.unrolls += 1
            following = self.execute(loop.body, inside)
            following, dropped = prune(following, self.config.prune_eps)
            self.residual += dropped
            if following == inside:
                # A fixed point inside the loop: this mass never exits.
                self.residual += inside.mass()
                self.diverged += inside.mass()
                logger.debug('Loop fixed point after %d unrollings, diverging mass %s', self.unrolls, inside.mass())
                return output
            live = following
        inside, leaving = self._split(loop.guard, live)
        self.residual += inside.mass()
        self.exhausted = True
        return mix([(1, output), (1, leaving)])


def interp_exact(
        command: Cmd,
        memory: Union[Memory, Mapping[str, Any], SubDist],
        config: Optional[ExactConfig] = None,
        params: Optional[Mapping[str, Any]] = None,
        optable: Optional[OpTable] = None
) -> ExactResult:
    """
    The exact denotational interpretation of a command.

    :param command: The typed command (discrete sampling only).
    :param memory: The initial memory, or an input sub-distribution of memories.
    :param config: Unroll budget and tolerances.
    :param params: Declared parameter values.
    :param optable: The operation table.
    :return: The output sub-distribution with its residual mass.
    """
    if not isinstance(memory, (Memory, SubDist)):
        memory = Memory(memory)
    return ExactInterpreter(params, optable, config).run(command, memory)


def run_program(program: Program, memory: Mapping[str, Any], config: Optional[ExactConfig] = None,
                optable: Optional[OpTable] = None) -> ExactResult:
    """Interprets a program body with its declared parameters."""
    return interp_exact(program.body, memory, config, program.param_values(), program_optable(program, optable))


def exact_pushforward(result: ExactResult, function: Callable[[Memory], Any]) -> SubDist:
    """:return: The image of the output distribution under a function of the final memory."""
    return result.dist.map(function)
