from .base import Mechanism, DomainError, check_probability
from ..measure import SubDist
from ..aputils import to_fraction
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple
import math
import numpy as np


class Bernoulli(Mechanism):
    """A coin returning true with probability p."""

    name = 'bern'
    continuous = False
    arity = 0

    def __init__(self, p: Any):
        self.p: Fraction = check_probability('p', to_fraction(p))

    def params(self) -> Dict[str, Any]:
        return {'p': self.p}

    def density(self, a: Any, b: Any) -> float:
        return float(self.p if b else 1 - self.p)

    def exact_dist(self, *args: Any) -> SubDist:
        return SubDist([(True, self.p), (False, 1 - self.p)])

    def sample_many(self, a: Any, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random(count) < float(self.p)


class UniformInt(Mechanism):
    """The uniform distribution over the integers lo..hi."""

    name = 'unif'
    continuous = False
    arity = 0

    def __init__(self, lo: Any, hi: Any):
        self.lo, self.hi = int(lo), int(hi)
        if self.lo > self.hi:
            raise DomainError(f'The uniform range {self.lo}..{self.hi} is empty.')

    def params(self) -> Dict[str, Any]:
        return {'lo': self.lo, 'hi': self.hi}

    def density(self, a: Any, b: Any) -> float:
        return 1.0 / (self.hi - self.lo + 1) if self.lo <= b <= self.hi else 0.0

    def exact_dist(self, *args: Any) -> SubDist:
        weight = Fraction(1, self.hi - self.lo + 1)
        return SubDist((value, weight) for value in range(self.lo, self.hi + 1))

    def sample_many(self, a: Any, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(self.lo, self.hi + 1, size=count)


class RandomizedResponse(Mechanism):
    """Randomized response on a bit: reports the input with probability p and its negation otherwise."""

    name = 'rr'
    continuous = False

    def __init__(self, p: Any):
        self.p: Fraction = check_probability('p', to_fraction(p))

    def params(self) -> Dict[str, Any]:
        return {'p': self.p}

    def density(self, a: Any, b: Any) -> float:
        return float(self.p if bool(a) == bool(b) else 1 - self.p)

    def exact_dist(self, *args: Any) -> SubDist:
        bit = bool(args[0])
        return SubDist([(bit, self.p), (not bit, 1 - self.p)])

    def sample_many(self, a: Any, count: int, rng: np.random.Generator) -> np.ndarray:
        keep = rng.random(count) < float(self.p)
        bits = np.broadcast_to(np.asarray(a, dtype=bool), (count,))
        return np.where(keep, bits, ~bits)

    def gamma(self) -> Fraction:
        """:return: The exact privacy ratio max(p, 1 - p) / min(p, 1 - p)."""
        low, high = sorted((self.p, 1 - self.p))
        if low == 0:
            raise DomainError(f'Randomized response with p={self.p} has an unbounded privacy ratio.')
        return high / low


class Exponential(Mechanism):
    """The exponential mechanism over a finite candidate set: candidate b is drawn with weight
    base^q(a, b) * w(b), where base = e^ε. Integer scores and a rational base keep every weight exact."""

    name = 'expm'
    continuous = False

    def __init__(
            self,
            candidates: Sequence[Any],
            score: Callable[[Any, Any], Any],
            base: Any,
            base_weights: Optional[Sequence[Any]] = None,
            inputs: Optional[Sequence[Any]] = None
    ):
        """
        :param candidates: The finite set of outputs.
        :param score: The score function q(a, b); a table can be passed as a mapping lookup.
        :param base: The base e^ε of the weights (a rational or float, at least 1).
        :param base_weights: The base measure w over the candidates (uniform if omitted).
        :param inputs: The finite set of inputs the score is defined on, if known (used for sensitivity).
        """
        if not candidates:
            raise DomainError('The exponential mechanism needs at least one candidate.')
        self.candidates: List[Any] = list(candidates)
        self.score: Callable[[Any, Any], Any] = score
        self.base: Any = base if isinstance(base, float) else to_fraction(base)
        if self.base < 1:
            raise DomainError(f'The exponential mechanism base `{self.base}` must be at least 1 (eps >= 0).')
        weights = base_weights if base_weights is not None else [1] * len(self.candidates)
        if len(weights) != len(self.candidates) or any(weight <= 0 for weight in weights):
            raise DomainError('The base weights must be positive, one per candidate.')
        self.base_weights: List[Any] = [to_fraction(weight) for weight in weights]
        self.inputs: Optional[List[Any]] = list(inputs) if inputs is not None else None

    @staticmethod
    def from_table(table: Mapping[Any, Sequence[Any]], candidates: Sequence[Any], base: Any,
                   base_weights: Optional[Sequence[Any]] = None) -> 'Exponential':
        """:return: An exponential mechanism whose scores are given as table[a][index of b]."""
        index = {candidate: position for position, candidate in enumerate(candidates)}
        for a, row in table.items():
            if len(row) != len(candidates):
                raise DomainError(f'The score row for input {a!r} has {len(row)} entries, '
                                  f'expected {len(candidates)}.')
        return Exponential(candidates, lambda a, b: table[a][index[b]], base, base_weights, list(table))

    @property
    def eps(self) -> float:
        return math.log(self.base)

    def params(self) -> Dict[str, Any]:
        return {'base': self.base, 'candidates': len(self.candidates)}

    def _weight(self, a: Any, position: int) -> Any:
        q = self.score(a, self.candidates[position])
        if isinstance(self.base, Fraction) and isinstance(q, int):
            return self.base ** q * self.base_weights[position]
        return float(self.base) ** float(q) * float(self.base_weights[position])

    def density(self, a: Any, b: Any) -> float:
        return float(self._weight(a, self.candidates.index(b)))

    def exact_dist(self, *args: Any) -> SubDist:
        weights = [self._weight(args[0], position) for position in range(len(self.candidates))]
        if not all(isinstance(weight, Fraction) for weight in weights):
            raise DomainError('The exponential mechanism has exact weights only for integer scores '
                              'and a rational base.')
        total = sum(weights, Fraction(0))
        return SubDist((candidate, weight / total) for candidate, weight in zip(self.candidates, weights))

    def sensitivity(self, distance: Callable[[Any, Any], Any] = lambda a, b: abs(a - b)) -> Fraction:
        """:return: The least c with |q(a, b) - q(a', b)| <= c * distance(a, a') over the known inputs."""
        if self.inputs is None:
            raise DomainError('The sensitivity is only computable when the inputs are known.')
        best = Fraction(0)
        for a in self.inputs:
            for a2 in self.inputs:
                gap = distance(a, a2)
                if gap:
                    spread = max(abs(to_fraction(self.score(a, b)) - to_fraction(self.score(a2, b)))
                                 for b in self.candidates)
                    best = max(best, spread / to_fraction(gap))
        return best

    def sample_many(self, a: Any, count: int, rng: np.random.Generator) -> np.ndarray:
        inputs = np.broadcast_to(np.asarray(a), (count,))
        distinct, inverse = np.unique(inputs, return_inverse=True)
        # One cumulative weight row per distinct input:
        rows = np.array([[float(self._weight(value.item(), position)) for position in range(len(self.candidates))]
                         for value in distinct])
        cumulative = np.cumsum(rows, axis=1)
        cumulative /= cumulative[:, -1:]
        uniforms = rng.random(count)
        chosen = (cumulative[inverse] <= uniforms[:, None]).sum(axis=1)
        return np.asarray(self.candidates)[np.minimum(chosen, len(self.candidates) - 1)]


def distance_score(a: Any, b: Any) -> int:
    """The score -|a - b| used by the pWHILE operation expm: prefer candidates close to the input."""
    return -abs(int(a) - int(b))
