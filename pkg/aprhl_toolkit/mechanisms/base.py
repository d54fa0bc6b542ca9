from ..measure import SubDist
from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple
import math
import numpy as np


class MechanismError(Exception):
    """The base class of errors raised by the mechanisms module."""
    pass


class DomainError(MechanismError):
    """An exception raised when a mechanism parameter lies outside its domain, e.g., a non-positive
    scale or a probability outside [0, 1]."""
    pass


class ContinuousInExactMode(MechanismError):
    """An exception raised when the exact interpreter meets a continuous sampling operation."""
    pass


class Mechanism(ABC):
    """A parameterised family of distributions d(a) indexed by the input a. Continuous mechanisms
    describe a density f(a, b) with respect to the Lebesgue measure; discrete ones a mass function
    with respect to the counting measure over a finite set."""

    name: str = 'mechanism'
    continuous: bool = True
    arity: int = 1

    @abstractmethod
    def params(self) -> Dict[str, Any]:
        """:return: The static parameters of the mechanism."""
        pass

    @abstractmethod
    def density(self, a: Any, b: Any) -> float:
        """:return: The (possibly unnormalised) density f(a, b)."""
        pass

    @abstractmethod
    def sample_many(self, a: Any, count: int, rng: np.random.Generator) -> np.ndarray:
        """
        Draws independent samples of d(a).

        :param a: The input, either a scalar or an array of length `count`.
        :param count: The number of samples.
        :param rng: The random generator.
        :return: An array of `count` samples.
        """
        pass

    def sample(self, a: Any, rng: np.random.Generator) -> Any:
        """:return: A single sample of d(a)."""
        return self.sample_many(a, 1, rng)[0]

    def exact_dist(self, *args: Any) -> SubDist:
        """:return: The exact output distribution for discrete mechanisms."""
        raise ContinuousInExactMode(f'The mechanism {self} is continuous and has no exact finite-support form.')

    def __repr__(self) -> str:
        rendered = ', '.join(f'{key}={value}' for key, value in self.params().items())
        return f'{self.name}({rendered})'


class ContinuousMechanism(Mechanism):
    """A real-valued mechanism with closed-form interval masses."""

    constant: float = 1.0

    @abstractmethod
    def log_kernel(self, a: float, b: np.ndarray) -> np.ndarray:
        """:return: log f(a, b) without the normalising constant, vectorised over b."""
        pass

    @abstractmethod
    def kernel_mass(self, a: float, lo: float, hi: float) -> float:
        """:return: The integral of the kernel exp(log_kernel) over [lo, hi] (ends may be infinite)."""
        pass

    @abstractmethod
    def inverse_cdf(self, a: Any, u: np.ndarray) -> np.ndarray:
        """:return: The quantile function of d(a) at u in (0, 1)."""
        pass

    @abstractmethod
    def log_ratio_sup(self, a: float, a2: float, lo: float, hi: float) -> float:
        """:return: The supremum of log f(a, b) - log f(a2, b) over b in [lo, hi], in closed form."""
        pass

    @abstractmethod
    def scale(self) -> float:
        """:return: The scale parameter used to clip unbounded windows."""
        pass

    def density(self, a: Any, b: Any) -> float:
        return float(self.constant * np.exp(self.log_kernel(float(a), np.asarray(b, dtype=float))))

    def log_ratio(self, a: float, a2: float, b: np.ndarray) -> np.ndarray:
        """:return: log f(a, b) - log f(a2, b), vectorised over b."""
        return self.log_kernel(a, b) - self.log_kernel(a2, b)

    def integral(self, a: Any, lo: float, hi: float) -> float:
        """:return: The unnormalised integral of f(a, -) over [lo, hi]."""
        return self.constant * self.kernel_mass(float(a), lo, hi)

    def normalizer(self, a: Any) -> float:
        """:return: N(a), the integral of f(a, -) over the real line."""
        return self.integral(a, -math.inf, math.inf)

    def normalized_prob(self, a: Any, lo: float, hi: float) -> float:
        """
        The probability that d(a) lands in [lo, hi]: the integral of the density over the interval divided
        by the normaliser, so that any constant factor of the density cancels.

        :param a: The input.
        :param lo: The lower end (may be -inf).
        :param hi: The upper end (may be inf).
        :return: The probability.
        """
        if hi < lo:
            return 0.0
        return self.integral(a, lo, hi) / self.normalizer(a)

    def cdf(self, a: Any, x: Any) -> Any:
        """:return: P(d(a) <= x), vectorised over x."""
        values = np.atleast_1d(np.asarray(x, dtype=float))
        result = np.array([self.normalized_prob(a, -math.inf, value) for value in values])
        return result if np.ndim(x) else float(result[0])

    def outside_mass(self, a: Any, lo: float, hi: float) -> float:
        """:return: The probability that d(a) lands outside [lo, hi], computed from both tails."""
        lower = self.normalized_prob(a, -math.inf, lo) if lo > -math.inf else 0.0
        upper = self.normalized_prob(a, hi, math.inf) if hi < math.inf else 0.0
        return lower + upper

    def sample_many(self, a: Any, count: int, rng: np.random.Generator) -> np.ndarray:
        uniforms = rng.random(count)
        # Avoid the closed end of [0, 1):
        uniforms = np.where(uniforms == 0.0, np.nextafter(0.0, 1.0), uniforms)
        return self.inverse_cdf(np.asarray(a, dtype=float), uniforms)


def check_positive(name: str, value: Any) -> float:
    """Verifies a scale parameter and returns it as a float."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError(f'The parameter {name}={value!r} is not a number.')
    if not value > 0 or not math.isfinite(value):
        raise DomainError(f'The parameter {name}={value} must be positive and finite.')
    return value


def check_probability(name: str, value: Any) -> Any:
    if not 0 <= value <= 1:
        raise DomainError(f'The parameter {name}={value} must lie in [0, 1].')
    return value


def window_candidates(lo: float, hi: float, points: Tuple[float, ...]) -> Tuple[float, ...]:
    """:return: The finite window ends together with the given breakpoints that lie inside the window."""
    inside = tuple(point for point in points if lo <= point <= hi)
    ends = tuple(end for end in (lo, hi) if math.isfinite(end))
    return ends + inside
