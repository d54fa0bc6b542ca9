from .base import ContinuousMechanism, DomainError, check_positive, window_candidates
from scipy import special
from typing import Any, Dict
import math
import numpy as np

LAPLACE_CONSTANTS = ('scaled', 'standard')


class Laplace(ContinuousMechanism):
    """The Laplace mechanism Lap_σ(a) with density proportional to exp(-|b - a| / σ). The 'scaled'
    constant 2/σ does not normalise the density; the 'standard' constant 1/(2σ) does. Every probability
    is computed as a ratio of integrals, so the choice never changes a result."""

    name = 'lap'

    def __init__(self, sigma: Any, constant: str = 'scaled'):
        self.sigma: float = check_positive('sigma', sigma)
        if constant not in LAPLACE_CONSTANTS:
            raise DomainError(f'The Laplace constant `{constant}` must be one of {LAPLACE_CONSTANTS}.')
        self.constant_kind: str = constant
        self.constant = 2 / self.sigma if constant == 'scaled' else 1 / (2 * self.sigma)

    def params(self) -> Dict[str, Any]:
        return {'sigma': self.sigma}

    def scale(self) -> float:
        return self.sigma

    def log_kernel(self, a: float, b: np.ndarray) -> np.ndarray:
        return -np.abs(b - a) / self.sigma

    def kernel_mass(self, a: float, lo: float, hi: float) -> float:
        sigma = self.sigma
        mass = 0.0
        # Left of the centre the kernel is exp((b - a) / σ):
        if lo < a:
            top = min(hi, a)
            mass += sigma * (math.exp((top - a) / sigma) - math.exp((lo - a) / sigma))
        # Right of the centre the kernel is exp(-(b - a) / σ):
        if hi > a:
            bottom = max(lo, a)
            mass += sigma * (math.exp(-(bottom - a) / sigma) - math.exp(-(hi - a) / sigma))
        return mass

    def inverse_cdf(self, a: Any, u: np.ndarray) -> np.ndarray:
        lower = np.log(2 * np.minimum(u, 0.5))
        upper = -np.log(2 * (1 - np.maximum(u, 0.5)))
        return a + self.sigma * np.where(u < 0.5, lower, upper)

    def log_ratio_sup(self, a: float, a2: float, lo: float, hi: float) -> float:
        values = [(abs(b - a2) - abs(b - a)) / self.sigma for b in window_candidates(lo, hi, (a, a2))]
        if lo == -math.inf:
            values.append((a2 - a) / self.sigma)
        if hi == math.inf:
            values.append((a - a2) / self.sigma)
        return max(values)


class Gauss(ContinuousMechanism):
    """The Gaussian mechanism N(a, σ²)."""

    name = 'gauss'

    def __init__(self, sigma: Any):
        self.sigma: float = check_positive('sigma', sigma)
        self.constant = 1 / math.sqrt(2 * math.pi * self.sigma ** 2)

    def params(self) -> Dict[str, Any]:
        return {'sigma': self.sigma}

    def scale(self) -> float:
        return self.sigma

    def log_kernel(self, a: float, b: np.ndarray) -> np.ndarray:
        return -((b - a) ** 2) / (2 * self.sigma ** 2)

    def kernel_mass(self, a: float, lo: float, hi: float) -> float:
        root = self.sigma * math.sqrt(2)
        z_lo, z_hi = (lo - a) / root, (hi - a) / root
        # Upper-tail form when the interval is right of the centre, lower-tail form otherwise:
        if z_lo >= 0:
            fraction = 0.5 * (special.erfc(z_lo) - special.erfc(z_hi))
        elif z_hi <= 0:
            fraction = 0.5 * (special.erfc(-z_hi) - special.erfc(-z_lo))
        else:
            fraction = 1 - 0.5 * special.erfc(-z_lo) - 0.5 * special.erfc(z_hi)
        return float(fraction) * self.sigma * math.sqrt(2 * math.pi)

    def inverse_cdf(self, a: Any, u: np.ndarray) -> np.ndarray:
        return a + self.sigma * special.ndtri(u)

    def log_ratio_sup(self, a: float, a2: float, lo: float, hi: float) -> float:
        if a == a2:
            return 0.0
        # log f(a, b) - log f(a2, b) = (a2 - a)(a2 + a - 2b) / (2σ²) is linear in b:
        slope = -(a2 - a) / self.sigma ** 2
        end = hi if slope > 0 else lo
        if not math.isfinite(end):
            return math.inf
        return (a2 - a) * (a2 + a - 2 * end) / (2 * self.sigma ** 2)


class Cauchy(ContinuousMechanism):
    """The Cauchy mechanism with density ρ / (π((b - a)² + ρ²))."""

    name = 'cauchy'

    def __init__(self, rho: Any):
        self.rho: float = check_positive('rho', rho)
        self.constant = 1 / math.pi

    def params(self) -> Dict[str, Any]:
        return {'rho': self.rho}

    def scale(self) -> float:
        return self.rho

    def log_kernel(self, a: float, b: np.ndarray) -> np.ndarray:
        return math.log(self.rho) - np.log((b - a) ** 2 + self.rho ** 2)

    def kernel_mass(self, a: float, lo: float, hi: float) -> float:
        rho = self.rho
        # atan2(ρ, x) = π/2 - atan(x/ρ) keeps precision in the upper tail; mirror for the lower tail:
        if hi - a <= 0:
            return math.atan2(rho, a - hi) - math.atan2(rho, a - lo)
        return math.atan2(rho, lo - a) - math.atan2(rho, hi - a)

    def inverse_cdf(self, a: Any, u: np.ndarray) -> np.ndarray:
        return a + self.rho * np.tan(math.pi * (u - 0.5))

    def log_ratio_sup(self, a: float, a2: float, lo: float, hi: float) -> float:
        shift = a - a2
        root = math.sqrt(shift ** 2 + 4 * self.rho ** 2)
        # The ratio is stationary where (b - a)(b - a2) = ρ²:
        critical = (a + (-shift + root) / 2, a + (-shift - root) / 2)
        values = [float(self.log_ratio(a, a2, np.array([b]))[0]) for b in window_candidates(lo, hi, critical)]
        if not math.isfinite(lo) or not math.isfinite(hi):
            values.append(0.0)
        return max(values)


def cauchy_gamma(rho: float, r: float) -> float:
    """:return: The worst-case density ratio 1 + (r² + r√(r² + 4ρ²)) / (2ρ²) of Cauchy inputs r apart."""
    return 1 + (r ** 2 + r * math.sqrt(r ** 2 + 4 * rho ** 2)) / (2 * rho ** 2)
