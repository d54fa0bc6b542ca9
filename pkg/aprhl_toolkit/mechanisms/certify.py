from .base import Mechanism, ContinuousMechanism, MechanismError, DomainError
from .continuous import Laplace, Gauss, Cauchy, cauchy_gamma
from .discrete import Exponential
from ..aputils import to_fraction, is_exact, format_scalar
from ..config import GridConfig
from ..grade import Grade
from dataclasses import dataclass, field
from fractions import Fraction
from scipy import optimize
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math
import numpy as np

logger = logging.getLogger(__name__)

# Budget for the floating-point error of erfc/arctan tail masses, charged against δ:
TAIL_ERROR_BUDGET: float = 1e-12
LOG_RATIO_TOLERANCE: float = 1e-12


class Refusal(MechanismError):
    """An exception raised when a window condition fails; `condition` is 'i', 'ii' or 'iii' and
    `witness` is the violating point (for the ratio condition) or mass (for the others)."""

    def __init__(self, condition: str, witness: Any, message: str):
        self.condition: str = condition
        self.witness: Any = witness
        super().__init__(f'condition ({condition}) fails: {message}')


class SideConditionViolated(MechanismError):
    """An exception raised when the parameters of a named mechanism rule violate one of its side
    conditions; `failed` lists the violated inequalities."""

    def __init__(self, failed: List[str]):
        self.failed: List[str] = failed
        super().__init__('side conditions violated: ' + '; '.join(failed))


@dataclass(frozen=True)
class Window:
    lo: float
    """The lower end of the window (may be -inf)."""

    hi: float
    """The upper end of the window (may be inf)."""

    formula: str = ''
    """How the ends were computed, e.g. '(a + a2)/2 +- sigma^2 log(gamma)/r'."""

    @staticmethod
    def line() -> 'Window':
        return Window(-math.inf, math.inf, 'R')

    @property
    def shape(self) -> str:
        finite = (math.isfinite(self.lo), math.isfinite(self.hi))
        return {(False, False): 'whole line', (True, True): 'interval'}.get(finite, 'half-line')

    def to_record(self) -> Dict[str, Any]:
        return {'shape': self.shape, 'lo': self.lo, 'hi': self.hi, 'formula': self.formula}


@dataclass
class WindowCheck:
    a: float
    a2: float
    window: Window
    analytic_log_ratio: Optional[float]
    """The closed-form supremum of the log density ratio over the window."""

    grid_log_ratio: float
    """The largest log density ratio found by the (refined) grid sweep."""

    tail_mass: float
    """The mass of d(a) outside the window."""

    @property
    def ratio_residual(self) -> float:
        """:return: exp(analytic) - exp(grid), the gap the grid leaves below the closed-form bound."""
        if self.analytic_log_ratio is None or not math.isfinite(self.analytic_log_ratio):
            return 0.0
        return math.exp(self.analytic_log_ratio) - math.exp(self.grid_log_ratio)

    def to_record(self) -> Dict[str, Any]:
        return {'a': self.a, 'a2': self.a2, 'window': self.window.to_record(),
                'analytic_log_ratio': self.analytic_log_ratio, 'grid_log_ratio': self.grid_log_ratio,
                'ratio_residual': self.ratio_residual, 'tail_mass': self.tail_mass}


@dataclass
class Certificate:
    mechanism: str
    """The mechanism and its parameters, e.g. 'lap(sigma=1.0)'."""

    radius: Any
    """The adjacency bound r on the inputs: |a - a2| <= r."""

    grade: Grade
    """The certified grade."""

    window: Window
    """The window the ratio condition holds on (the whole line for pure mechanisms)."""

    status: str
    """'Analytic' (closed form, cross-checked) or 'GridVerified' (decided by a grid sweep)."""

    grid: Dict[str, Any] = field(default_factory=dict)
    """The grid specification used by the sweeps."""

    checks: List[WindowCheck] = field(default_factory=list)
    """The window checks performed on sample input pairs."""

    notes: List[str] = field(default_factory=list)
    """Remarks, such as which variant of a side condition was applied."""

    @property
    def max_residual(self) -> float:
        return max((check.ratio_residual for check in self.checks), default=0.0)

    def to_record(self) -> Dict[str, Any]:
        return {
            'mechanism': self.mechanism,
            'radius': format_scalar(self.radius),
            'grade': self.grade.to_record(),
            'window': self.window.to_record(),
            'status': self.status,
            'grid': self.grid,
            'max_residual': self.max_residual,
            'checks': [check.to_record() for check in self.checks],
            'notes': list(self.notes),
        }


def _grid_sup(mech: ContinuousMechanism, a: float, a2: float, window: Window,
              grid: GridConfig) -> Tuple[float, float]:
    """:return: The largest log ratio on the clipped grid (refined around the best point) and its location."""
    reach = grid.clip * mech.scale()
    lo = max(window.lo, min(a, a2) - reach)
    hi = min(window.hi, max(a, a2) + reach)
    if lo > hi:
        return -math.inf, lo
    points = np.linspace(lo, hi, grid.points)
    ratios = mech.log_ratio(a, a2, points)
    best = int(np.argmax(ratios))
    best_value, best_point = float(ratios[best]), float(points[best])

    # Refine the best grid cell with a bounded scalar search:
    if grid.refine and 0 < best < len(points) - 1:
        result = optimize.minimize_scalar(
            lambda b: -float(mech.log_ratio(a, a2, np.array([b]))[0]),
            bounds=(float(points[best - 1]), float(points[best + 1])),
            method='bounded',
            options={'xatol': 1e-10}
        )
        if -result.fun > best_value:
            best_value, best_point = float(-result.fun), float(result.x)
    return best_value, best_point


def certify_window(
        mech: ContinuousMechanism,
        a: Any,
        a2: Any,
        gamma: Any,
        gamma2: Any,
        delta: Any,
        window: Window,
        grid: Optional[GridConfig] = None
) -> Certificate:
    """
    Certifies that (d(a), d(a2)) are related at grade (γγ', δ) by checking the three window conditions:
    (i) 0 < N(a2)/γ' <= N(a) < inf, (ii) f(a, b) <= γ f(a2, b) on the window, (iii) the mass of d(a)
    outside the window is at most δ.

    :param mech: The continuous mechanism.
    :param a: The first input.
    :param a2: The second input.
    :param gamma: The density-ratio bound γ >= 1.
    :param gamma2: The normaliser-ratio bound γ' >= 1.
    :param delta: The slack δ >= 0.
    :param window: The window Z.
    :param grid: The grid configuration.
    :return: The certificate.
    """
    grid = grid or GridConfig()
    a, a2 = float(a), float(a2)
    log_gamma, log_gamma2 = math.log(float(gamma)), math.log(float(gamma2))
    delta_value = float(delta)

    # Verify Parameters
    if log_gamma < 0 or log_gamma2 < 0 or delta_value < 0:
        raise ValueError(f'The grade ({gamma}, {gamma2}, {delta}) must have gamma, gamma2 >= 1 and delta >= 0.')
    if not isinstance(mech, ContinuousMechanism):
        raise DomainError(f'Window certification needs a continuous mechanism, not {mech}.')

    # Condition (i):
    norm, norm2 = mech.normalizer(a), mech.normalizer(a2)
    if not (0 < norm2 / float(gamma2) <= norm * (1 + LOG_RATIO_TOLERANCE) and math.isfinite(norm)):
        raise Refusal('i', (norm, norm2), f'normalisers N(a)={norm}, N(a2)={norm2} with gamma2={gamma2}.')

    # Condition (ii), closed form first, then the grid sweep:
    analytic = mech.log_ratio_sup(a, a2, window.lo, window.hi)
    grid_value, grid_point = _grid_sup(mech, a, a2, window, grid)
    bound = analytic if analytic is not None else grid_value
    if bound > log_gamma + LOG_RATIO_TOLERANCE:
        witness = grid_point if grid_value > log_gamma + LOG_RATIO_TOLERANCE else \
            (window.lo if math.isfinite(window.lo) else grid_point)
        raise Refusal('ii', witness, f'the density ratio reaches exp({bound:.12g}) > gamma = exp({log_gamma:.12g}) '
                                     f'near b = {witness:.6g}.')

    # Condition (iii):
    tail = mech.outside_mass(a, window.lo, window.hi)
    budget = 0.0 if window.shape == 'whole line' else TAIL_ERROR_BUDGET
    if tail + budget > delta_value:
        raise Refusal('iii', tail, f'the mass outside the window is {tail:.6g} (+{budget:g} error budget) > '
                                   f'delta = {delta_value:g}.')

    check = WindowCheck(a, a2, window, analytic, grid_value, tail)
    logger.debug('Window check %s a=%s a2=%s: analytic=%s grid=%s tail=%s', mech, a, a2, analytic, grid_value, tail)
    return Certificate(
        mechanism=repr(mech),
        radius=abs(a - a2),
        grade=Grade(log_gamma + log_gamma2, delta),
        window=window,
        status='GridVerified',
        grid={'points': grid.points, 'clip': grid.clip, 'refine': grid.refine},
        checks=[check],
    )


def _sample_pairs(r: float, count: int, seed: int = 0) -> List[Tuple[float, float]]:
    """:return: Deterministic input pairs with |a - a2| <= r, always including the extreme offsets."""
    rng = np.random.default_rng(seed)
    pairs = [(0.0, float(r)), (0.0, -float(r))]
    while len(pairs) < count:
        a = float(rng.uniform(-10, 10))
        pairs.append((a, a + float(rng.uniform(-1, 1)) * float(r)))
    return pairs


def gauss_windows(sigma: float, eps: float, r: float, a: float, a2: float, variant: str) -> Window:
    """:return: The window on which the Gaussian density ratio of inputs a, a2 stays below exp(eps)."""
    centre = (a + a2) / 2
    width = sigma ** 2 * eps / r
    if variant == 'standard':
        return Window(centre - width, centre + width, '(a + a2)/2 +- sigma^2 log(gamma) / r')
    if a <= a2:
        return Window(centre - width, math.inf, '[(a + a2)/2 - sigma^2 log(gamma) / r, inf)')
    return Window(-math.inf, centre + width, '(-inf, (a + a2)/2 + sigma^2 log(gamma) / r]')


def gauss_side_conditions(sigma: float, eps: float, delta: float, r: float, variant: str) -> List[str]:
    """
    Lists the violated side conditions of the Gaussian rule: 0 < eps < 1 and a constant c with
    c > c0, 2 log(k/δ) < c² and c r / eps <= σ, where (c0, k) = (3/2, 1.25) for the standard variant and
    ((1 + √3)/2, 0.66) for the relaxed one.

    :return: The failed inequalities (empty when the parameters are admissible).
    """
    failed: List[str] = []
    if variant not in ('standard', 'relaxed'):
        raise ValueError(f'The Gaussian variant `{variant}` must be standard or relaxed.')
    if not 0 < eps < 1:
        failed.append(f'1 < gamma < e (log gamma = {eps:g})')
    if not 0 < delta < 1:
        failed.append(f'0 < delta < 1 (delta = {delta:g})')
        return failed
    c_floor, k = (1.5, 1.25) if variant == 'standard' else ((1 + math.sqrt(3)) / 2, 0.66)
    c_tail = math.sqrt(max(2 * math.log(k / delta), 0.0))
    c_max = sigma * eps / r if r > 0 else math.inf
    if not c_max > c_floor:
        failed.append(f'c > {c_floor:.6g} with c r / log(gamma) <= sigma (largest c = {c_max:.6g})')
    if not c_max > c_tail:
        failed.append(f'2 log({k}/delta) < c^2 with c r / log(gamma) <= sigma '
                      f'(needs c > {c_tail:.6g}, i.e. sigma > {c_tail * r / eps if eps > 0 else math.inf:.6g})')
    return failed


def _exact_number(value: Any) -> Any:
    return to_fraction(value) if is_exact(value) else float(value)


def certify_named(kind: str, params: Dict[str, Any], r: Any, grid: Optional[GridConfig] = None,
                  samples: int = 6) -> Certificate:
    """
    Builds the closed-form certificate of a named mechanism and cross-checks it with window sweeps.

    :param kind: 'lap', 'gauss', 'cauchy' or 'exp'.
    :param params: The mechanism parameters: sigma (lap, gauss), rho (cauchy); for gauss also eps and
    delta (and optionally variant); for exp either eps or base, and c, or a `mechanism` table whose
    sensitivity is computed.
    :param r: The adjacency radius.
    :param grid: The grid configuration of the cross-checks.
    :param samples: The number of input pairs cross-checked.
    :return: The certificate.
    """
    grid = grid or GridConfig()
    if float(r) < 0:
        raise ValueError(f'The radius r = {r} must be nonnegative.')

    if kind == 'lap':
        sigma = params['sigma']
        mech = Laplace(sigma)
        grade = Grade(_exact_number(r) / _exact_number(sigma), 0) if is_exact(r) and is_exact(sigma) \
            else Grade(float(r) / float(sigma), 0)
        windows = lambda a, a2: Window.line()
        notes = ['grade (exp(r/sigma), 0)']
    elif kind == 'cauchy':
        rho = params['rho']
        mech = Cauchy(rho)
        grade = Grade(math.log(cauchy_gamma(float(rho), float(r))), 0)
        windows = lambda a, a2: Window.line()
        notes = ['gamma = 1 + (r^2 + r sqrt(r^2 + 4 rho^2)) / (2 rho^2)']
    elif kind == 'gauss':
        sigma, eps, delta = params['sigma'], params['eps'], params['delta']
        variant = params.get('variant', 'standard')
        failed = gauss_side_conditions(float(sigma), float(eps), float(delta), float(r), variant)
        if failed:
            raise SideConditionViolated(failed)
        mech = Gauss(sigma)
        grade = Grade(_exact_number(eps), _exact_number(delta))
        windows = lambda a, a2: gauss_windows(float(sigma), float(eps), float(r), a, a2, variant)
        notes = [f'{variant} variant; side condition read as c r / log(gamma) <= sigma']
    elif kind == 'exp':
        return _certify_exponential(params, r)
    else:
        raise ValueError(f'Unknown mechanism kind `{kind}`; expected lap, gauss, cauchy or exp.')

    # Cross-check the closed form on sample input pairs:
    checks: List[WindowCheck] = []
    for a, a2 in _sample_pairs(float(r), samples):
        certificate = certify_window(mech, a, a2, math.exp(float(grade.log_gamma)), 1, grade.delta,
                                     windows(a, a2), grid)
        checks.extend(certificate.checks)
    logger.info('Certified %s at r=%s: %s', mech, r, grade)
    return Certificate(
        mechanism=repr(mech),
        radius=r,
        grade=grade,
        window=windows(0.0, float(r)),
        status='Analytic',
        grid={'points': grid.points, 'clip': grid.clip, 'refine': grid.refine},
        checks=checks,
        notes=notes,
    )


def _certify_exponential(params: Dict[str, Any], r: Any) -> Certificate:
    from ..lifting import lifting_member, Eq
    mech: Optional[Exponential] = params.get('mechanism')
    c = params.get('c')
    if c is None:
        if mech is None:
            raise ValueError('The exponential certificate needs the sensitivity c or a mechanism table.')
        c = mech.sensitivity()
    if 'base' in params or mech is not None:
        base = params.get('base', mech.base if mech is not None else None)
        exponent = 2 * to_fraction(r) * to_fraction(c)
        if isinstance(base, Fraction) and exponent.denominator == 1:
            grade = Grade.from_gamma(base ** int(exponent))
        else:
            grade = Grade(2 * float(r) * float(c) * math.log(float(base)), 0)
    else:
        eps = params['eps']
        grade = Grade(2 * _exact_number(eps) * _exact_number(r) * _exact_number(c), 0)

    notes = ['grade (exp(2 eps r c), 0)']
    status = 'Analytic'
    # With a table and known inputs the output distributions are finite: check every pair exactly.
    if mech is not None and mech.inputs is not None:
        for a in mech.inputs:
            for a2 in mech.inputs:
                if abs(a - a2) <= r:
                    member, _ = lifting_member(mech.exact_dist(a), mech.exact_dist(a2), Eq(), grade, symmetric=True)
                    if not member:
                        raise Refusal('ii', (a, a2), f'the exact output distributions for inputs {a} and {a2} '
                                                     f'are not related at {grade}.')
        notes.append(f'exact lifting verified on {len(mech.inputs) ** 2} input pairs')
    return Certificate(
        mechanism=repr(mech) if mech is not None else f'expm(c={c})',
        radius=r,
        grade=grade,
        window=Window(-math.inf, math.inf, 'finite candidate set'),
        status=status,
        notes=notes,
    )


def certify_table(mech: Mechanism, grade: Grade, pairs: Sequence[Tuple[Any, Any]]) -> Certificate:
    """
    Certifies a discrete mechanism by checking the exact symmetric Eq-lifting of its output
    distributions for every listed input pair.

    :param mech: A discrete mechanism.
    :param grade: The grade to certify.
    :param pairs: The input pairs (a, a2) to check.
    :return: The certificate.
    """
    from ..lifting import lifting_member, Eq
    for a, a2 in pairs:
        args, args2 = ((a,), (a2,)) if mech.arity else ((), ())
        member, certificate = lifting_member(mech.exact_dist(*args), mech.exact_dist(*args2), Eq(), grade,
                                             symmetric=True)
        if not member:
            raise Refusal('ii', (a, a2), f'the output distributions for inputs {a!r} and {a2!r} are not related '
                                         f'at {grade}: event {certificate.event}.')
    return Certificate(
        mechanism=repr(mech),
        radius=None,
        grade=grade,
        window=Window(-math.inf, math.inf, 'finite support'),
        status='Analytic',
        notes=[f'exact lifting verified on {len(pairs)} input pairs'],
    )
