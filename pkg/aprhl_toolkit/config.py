from dataclasses import dataclass, field, fields, replace, asdict
from fractions import Fraction
from typing import Any, Dict, Optional
import os
import yaml

SEED_ENVIRONMENT_VARIABLE: str = 'APRHL_SEED'
DEFAULT_SEED: int = 20240229


class ConfigError(Exception):
    """An exception raised when a configuration file or override is malformed or names an unknown
    setting."""
    pass


@dataclass(frozen=True)
class ExactConfig:
    max_unroll: int = 10_000
    """The maximum number of loop unrollings performed by the exact interpreter."""

    mass_tol: Fraction = Fraction(1, 10 ** 12)
    """Loops stop unrolling once the mass still inside the loop drops below this tolerance."""

    prune_eps: Fraction = Fraction(1, 10 ** 15)
    """Support points lighter than this are pruned; their mass is added to the residual."""

    require_certainty: bool = False
    """If True, a residual above mass_tol raises UnrollBudgetExceeded instead of being reported."""


@dataclass(frozen=True)
class LiftingConfig:
    brute_force_bound: int = 16
    """The largest support for which events are enumerated subset by subset."""


@dataclass(frozen=True)
class EntailmentConfig:
    exhaustive_limit: int = 100_000
    """The largest joint memory space that is evaluated exhaustively."""

    random_samples: int = 10_000
    """The number of memory pairs drawn when an implication is tested randomly."""

    int_box: int = 6
    """Random integers are drawn from [-int_box, int_box]."""

    real_box: int = 4
    """Random reals are drawn from [-real_box, real_box] (as rationals with denominator 8)."""

    fm_limit: int = 4_000
    """The largest constraint set the arithmetic decision procedure will build before giving up."""


@dataclass(frozen=True)
class GridConfig:
    points: int = 100_000
    """The number of grid points used by window sweeps."""

    clip: float = 40.0
    """Unbounded windows are clipped to this many scale units around the inputs."""

    refine: bool = True
    """Whether the best grid point is refined with a bounded scalar optimiser."""


@dataclass(frozen=True)
class AuditConfig:
    alpha: float = 0.001
    """The family-wise significance level of an audit."""

    bins: int = 40
    """The default number of equal-probability bins for real-valued outputs."""

    block_size: int = 65_536
    """The number of trials sharing one random stream in the sampling interpreter."""


@dataclass(frozen=True)
class RunConfig:
    seed: int = DEFAULT_SEED
    policy: str = 'standard'
    exact: ExactConfig = field(default_factory=ExactConfig)
    lifting: LiftingConfig = field(default_factory=LiftingConfig)
    entailment: EntailmentConfig = field(default_factory=EntailmentConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    audit: AuditConfig = field(default_factory=AuditConfig)

    def to_record(self) -> Dict[str, Any]:
        """:return: The effective configuration as a JSON-friendly dictionary."""
        def convert(value: Any) -> Any:
            if isinstance(value, dict):
                return {key: convert(item) for key, item in value.items()}
            if isinstance(value, Fraction):
                return str(value)
            return value
        return convert(asdict(self))


def _coerce(current: Any, value: Any, name: str) -> Any:
    try:
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise ValueError
            return value
        if isinstance(current, Fraction):
            return Fraction(str(value))
        if isinstance(current, int):
            return int(value)
        if isinstance(current, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f'The setting `{name}` cannot take the value `{value!r}`.')


def _override(config: Any, values: Dict[str, Any], prefix: str = '') -> Any:
    known = {item.name: item for item in fields(config)}
    changes: Dict[str, Any] = {}
    for key, value in values.items():
        name = f'{prefix}{key}'
        if key not in known:
            raise ConfigError(f'Unknown setting `{name}`; expected one of {sorted(known)}.')
        current = getattr(config, key)
        if hasattr(current, '__dataclass_fields__'):
            if not isinstance(value, dict):
                raise ConfigError(f'The setting `{name}` must be a mapping.')
            changes[key] = _override(current, value, f'{name}.')
        else:
            changes[key] = _coerce(current, value, name)
    return replace(config, **changes)


def default_seed() -> int:
    """:return: The seed from the APRHL_SEED environment variable, or the built-in default."""
    raw: Optional[str] = os.environ.get(SEED_ENVIRONMENT_VARIABLE)
    if raw is None or not raw.strip():
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f'The environment variable {SEED_ENVIRONMENT_VARIABLE}={raw!r} is not an integer.')


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Builds the effective configuration: built-in defaults (with the environment seed), then the YAML
    file, then explicit overrides.

    :param path: An optional YAML file of (nested) settings.
    :param overrides: Settings given on the command line, e.g. {'seed': 3, 'policy': 'strict'}.
    :return: The effective RunConfig.
    """
    config = RunConfig(seed=default_seed())
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f'The configuration file {path} does not exist.')
        with open(path, 'r', encoding='utf-8') as config_file:
            data = yaml.safe_load(config_file) or {}
        if not isinstance(data, dict):
            raise ConfigError(f'The configuration file {path} must contain a mapping.')
        config = _override(config, data)
    if overrides:
        config = _override(config, {key: value for key, value in overrides.items() if value is not None})
    if config.policy not in ('strict', 'standard', 'permissive'):
        raise ConfigError(f'The policy `{config.policy}` must be strict, standard or permissive.')
    return config
