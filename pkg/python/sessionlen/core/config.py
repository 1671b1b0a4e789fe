"""Run configuration: a flat ``key = value`` file plus per-stage overrides."""
import dataclasses
import typing
from typing import Optional, Tuple

from sessionlen.exception import ConfigError

FAMILY_TAGS = ('baseline', 'model1', 'ridge', 'model2-l1', 'model2-l2',
               'model2-gbt', 'model3-l2', 'model3-gbt', 'sigir2017')


@dataclasses.dataclass
class RunConfig:
    # ingestion and sessionization
    input: Optional[str] = None
    log_format: str = 'iso'
    malformed_tolerance: float = 0.05
    gap_seconds: float = 1800.0
    min_session_length: float = 1.0
    # split
    sessions: Optional[str] = None
    fractions: Tuple[float, ...] = (0.8, 0.1, 0.1)
    split_dir: Optional[str] = None
    # features
    user_attributes: Optional[str] = None
    categoricals: Tuple[str, ...] = ('session_time', )
    optional_categoricals: Tuple[str, ...] = ('gender', 'device', 'network',
                                              'subscription_status')
    # models
    family: str = 'model3-l2'
    families: Tuple[str, ...] = ('baseline', 'model1', 'ridge', 'model2-l1',
                                 'model2-l2', 'model3-l2')
    lam: Optional[float] = None
    alpha: Optional[float] = None
    delta: Optional[float] = None
    n_lambdas: int = 10
    n_alphas: int = 50
    alpha_ratio: float = 1e-3
    n_deltas: int = 7
    gbt_n_trees: Tuple[int, ...] = (10, 15, 50, 100)
    gbt_depths: Tuple[int, ...] = (6, 10)
    gbt_learning_rates: Tuple[float, ...] = (0.1, 0.05)
    gbt_min_samples_leaf: int = 1
    eps: float = 0.01
    max_iters: int = 100
    lognormal_correction: bool = False
    # artifacts
    model: Optional[str] = None
    part: str = 'test'
    out: str = '.'
    seed: int = 0
    # synthetic data
    sim_kind: str = 'means'
    sim_users: int = 200
    sim_max_sessions: int = 5
    sim_dim: int = 3
    sim_corruption_rate: float = 0.05

    def validate(self):
        if self.family not in FAMILY_TAGS:
            raise ConfigError(
                f'Unknown family {self.family!r}, expected one of {FAMILY_TAGS}'
            )
        for family in self.families:
            if family not in FAMILY_TAGS:
                raise ConfigError(f'Unknown family {family!r} in families')
        if self.gap_seconds <= 0:
            raise ConfigError('gap_seconds must be positive')
        if self.min_session_length < 0:
            raise ConfigError('min_session_length must not be negative')
        if len(self.fractions) != 3:
            raise ConfigError('fractions must have three entries')
        return self

    def require(self, *keys):
        """Raise ``ConfigError`` naming every key in ``keys`` left unset."""
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise ConfigError(f'Missing config keys: {", ".join(missing)}')


def _coerce(hint, text):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union:
        if text.lower() in ('', 'none', 'null'):
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(inner, text)
    if origin in (tuple, Tuple):
        return tuple(
            _coerce(args[0], part.strip()) for part in text.split(',')
            if part.strip())
    if hint is bool:
        lowered = text.lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(f'not a boolean: {text!r}')
    return hint(text)


_hints = typing.get_type_hints(RunConfig)


def config_from_dict(values, base=None):
    """Build a ``RunConfig`` from string (or already typed) values.

    Keys may use dashes or underscores; ``lambda`` is accepted for ``lam``.
    """
    config = dataclasses.replace(base) if base is not None else RunConfig()
    for key, value in values.items():
        name = key.strip().replace('-', '_')
        if name == 'lambda':
            name = 'lam'
        if name not in _hints:
            raise ConfigError(f'Unknown config key {key!r}')
        if isinstance(value, str):
            try:
                value = _coerce(_hints[name], value.strip())
            except (TypeError, ValueError) as e:
                raise ConfigError(
                    f'Bad value for config key {key!r}: {e}') from None
        setattr(config, name, value)
    return config.validate()


def parse_config_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'Line {lineno}: expected "key = value"')
        key, value = line.split('=', 1)
        values[key.strip()] = value.strip()
    return values


def load_config(path, overrides=None):
    """Read a flat key-value config file and apply ``overrides`` on top."""
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f'Cannot read config file {path}: {e}') from None
    config = config_from_dict(parse_config_text(text))
    if overrides:
        config = config_from_dict(overrides, base=config)
    return config


__all__ = [
    'RunConfig', 'FAMILY_TAGS', 'config_from_dict', 'parse_config_text',
    'load_config'
]
