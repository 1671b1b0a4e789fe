import dataclasses
import hashlib
import json
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from sessionlen._logging import debug, warn
from sessionlen.data.sessions import SessionDataset
from sessionlen.exception import FeatureError

NUMERIC_FEATURES = ('absence_time', 'previous_duration', 'avg_user_duration',
                    'log_absence_time', 'log_previous_duration',
                    'log_avg_user_duration')
DERIVED_CATEGORICALS = ('session_time', )
MISSING_LEVEL = 'unknown'

NUMERIC = 'numeric'
CATEGORICAL = 'categorical'


@dataclasses.dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    levels: Tuple[str, ...] = ()


@dataclasses.dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature list; categorical levels come from the training rows."""
    features: Tuple[FeatureSpec, ...]
    train_only_statistics: bool = True

    def __post_init__(self):
        names = [f.name for f in self.features]
        assert len(set(names)) == len(names), f'Duplicate features in {names}'
        for f in self.features:
            assert f.kind in (NUMERIC, CATEGORICAL), f'Bad kind {f.kind}'
            assert f.kind == NUMERIC or f.levels, \
                f'Categorical {f.name} has no levels'

    @property
    def names(self):
        return [f.name for f in self.features]

    def to_dict(self):
        return {
            'features': [[f.name, f.kind, list(f.levels)]
                         for f in self.features],
            'train_only_statistics': self.train_only_statistics,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(features=tuple(
            FeatureSpec(name, kind, tuple(levels))
            for name, kind, levels in d['features']),
                   train_only_statistics=d['train_only_statistics'])

    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha1(text.encode('utf-8')).hexdigest()


@dataclasses.dataclass
class FeatureConfig:
    numeric: Tuple[str, ...] = NUMERIC_FEATURES
    categoricals: Tuple[str, ...] = DERIVED_CATEGORICALS
    optional_categoricals: Tuple[str, ...] = ('gender', 'device', 'network',
                                              'subscription_status')


@dataclasses.dataclass(frozen=True)
class FeatureStats:
    """Statistics of the fitting set that feed the lag and user features."""
    median_absence_time: float
    median_previous_duration: float
    global_avg_duration: float
    user_avg_duration: Dict[str, float]

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclasses.dataclass(frozen=True)
class FeatureTable:
    frame: pd.DataFrame
    schema: FeatureSchema

    @property
    def n_rows(self):
        return len(self.frame)

    @property
    def user_ids(self):
        return self.frame['user_id'].to_numpy()

    def to_csv(self, path):
        self.frame.to_csv(path, index=False, float_format='%.17g')


@dataclasses.dataclass(frozen=True)
class FeatureSet:
    tables: Dict[str, FeatureTable]
    stats: FeatureStats
    schema: FeatureSchema

    def __getitem__(self, name):
        return self.tables[name]


def _lag_features(part, history):
    cols = ['user_id', 'start_time', 'raw_length']
    hist = history.frame[cols].assign(_mine=False, _row=-1)
    mine = part.frame[cols].assign(_mine=True, _row=np.arange(part.n_sessions))
    both = pd.concat([hist, mine], ignore_index=True)
    both = both.sort_values(['user_id', 'start_time', '_mine'], kind='stable')
    grouped = both.groupby('user_id', sort=False)
    prev_start = grouped['start_time'].shift()
    prev_len = grouped['raw_length'].shift()
    both['absence_time'] = (both['start_time'] - (prev_start + prev_len)).clip(
        lower=0.0)
    both['previous_duration'] = prev_len
    both = both[both['_mine']].sort_values('_row')
    return (both['absence_time'].to_numpy(dtype=np.float64),
            both['previous_duration'].to_numpy(dtype=np.float64))


def compute_feature_stats(train):
    """Medians for first-session imputation and per-user mean durations."""
    if train.n_sessions == 0:
        raise FeatureError('Feature statistics need a non-empty training set')
    absence, previous = _lag_features(train, SessionDataset.empty())
    has_prev = ~np.isnan(previous)
    if not has_prev.any():
        warn('No user has two training sessions; imputing lag features with 0')
        median_absence = median_previous = 0.0
    else:
        median_absence = float(np.median(absence[has_prev]))
        median_previous = float(np.median(previous[has_prev]))
    user_avg = train.frame.groupby('user_id')['raw_length'].mean()
    return FeatureStats(median_absence_time=median_absence,
                        median_previous_duration=median_previous,
                        global_avg_duration=float(np.mean(train.raw_lengths)),
                        user_avg_duration={
                            str(k): float(v)
                            for k, v in user_avg.items()
                        })


def session_time_of(start_times):
    hours = np.floor(np.mod(start_times, 86400.0) / 3600.0)
    return np.where(hours < 12, 'morning', 'afternoon').astype(object)


def _categorical_values(part, name):
    if name == 'session_time':
        return session_time_of(part.start_times)
    values = part.frame[name].astype(object)
    return values.where(values.notna(), MISSING_LEVEL).astype(str).to_numpy(
        dtype=object)


def _resolve_categoricals(part, config):
    available = set(part.attribute_columns()) | set(DERIVED_CATEGORICALS)
    for name in config.categoricals:
        if name not in available:
            raise FeatureError(
                f'Feature {name!r} is neither in the source nor derivable')
    resolved = list(config.categoricals)
    for name in config.optional_categoricals:
        if name in available and name not in resolved:
            resolved.append(name)
    return resolved


def build_table(part,
                history,
                stats,
                config=None,
                schema: Optional[FeatureSchema] = None):
    """Compute the covariate row of every session in ``part``.

    Lag features look back through ``history`` (sessions preceding ``part``)
    and ``part`` itself; first sessions are imputed with the medians in
    ``stats``. Passing ``schema`` fixes the feature list and categorical
    levels (used for validation and test tables).
    """
    config = config or FeatureConfig()
    for name in config.numeric:
        if name not in NUMERIC_FEATURES:
            raise FeatureError(f'Unknown numeric feature {name!r}')

    absence, previous = _lag_features(part, history)
    absence = np.where(np.isnan(absence), stats.median_absence_time, absence)
    previous = np.where(np.isnan(previous), stats.median_previous_duration,
                        previous)
    user_avg = pd.Series(part.user_ids).map(stats.user_avg_duration)
    avg = user_avg.fillna(stats.global_avg_duration).to_numpy(dtype=np.float64)
    numeric = {
        'absence_time': absence,
        'previous_duration': previous,
        'avg_user_duration': avg,
        'log_absence_time': np.log1p(absence),
        'log_previous_duration': np.log1p(previous),
        'log_avg_user_duration': np.log1p(avg),
    }

    columns = {
        'user_id': part.user_ids,
        'session_index': part.frame['session_index'].to_numpy(),
    }
    if schema is None:
        specs = [FeatureSpec(name, NUMERIC) for name in config.numeric]
        for name in _resolve_categoricals(part, config):
            values = _categorical_values(part, name)
            levels = tuple(sorted(set(values)))
            if not levels:
                debug('Categorical {} has no levels, skipped', name)
                continue
            specs.append(FeatureSpec(name, CATEGORICAL, levels))
        schema = FeatureSchema(tuple(specs))

    for spec in schema.features:
        if spec.kind == NUMERIC:
            columns[spec.name] = numeric[spec.name]
        elif spec.name in DERIVED_CATEGORICALS or spec.name in part.frame:
            columns[spec.name] = _categorical_values(part, spec.name)
        else:
            raise FeatureError(
                f'Feature {spec.name!r} is neither in the source nor derivable')
    return FeatureTable(pd.DataFrame(columns), schema)


def build_feature_set(fit_set, parts, config=None):
    """Tables for ``fit_set`` and each ``(part, history)`` in ``parts``.

    All statistics come from ``fit_set`` only.
    """
    stats = compute_feature_stats(fit_set)
    train_table = build_table(fit_set, SessionDataset.empty(), stats, config)
    tables = {'train': train_table}
    for name, (part, history) in parts.items():
        tables[name] = build_table(part,
                                   history,
                                   stats,
                                   config,
                                   schema=train_table.schema)
    return FeatureSet(tables, stats, train_table.schema)


def build_features(split, config=None):
    """Feature tables for the three parts of ``split`` with train-only statistics."""
    return build_feature_set(
        split.train, {
            'validation': (split.validation, split.train),
            'test': (split.test, split.train_valid()),
        }, config)


def build_refit_features(split, config=None):
    """Tables for refitting on train + validation and scoring the test part."""
    fit_set = split.train_valid()
    return build_feature_set(fit_set, {'test': (split.test, fit_set)}, config)


__all__ = [
    'FeatureSpec', 'FeatureSchema', 'FeatureConfig', 'FeatureStats',
    'FeatureTable', 'FeatureSet', 'NUMERIC_FEATURES', 'compute_feature_stats',
    'build_table', 'build_feature_set', 'build_features',
    'build_refit_features', 'session_time_of'
]
