"""Versioned single-file JSON persistence of trained models."""
import json

import numpy as np
import pandas as pd
from sessionlen._logging import info
from sessionlen.bcd.algorithm import BcdConfig, FittedModel
from sessionlen.bcd.oracle import FittedOracle, OracleSpec
from sessionlen.exception import ModelFileError
from sessionlen.features.standardize import Standardizer
from sessionlen.features.table import FeatureConfig, FeatureStats
from sessionlen.shrink.model1 import VarianceComponents
from sessionlen.tuning.families import GridPoint, TrainedModel
from sessionlen.tuning.metrics import BaselineModel

FORMAT_NAME = 'sessionlen-model'
FORMAT_VERSION = 1


def _optional(obj, fn):
    return None if obj is None else fn(obj)


def _fitted_to_dict(fm: FittedModel):
    return {
        'oracle_spec': fm.oracle_spec.to_dict(),
        'oracle': fm.oracle.to_dict(),
        'user_effects': {str(k): float(v)
                         for k, v in fm.user_effects.items()},
        'corruption': fm.corruption.tolist(),
        'config': fm.config.to_dict(),
        'objective_trace': list(fm.objective_trace),
        'global_mean': fm.global_mean,
        'n_iter': fm.n_iter,
        'converged': bool(fm.converged),
    }


def _fitted_from_dict(d, standardizer):
    spec = OracleSpec.from_dict(d['oracle_spec'])
    effects = d['user_effects']
    return FittedModel(oracle_spec=spec,
                       oracle=FittedOracle.from_dict(spec, d['oracle']),
                       user_effects=pd.Series(list(effects.values()),
                                              index=list(effects.keys()),
                                              dtype=np.float64),
                       corruption=np.asarray(d['corruption'],
                                             dtype=np.float64),
                       config=BcdConfig.from_dict(d['config']),
                       objective_trace=tuple(d['objective_trace']),
                       global_mean=float(d['global_mean']),
                       standardizer=standardizer,
                       n_iter=int(d['n_iter']),
                       converged=bool(d['converged']))


def model_to_dict(model: TrainedModel):
    fc = model.feature_config
    return {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'family': model.family,
        'point': _optional(model.point, GridPoint.to_dict),
        'lognormal_correction': model.lognormal_correction,
        'feature_config': {
            'numeric': list(fc.numeric),
            'categoricals': list(fc.categoricals),
            'optional_categoricals': list(fc.optional_categoricals),
        },
        'feature_stats': _optional(model.feature_stats, FeatureStats.to_dict),
        'standardizer': _optional(model.standardizer, Standardizer.to_dict),
        'variance_components': _optional(model.variance_components,
                                         VarianceComponents.to_dict),
        'baseline': _optional(model.baseline, BaselineModel.to_dict),
        'fitted': _optional(model.fitted, _fitted_to_dict),
        'diagnostics': model.diagnostics,
    }


def model_from_dict(d):
    if not isinstance(d, dict) or d.get('format') != FORMAT_NAME:
        raise ModelFileError('corrupt file: not a sessionlen model')
    if d.get('version') != FORMAT_VERSION:
        raise ModelFileError(
            f'version mismatch: file has version {d.get("version")!r}, '
            f'this build reads version {FORMAT_VERSION}')
    try:
        standardizer = _optional(d['standardizer'], Standardizer.from_dict)
        fc = d['feature_config']
        return TrainedModel(
            family=d['family'],
            point=_optional(d['point'], GridPoint.from_dict),
            fitted=_optional(d['fitted'],
                             lambda f: _fitted_from_dict(f, standardizer)),
            baseline=_optional(d['baseline'], BaselineModel.from_dict),
            variance_components=_optional(d['variance_components'],
                                          VarianceComponents.from_dict),
            feature_stats=_optional(d['feature_stats'],
                                    FeatureStats.from_dict),
            standardizer=standardizer,
            feature_config=FeatureConfig(
                numeric=tuple(fc['numeric']),
                categoricals=tuple(fc['categoricals']),
                optional_categoricals=tuple(fc['optional_categoricals'])),
            lognormal_correction=bool(d['lognormal_correction']),
            diagnostics=dict(d.get('diagnostics') or {}))
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f'corrupt file: {type(e).__name__}: {e}') from None


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f'{type(obj).__name__} is not JSON serializable')


def save_model(model, path):
    """Write ``model`` to ``path`` as one JSON document."""
    try:
        text = json.dumps(model_to_dict(model),
                          default=_json_default,
                          allow_nan=False)
    except (TypeError, ValueError) as e:
        raise ModelFileError(f'Cannot serialize model: {e}') from None
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
    except OSError as e:
        raise ModelFileError(f'Cannot write model file {path}: {e}') from None
    info('Saved {} model to {}', model.family, path)


def load_model(path):
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ModelFileError(f'Cannot read model file {path}: {e}') from None
    try:
        d = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFileError(f'corrupt file {path}: {e}') from None
    return model_from_dict(d)


__all__ = [
    'FORMAT_NAME', 'FORMAT_VERSION', 'model_to_dict', 'model_from_dict',
    'save_model', 'load_model'
]
