import dataclasses
import math
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from sessionlen.bcd.algorithm import FittedModel, predict_log
from sessionlen.bcd.oracle import LinearOracle
from sessionlen.exception import SessionLenError, UnsupportedModelError
from sessionlen.linalg.gram import LinearCoefficients

GROUPS = ('<q10', '<q20', '>q20')


@dataclasses.dataclass(frozen=True)
class BaselineModel:
    """Per-user mean of raw training lengths, in seconds."""
    user_means: pd.Series
    global_mean: float

    def predict(self, user_ids):
        means = pd.Series(np.asarray(user_ids)).map(self.user_means)
        return means.fillna(self.global_mean).to_numpy(dtype=np.float64)

    def to_dict(self):
        return {
            'user_means': {str(k): float(v)
                           for k, v in self.user_means.items()},
            'global_mean': self.global_mean,
        }

    @staticmethod
    def from_dict(d):
        return BaselineModel(user_means=pd.Series(d['user_means'],
                                                  dtype=np.float64),
                             global_mean=float(d['global_mean']))


def fit_baseline(train):
    raw = pd.Series(train.raw_lengths)
    return BaselineModel(user_means=raw.groupby(train.user_ids).mean(),
                         global_mean=float(raw.mean()))


def baseline_predict(train, user_id):
    """Mean raw training length of ``user_id``; the global mean if unseen."""
    model = train if isinstance(train, BaselineModel) else fit_baseline(train)
    return float(model.predict([user_id])[0])


def predict_seconds(model: FittedModel,
                    x,
                    user_id,
                    lognormal_correction=False,
                    sigma1_sq=0.0):
    """exp(global_mean + predicted centered log length).

    With ``lognormal_correction`` the result is scaled by exp(sigma1^2 / 2).
    """
    log_pred = model.global_mean + predict_log(model, x, user_id)
    if lognormal_correction:
        log_pred += 0.5 * sigma1_sq
    return math.exp(log_pred)


def mae(predictions, actual):
    predictions = np.asarray(predictions, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predictions.shape != actual.shape:
        raise ValueError(f'Length mismatch: {predictions.shape} predictions '
                         f'for {actual.shape} actual values')
    if predictions.size == 0:
        raise ValueError('MAE of an empty set is undefined')
    return float(np.mean(np.abs(predictions - actual)))


def normalized_mae(model_preds, baseline_preds, actual):
    base = mae(baseline_preds, actual)
    if base == 0:
        raise SessionLenError('Baseline MAE is zero, cannot normalize')
    return mae(model_preds, actual) / base


def activity_cutoffs(train_counts):
    """(q10, q20) of the training sessions-per-user distribution."""
    counts = np.asarray(train_counts, dtype=np.float64)
    q10, q20 = np.quantile(counts, [0.1, 0.2])
    return float(q10), float(q20)


@dataclasses.dataclass(frozen=True)
class ActivityBreakdown:
    """Normalized MAE per activity group; None marks an empty group.

    Groups are cumulative: ``<q20`` contains ``<q10``.
    """
    cutoffs: Tuple[float, float]
    normalized: Dict[str, Optional[float]]
    sizes: Dict[str, int]


def decile_breakdown(model_errors,
                     baseline_errors,
                     test_user_ids,
                     train_counts,
                     cutoffs=None):
    """Normalized MAE within groups of users keyed by training activity.

    Args:
        model_errors, baseline_errors (numpy.ndarray): Absolute errors per
            test session.
        test_user_ids (array-like): Owner of each test session.
        train_counts (pandas.Series): Training sessions per user.
        cutoffs (Tuple[float, float], optional): Defaults to the 10% and 20%
            quantiles of ``train_counts``.
    """
    model_errors = np.asarray(model_errors, dtype=np.float64)
    baseline_errors = np.asarray(baseline_errors, dtype=np.float64)
    if cutoffs is None:
        cutoffs = activity_cutoffs(train_counts.to_numpy())
    activity = pd.Series(np.asarray(test_user_ids)).map(train_counts)
    if activity.isna().any():
        raise SessionLenError('Test users missing from the training counts')
    activity = activity.to_numpy(dtype=np.float64)
    q10, q20 = cutoffs
    masks = {
        '<q10': activity < q10,
        '<q20': activity < q20,
        '>q20': activity > q20,
    }
    normalized, sizes = {}, {}
    for name in GROUPS:
        mask = masks[name]
        sizes[name] = int(mask.sum())
        base = float(np.mean(baseline_errors[mask])) if mask.any() else 0.0
        if not mask.any() or base == 0:
            normalized[name] = None
        else:
            normalized[name] = float(np.mean(model_errors[mask])) / base
    return ActivityBreakdown(cutoffs=(float(q10), float(q20)),
                             normalized=normalized,
                             sizes=sizes)


def _coefficients(model):
    if isinstance(model, LinearCoefficients):
        return model.beta
    if isinstance(model, FittedModel):
        model = model.oracle
    if isinstance(model, LinearOracle):
        return model.beta
    raise UnsupportedModelError(
        f'Feature importance needs a linear model, got {type(model).__name__}'
    )


def feature_importance(model, names):
    """(name, |coefficient|) pairs, largest first, ties by name."""
    beta = np.asarray(_coefficients(model), dtype=np.float64)
    assert len(beta) == len(names), \
        f'{len(names)} names for {len(beta)} coefficients'
    pairs = [(str(n), float(abs(b))) for n, b in zip(names, beta)]
    return sorted(pairs, key=lambda p: (-p[1], p[0]))


__all__ = [
    'GROUPS', 'BaselineModel', 'ActivityBreakdown', 'fit_baseline',
    'baseline_predict', 'predict_seconds', 'mae', 'normalized_mae',
    'activity_cutoffs', 'decile_breakdown', 'feature_importance'
]
