"""Per-user shrinkage (random-intercept model) with moment-based variance components."""
import dataclasses

import numpy as np
import pandas as pd
from sessionlen._logging import debug, info
from sessionlen.exception import ShrinkageError, UnknownUserError

VARIANCE_FLOOR = 1e-6


@dataclasses.dataclass(frozen=True)
class VarianceComponents:
    sigma0_sq: float
    sigma1_sq: float
    global_mean: float = 0.0

    def __post_init__(self):
        if not (self.sigma0_sq > 0 and self.sigma1_sq > 0):
            raise ShrinkageError(
                f'Variance components must be positive, got '
                f'({self.sigma0_sq}, {self.sigma1_sq})')

    @property
    def lam(self):
        """Shrinkage strength lambda = sigma1^2 / sigma0^2."""
        return self.sigma1_sq / self.sigma0_sq

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def aggregate_variance_moments(groups, floor=VARIANCE_FLOOR):
    """Average the per-user unbiased moment estimates over users with n_i >= 2.

    For centered observations y_i of user i with T_i = ||y_i||^2,
    ``((sum_j y_ij)^2 - T_i) / (n_i (n_i - 1))`` estimates sigma0^2 and
    ``T_i / n_i`` estimates sigma0^2 + sigma1^2. Both averages are clamped
    at ``floor`` after sigma1^2 is formed.

    Returns:
        Tuple[float, float]: (sigma0^2, sigma1^2)
    """
    s0, total = [], []
    for y in groups:
        y = np.asarray(y, dtype=np.float64)
        n = y.shape[0]
        if n < 2:
            continue
        t = float(np.dot(y, y))
        s0.append((float(np.sum(y))**2 - t) / (n * (n - 1)))
        total.append(t / n)
    if not s0:
        raise ShrinkageError(
            'Variance components need at least one user with two sessions')
    sigma0_sq = float(np.mean(s0))
    sigma1_sq = float(np.mean(total)) - sigma0_sq
    return max(sigma0_sq, floor), max(sigma1_sq, floor)


def global_log_mean(y):
    """Mean of the log lengths, independent of row order."""
    return float(np.mean(np.sort(np.asarray(y, dtype=np.float64))))


def variance_components_from_arrays(y, user_ids, floor=VARIANCE_FLOOR):
    y = np.asarray(y, dtype=np.float64)
    global_mean = global_log_mean(y)
    centered = pd.Series(y - global_mean)
    # sorting the groups makes the result independent of row and user order
    groups = [
        np.sort(g.to_numpy())
        for _, g in centered.groupby(np.asarray(user_ids), sort=True)
    ]
    sigma0_sq, sigma1_sq = aggregate_variance_moments(groups, floor)
    vc = VarianceComponents(sigma0_sq, sigma1_sq, global_mean)
    debug('Variance components sigma0^2={:.4g} sigma1^2={:.4g} lambda={:.4g}',
          sigma0_sq, sigma1_sq, vc.lam)
    return vc


def estimate_variance_components(train):
    """Method-of-moments (sigma0^2, sigma1^2) on the training log lengths."""
    return variance_components_from_arrays(train.log_lengths, train.user_ids)


@dataclasses.dataclass(frozen=True)
class Model1Fit:
    means: pd.Series
    counts: pd.Series
    variance_components: VarianceComponents

    @property
    def global_mean(self):
        return self.variance_components.global_mean


def model1_fit_arrays(y, user_ids, vc):
    centered = pd.Series(np.asarray(y, dtype=np.float64) - vc.global_mean)
    grouped = centered.groupby(np.asarray(user_ids), sort=True)
    sums = grouped.sum()
    counts = grouped.size()
    # sum / (n + lambda) == mean / (1 + lambda / n)
    means = sums / (counts + vc.lam)
    return Model1Fit(means=means, counts=counts, variance_components=vc)


def model1_fit(train, vc):
    """Shrunken user means (ybar_i - global_mean) / (1 + lambda / n_i)."""
    fit = model1_fit_arrays(train.log_lengths, train.user_ids, vc)
    info('Model 1 fitted on {} users with lambda={:.4g}', len(fit.means),
         vc.lam)
    return fit


def model1_predict(fit, user_id):
    """Predicted log length global_mean + mu_i of a training user."""
    if user_id not in fit.means.index:
        raise UnknownUserError(user_id)
    return fit.global_mean + float(fit.means[user_id])


def model1_predict_many(fit, user_ids):
    """Vectorized ``model1_predict`` falling back to the global mean."""
    mu = pd.Series(user_ids).map(fit.means).fillna(0.0).to_numpy()
    return fit.global_mean + mu


__all__ = [
    'VarianceComponents', 'Model1Fit', 'VARIANCE_FLOOR',
    'aggregate_variance_moments', 'global_log_mean',
    'variance_components_from_arrays',
    'estimate_variance_components', 'model1_fit', 'model1_fit_arrays',
    'model1_predict', 'model1_predict_many'
]
