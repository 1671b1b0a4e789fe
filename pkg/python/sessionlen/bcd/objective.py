"""Joint MAP objective of the robust random-intercept model and its block updates.

With fitted oracle values f, per-user effects mu and per-row corruptions s
the objective is

    sum_ij (y_ij - f_ij - mu_i - s_ij)^2 + lam sum_i mu_i^2 + omega
        + 2 delta sum_ij |s_ij|

where omega is the oracle penalty. ``lam = inf`` pins mu to zero and
``delta = inf`` pins s to zero; the matching terms are then dropped.
"""
import dataclasses
import math

import numpy as np
import scipy.special
from sessionlen.linalg.lasso import soft_threshold


@dataclasses.dataclass(frozen=True)
class UserIndex:
    """Row-to-user mapping; ``codes[k]`` indexes ``users`` for row k."""
    users: np.ndarray
    codes: np.ndarray
    counts: np.ndarray

    @staticmethod
    def from_ids(user_ids):
        users, codes = np.unique(np.asarray(user_ids), return_inverse=True)
        counts = np.bincount(codes, minlength=len(users))
        return UserIndex(users=users, codes=codes.astype(np.int64),
                         counts=counts)

    @property
    def n_users(self):
        return len(self.users)

    @property
    def n_rows(self):
        return len(self.codes)

    def user_sums(self, values):
        return np.bincount(self.codes,
                           weights=np.asarray(values, dtype=np.float64),
                           minlength=self.n_users)

    def expand(self, per_user):
        return np.asarray(per_user, dtype=np.float64)[self.codes]


def _check_shapes(index, *rows):
    for v in rows:
        assert np.shape(v) == (index.n_rows, ), \
            f'Expected {index.n_rows} rows, got shape {np.shape(v)}'


def objective(y, f_preds, mu, s, index, lam, delta, omega=0.0):
    """Value of the joint objective at (f, mu, s)."""
    _check_shapes(index, y, f_preds, s)
    mu = np.asarray(mu, dtype=np.float64)
    resid = y - f_preds - index.expand(mu) - s
    total = float(np.dot(resid, resid)) + omega
    if not math.isinf(lam):
        total += lam * float(np.dot(mu, mu))
    if not math.isinf(delta):
        total += 2.0 * delta * float(np.sum(np.abs(s)))
    return total


def huber_loss(a, delta):
    """H(a) = a^2 for |a| <= delta, delta (2|a| - delta) otherwise."""
    return 2.0 * scipy.special.huber(delta, a)


def huber_objective(y, f_preds, mu, index, lam, delta, omega=0.0):
    """Joint objective with s minimized out."""
    _check_shapes(index, y, f_preds)
    mu = np.asarray(mu, dtype=np.float64)
    total = float(np.sum(huber_loss(y - f_preds - index.expand(mu),
                                    delta))) + omega
    if not math.isinf(lam):
        total += lam * float(np.dot(mu, mu))
    return total


def mu_step(r, s, index, lam):
    """mu_i = sum_j (r_ij - s_ij) / (n_i + lam)."""
    if math.isinf(lam):
        return np.zeros(index.n_users)
    assert lam > 0, f'lambda must be positive, got {lam}'
    return index.user_sums(np.asarray(r) - np.asarray(s)) / (index.counts +
                                                             lam)


def s_step(r, mu, index, delta):
    """s_ij = soft_threshold(r_ij - mu_i, delta)."""
    if math.isinf(delta):
        return np.zeros(index.n_rows)
    assert delta > 0, f'delta must be positive, got {delta}'
    return np.atleast_1d(soft_threshold(np.asarray(r) - index.expand(mu),
                                        delta))


__all__ = [
    'UserIndex', 'objective', 'huber_loss', 'huber_objective', 'mu_step',
    's_step'
]
