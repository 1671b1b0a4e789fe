"""Estimators for the Gaussian sequence model z | mu ~ N(mu, I), mu ~ N(0, A^2 I)."""
import dataclasses

import numpy as np
from sessionlen.exception import ShrinkageError


@dataclasses.dataclass(frozen=True)
class SequenceModelConfig:
    a2: float

    def __post_init__(self):
        if not self.a2 > 0:
            raise ShrinkageError(f'Prior variance A^2 must be positive, '
                                 f'got {self.a2}')

    @property
    def b2(self):
        """Posterior shrinkage factor B^2 = A^2 / (1 + A^2)."""
        return 1.0 - 1.0 / (1.0 + self.a2)


def _as_finite_vector(z):
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ShrinkageError('Observations must be finite')
    return z


def bayes_sequence(z, a2):
    """Posterior mean E(mu | z) = (1 - 1 / (1 + A^2)) z."""
    config = SequenceModelConfig(a2)
    return config.b2 * _as_finite_vector(z)


def _james_stein_factor(z):
    n = z.shape[-1]
    if n < 3:
        raise ShrinkageError(f'James-Stein needs n >= 3, got n = {n}')
    s = np.sum(z * z, axis=-1, keepdims=True)
    if np.any(s == 0):
        raise ShrinkageError('James-Stein is undefined for z = 0')
    return 1.0 - (n - 2) / s


def james_stein(z):
    """Empirical Bayes estimate (1 - (n - 2) / ||z||^2) z, unclipped."""
    z = _as_finite_vector(z)
    return _james_stein_factor(z) * z


def james_stein_positive_part(z):
    """James-Stein with the shrinkage factor clipped at zero."""
    z = _as_finite_vector(z)
    return np.maximum(_james_stein_factor(z), 0.0) * z


def eb_sequence(z):
    """Bayes rule with the plug-in estimate A^2 = max(||z||^2 / n - 1, 0)."""
    z = _as_finite_vector(z)
    a2 = max(float(np.mean(z * z)) - 1.0, 0.0)
    return (a2 / (1.0 + a2)) * z


@dataclasses.dataclass(frozen=True)
class SequenceRisk:
    ml: float
    eb: float
    bayes: float

    @property
    def eb_excess_ratio(self):
        return (self.eb - self.bayes) / self.bayes


def simulate_sequence_risk(n, a2, trials, seed=0):
    """Monte Carlo risks of the ML, James-Stein and Bayes estimators.

    Each trial draws mu ~ N(0, A^2 I_n) and z ~ N(mu, I_n); the risk is the
    mean over trials of the squared estimation error.
    """
    if n < 3:
        raise ShrinkageError(f'Risk simulation needs n >= 3, got {n}')
    if trials < 1:
        raise ShrinkageError(f'Need at least one trial, got {trials}')
    rng = np.random.default_rng(seed)
    mu = rng.normal(0.0, np.sqrt(a2), size=(trials, n))
    z = mu + rng.normal(size=(trials, n))

    def risk(estimate):
        return float(np.mean(np.sum((estimate - mu)**2, axis=1)))

    return SequenceRisk(ml=risk(z),
                        eb=risk(james_stein(z)),
                        bayes=risk(bayes_sequence(z, a2)))


__all__ = [
    'SequenceModelConfig', 'SequenceRisk', 'bayes_sequence', 'james_stein',
    'james_stein_positive_part', 'eb_sequence', 'simulate_sequence_risk'
]
