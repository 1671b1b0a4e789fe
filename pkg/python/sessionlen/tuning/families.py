"""The model ladder: family tags, grid points, and end-to-end trained models."""
import dataclasses
import math
from typing import Any, Dict, Optional

import numpy as np
from sessionlen._logging import info
from sessionlen.bcd.algorithm import (BcdConfig, FittedModel, bcd_fit,
                                      predict_log_many)
from sessionlen.bcd.oracle import OracleSpec
from sessionlen.data.sessions import SessionDataset
from sessionlen.exception import ConfigError
from sessionlen.features.standardize import (Standardizer, apply_standardizer,
                                             fit_standardizer)
from sessionlen.features.table import (FeatureConfig, FeatureStats,
                                       build_table, compute_feature_stats)
from sessionlen.gbt.boosting import GbtParams
from sessionlen.shrink.model1 import (VarianceComponents,
                                      estimate_variance_components,
                                      global_log_mean)
from sessionlen.tuning.metrics import BaselineModel, fit_baseline


@dataclasses.dataclass(frozen=True)
class FamilySpec:
    tag: str
    oracle: str  # ridge, lasso, gbt, none or baseline
    tune_lambda: bool = False
    tune_alpha: bool = False
    tune_delta: bool = False
    description: str = ''

    @property
    def uses_features(self):
        return self.oracle in ('ridge', 'lasso', 'gbt')

    @property
    def has_user_effects(self):
        """Whether the family fits mu_i, so lambda and the variances matter."""
        return self.oracle == 'none' or self.tune_lambda


FAMILIES = {
    f.tag: f
    for f in [
        FamilySpec('baseline', 'baseline',
                   description='per-user mean of raw lengths'),
        FamilySpec('model1', 'none',
                   description='shrunken user means, lambda from moments'),
        FamilySpec('ridge', 'ridge', tune_alpha=True,
                   description='ridge on covariates, no user effects'),
        FamilySpec('model2-l1', 'lasso', tune_lambda=True, tune_alpha=True,
                   description='l1 link plus user effects'),
        FamilySpec('model2-l2', 'ridge', tune_lambda=True, tune_alpha=True,
                   description='l2 link plus user effects'),
        FamilySpec('model2-gbt', 'gbt', tune_lambda=True,
                   description='boosted-tree link plus user effects'),
        FamilySpec('model3-l2', 'ridge', tune_lambda=True, tune_alpha=True,
                   tune_delta=True,
                   description='robust l2 link plus user effects'),
        FamilySpec('model3-gbt', 'gbt', tune_lambda=True, tune_delta=True,
                   description='robust boosted-tree link plus user effects'),
        FamilySpec('sigir2017', 'gbt',
                   description='boosted trees on covariates only'),
    ]
}


def get_family(tag):
    if tag not in FAMILIES:
        raise ConfigError(
            f'Unknown family {tag!r}, expected one of {tuple(FAMILIES)}')
    return FAMILIES[tag]


def _inf_to_none(v):
    return None if v is not None and math.isinf(v) else v


def _none_to_inf(v):
    return math.inf if v is None else float(v)


@dataclasses.dataclass(frozen=True)
class GridPoint:
    lam: float = math.inf
    alpha: Optional[float] = None
    delta: float = math.inf
    gbt: Optional[GbtParams] = None

    def oracle_spec(self, family):
        if family.oracle == 'ridge':
            return OracleSpec.ridge(self.alpha)
        if family.oracle == 'lasso':
            return OracleSpec.lasso(self.alpha)
        if family.oracle == 'gbt':
            return OracleSpec.boosted(self.gbt)
        return OracleSpec.none()

    def bcd_config(self, eps=0.01, max_iters=100):
        return BcdConfig(lam=self.lam,
                         delta=self.delta,
                         eps=eps,
                         max_iters=max_iters)

    def chain_key(self):
        """Points sharing a key form one warm-started alpha path."""
        return (self.gbt, self.delta, self.lam)

    def label(self):
        parts = [f'lambda={self.lam:.4g}', f'delta={self.delta:.4g}']
        if self.alpha is not None:
            parts.append(f'alpha={self.alpha:.4g}')
        if self.gbt is not None:
            parts.append(f'trees={self.gbt.n_trees} depth={self.gbt.max_depth}'
                         f' eta={self.gbt.learning_rate:g}')
        return ' '.join(parts)

    def to_dict(self):
        return {
            'lam': _inf_to_none(self.lam),
            'alpha': self.alpha,
            'delta': _inf_to_none(self.delta),
            'gbt': self.gbt.to_dict() if self.gbt is not None else None,
        }

    @staticmethod
    def from_dict(d):
        return GridPoint(
            lam=_none_to_inf(d['lam']),
            alpha=d['alpha'],
            delta=_none_to_inf(d['delta']),
            gbt=GbtParams.from_dict(d['gbt']) if d['gbt'] else None)


@dataclasses.dataclass(frozen=True)
class FitData:
    """Row-aligned training inputs: standardized design plus targets."""
    design: np.ndarray
    log_lengths: np.ndarray
    raw_lengths: np.ndarray
    user_ids: np.ndarray

    @staticmethod
    def of(ds: SessionDataset, design=None):
        values = getattr(design, 'values', design)
        if values is None:
            values = np.zeros((ds.n_sessions, 0))
        assert values.shape[0] == ds.n_sessions, \
            f'Design has {values.shape[0]} rows for {ds.n_sessions} sessions'
        return FitData(design=np.asarray(values, dtype=np.float64),
                       log_lengths=ds.log_lengths,
                       raw_lengths=ds.raw_lengths,
                       user_ids=ds.user_ids)


def fit_point(family,
              point,
              data,
              global_mean,
              eps=0.01,
              max_iters=100,
              solver=None,
              warm_start=None,
              standardizer=None):
    return bcd_fit(data.design,
                   data.log_lengths - global_mean,
                   data.user_ids,
                   point.oracle_spec(family),
                   point.bcd_config(eps, max_iters),
                   solver=solver,
                   warm_start=warm_start,
                   global_mean=global_mean,
                   standardizer=standardizer)


def predict_seconds_many(fitted, design, user_ids, lognormal_correction=False,
                         sigma1_sq=0.0):
    log_pred = fitted.global_mean + predict_log_many(fitted, design, user_ids)
    if lognormal_correction:
        log_pred = log_pred + 0.5 * sigma1_sq
    return np.exp(log_pred)


@dataclasses.dataclass
class TrainedModel:
    """Everything needed to predict session lengths in seconds."""
    family: str
    point: Optional[GridPoint] = None
    fitted: Optional[FittedModel] = None
    baseline: Optional[BaselineModel] = None
    variance_components: Optional[VarianceComponents] = None
    feature_stats: Optional[FeatureStats] = None
    standardizer: Optional[Standardizer] = None
    feature_config: FeatureConfig = dataclasses.field(
        default_factory=FeatureConfig)
    lognormal_correction: bool = False
    diagnostics: Dict[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def spec(self):
        return get_family(self.family)

    def design_for(self, part, history):
        """Standardized design of ``part`` given its preceding sessions."""
        if not self.spec.uses_features:
            return np.zeros((part.n_sessions, 0))
        table = build_table(part,
                            history,
                            self.feature_stats,
                            self.feature_config,
                            schema=self.standardizer.schema)
        return apply_standardizer(self.standardizer, table).values

    def predict_rows(self, design, user_ids):
        if self.baseline is not None:
            return self.baseline.predict(user_ids)
        sigma1_sq = (self.variance_components.sigma1_sq
                     if self.variance_components is not None else 0.0)
        return predict_seconds_many(self.fitted, design, user_ids,
                                    self.lognormal_correction, sigma1_sq)

    def predict_part(self, part, history):
        return self.predict_rows(self.design_for(part, history),
                                 part.user_ids)


def train_model(family_tag,
                fit_set,
                point=None,
                feature_config=None,
                eps=0.01,
                max_iters=100,
                lognormal_correction=False):
    """Fit ``family_tag`` on ``fit_set`` at ``point`` (features included).

    Model 1 ignores ``point`` and uses the moment estimate of lambda.
    """
    family = get_family(family_tag)
    feature_config = feature_config or FeatureConfig()
    if family.oracle == 'baseline':
        return TrainedModel(family=family.tag,
                            baseline=fit_baseline(fit_set),
                            feature_config=feature_config)

    vc = None
    if family.has_user_effects:
        vc = estimate_variance_components(fit_set)
        global_mean = vc.global_mean
    else:
        global_mean = global_log_mean(fit_set.log_lengths)
    stats, std, design = None, None, None
    if family.oracle == 'none':
        point = GridPoint(lam=vc.lam)
    elif point is None:
        raise ConfigError(f'Family {family.tag} needs tuned parameters')
    if family.uses_features:
        stats = compute_feature_stats(fit_set)
        table = build_table(fit_set, SessionDataset.empty(), stats,
                            feature_config)
        std, design = fit_standardizer(table)
    fitted = fit_point(family,
                       point,
                       FitData.of(fit_set, design),
                       global_mean,
                       eps=eps,
                       max_iters=max_iters,
                       standardizer=std)
    info('Fitted {} ({}) in {} iterations', family.tag, point.label(),
         fitted.n_iter)
    return TrainedModel(family=family.tag,
                        point=point,
                        fitted=fitted,
                        variance_components=vc,
                        feature_stats=stats,
                        standardizer=std,
                        feature_config=feature_config,
                        lognormal_correction=lognormal_correction,
                        diagnostics={
                            'n_iter': fitted.n_iter,
                            'converged': fitted.converged,
                            'objective_trace': list(fitted.objective_trace),
                        })


__all__ = [
    'FamilySpec', 'FAMILIES', 'GridPoint', 'FitData', 'TrainedModel',
    'get_family', 'fit_point', 'predict_seconds_many', 'train_model'
]
