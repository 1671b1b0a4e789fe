import dataclasses
from typing import List, Optional

import numpy as np
from sessionlen._logging import info
from sessionlen.features.standardize import (apply_standardizer,
                                             fit_standardizer)
from sessionlen.features.table import FeatureConfig, build_features
from sessionlen.profiler import FitProfiler
from sessionlen.shrink.model1 import (estimate_variance_components,
                                      global_log_mean)
from sessionlen.tuning.families import (FitData, TrainedModel, get_family,
                                        train_model)
from sessionlen.tuning.grid import GridResult, default_grid, grid_search
from sessionlen.tuning.metrics import (decile_breakdown, feature_importance,
                                       fit_baseline, mae, normalized_mae)
from sessionlen.tuning.report import EvalReport


def feature_config_of(config):
    return FeatureConfig(categoricals=tuple(config.categoricals),
                         optional_categoricals=tuple(
                             config.optional_categoricals))


@dataclasses.dataclass
class ExperimentResult:
    family: str
    model: TrainedModel
    report: EvalReport
    grid: Optional[GridResult] = None

    def importance(self):
        """Ranked |beta| for linear families, else None."""
        if self.model.fitted is None or \
                self.model.fitted.oracle_spec.kind not in ('ridge', 'lasso'):
            return None
        names = self.model.standardizer.output_columns
        return feature_importance(self.model.fitted, names)


def tune(family_tag, split, config):
    """Grid search on train, scored on validation. Test is never touched."""
    family = get_family(family_tag)
    if family.oracle in ('baseline', 'none'):
        return None
    features = build_features(split, feature_config_of(config))
    std, x_train = fit_standardizer(features['train'])
    x_valid = apply_standardizer(std, features['validation'])
    vc = None
    if family.has_user_effects:
        vc = estimate_variance_components(split.train)
        global_mean = vc.global_mean
    else:
        global_mean = global_log_mean(split.train.log_lengths)
    train = FitData.of(split.train, x_train)
    valid = FitData.of(split.validation, x_valid)
    grid = default_grid(family, config, vc, train, global_mean)
    info('Tuning {} over {} grid points', family.tag, grid.size)
    return grid_search(family,
                       grid,
                       train,
                       valid,
                       global_mean,
                       eps=config.eps,
                       max_iters=config.max_iters)


def evaluate_model(model, baseline, test, history, train_counts):
    """Score ``model`` on ``test`` against ``baseline``."""
    preds = model.predict_part(test, history)
    base_preds = baseline.predict(test.user_ids)
    actual = test.raw_lengths
    abs_err = np.abs(preds - actual)
    base_err = np.abs(base_preds - actual)
    return EvalReport(family=model.family,
                      mae_seconds=mae(preds, actual),
                      normalized_mae=normalized_mae(preds, base_preds,
                                                    actual),
                      baseline_mae=mae(base_preds, actual),
                      n_test=test.n_sessions,
                      breakdown=decile_breakdown(abs_err, base_err,
                                                 test.user_ids, train_counts),
                      params=model.point.label() if model.point else '')


def run_experiment(split, family_tag, config, profiler=None):
    """Tune on validation, refit on train + validation, evaluate on test."""
    profiler = profiler or FitProfiler()
    grid = tune(family_tag, split, config)
    fit_set = split.train_valid()
    with profiler.record(family_tag, FitProfiler.TRAIN):
        model = train_model(family_tag,
                            fit_set,
                            point=grid.best if grid is not None else None,
                            feature_config=feature_config_of(config),
                            eps=config.eps,
                            max_iters=config.max_iters,
                            lognormal_correction=config.lognormal_correction)
    if grid is not None:
        model.diagnostics['validation_mae'] = grid.best_mae
    baseline = fit_baseline(fit_set)
    with profiler.record(family_tag, FitProfiler.PREDICT):
        report = evaluate_model(model, baseline, split.test, fit_set,
                                split.train.counts)
    info('{}: test MAE {:.2f}s, normalized {:.3f}', family_tag,
         report.mae_seconds, report.normalized_mae)
    return ExperimentResult(family=family_tag,
                            model=model,
                            report=report,
                            grid=grid)


def compare_families(split, families, config, profiler=None):
    profiler = profiler or FitProfiler()
    results: List[ExperimentResult] = []
    for tag in families:
        results.append(run_experiment(split, tag, config, profiler))
    return results


__all__ = [
    'ExperimentResult', 'feature_config_of', 'tune', 'evaluate_model',
    'run_experiment', 'compare_families'
]
