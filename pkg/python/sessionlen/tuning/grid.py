import dataclasses
import itertools
import math
import time
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from sessionlen._logging import debug, info, warn
from sessionlen.bcd.oracle import OracleSolver
from sessionlen.exception import ConvergenceError, SessionLenError
from sessionlen.gbt.boosting import GbtParams
from sessionlen.linalg.lasso import lasso_alpha_max
from sessionlen.tuning.families import (GridPoint, fit_point,
                                        predict_seconds_many)
from sessionlen.tuning.metrics import mae


def _positive(name, values):
    assert len(values) > 0, f'Grid {name} must be non-empty'
    for v in values:
        assert v is None or v > 0, f'Grid {name} must be positive, got {v}'


@dataclasses.dataclass(frozen=True)
class Grid:
    """Candidate values per tuning parameter.

    ``alphas == (None,)`` and ``gbt_params == (None,)`` mark parameters the
    family does not use; ``inf`` in ``lambdas`` / ``deltas`` pins mu or s
    to zero.
    """
    lambdas: Tuple[float, ...] = (math.inf, )
    alphas: Tuple[Optional[float], ...] = (None, )
    deltas: Tuple[float, ...] = (math.inf, )
    gbt_params: Tuple[Optional[GbtParams], ...] = (None, )

    def __post_init__(self):
        _positive('lambdas', self.lambdas)
        _positive('alphas', self.alphas)
        _positive('deltas', self.deltas)
        assert len(self.gbt_params) > 0, 'Grid gbt_params must be non-empty'

    def points(self):
        """Unique points, alpha descending within each (gbt, delta, lambda) chain."""
        alphas = sorted(set(self.alphas),
                        key=lambda a: -np.inf if a is None else -a)
        seen = dict()
        for gbt, delta, lam in itertools.product(
                dict.fromkeys(self.gbt_params), sorted(set(self.deltas)),
                sorted(set(self.lambdas))):
            for alpha in alphas:
                point = GridPoint(lam=float(lam),
                                  alpha=None if alpha is None else float(alpha),
                                  delta=float(delta),
                                  gbt=gbt)
                seen.setdefault(point, None)
        return list(seen)

    @property
    def size(self):
        return len(self.points())


def default_grid(family, config, vc, train, global_mean):
    """Grid for ``family`` from ``config`` overrides and data-driven defaults.

    Lambda spans [lam_hat / 10, 10 lam_hat] around the moment estimate for
    linear links and [1, 10] for boosted trees. Alpha is log-spaced down
    from the smallest value that zeroes every lasso coefficient.
    ``vc`` may be None for families without user effects.
    """
    if not family.tune_lambda:
        lambdas = (vc.lam if family.oracle == 'none' else math.inf, )
    elif config.lam is not None:
        lambdas = (config.lam, )
    elif family.oracle == 'gbt':
        lambdas = tuple(np.linspace(1.0, 10.0, config.n_lambdas))
    else:
        lambdas = tuple(
            np.geomspace(vc.lam / 10, vc.lam * 10, config.n_lambdas))

    if not family.tune_alpha:
        alphas = (None, )
    elif config.alpha is not None:
        alphas = (config.alpha, )
    else:
        xtz = train.design.T @ (train.log_lengths - global_mean)
        alpha_max = lasso_alpha_max(xtz)
        if alpha_max <= 0:
            alpha_max = 1.0
        alphas = tuple(
            np.geomspace(alpha_max, alpha_max * config.alpha_ratio,
                         config.n_alphas))

    if not family.tune_delta:
        deltas = (math.inf, )
    elif config.delta is not None:
        deltas = (config.delta, )
    else:
        deltas = tuple(np.geomspace(0.1, 10.0, config.n_deltas))

    if family.oracle == 'gbt':
        gbt_params = tuple(
            GbtParams(n_trees=n,
                      max_depth=depth,
                      learning_rate=eta,
                      min_samples_leaf=config.gbt_min_samples_leaf)
            for n, depth, eta in itertools.product(
                config.gbt_n_trees, config.gbt_depths,
                config.gbt_learning_rates))
    else:
        gbt_params = (None, )
    return Grid(lambdas=lambdas,
                alphas=alphas,
                deltas=deltas,
                gbt_params=gbt_params)


@dataclasses.dataclass(frozen=True)
class GridRow:
    point: GridPoint
    validation_mae: float
    n_iter: int
    objective: float
    converged: bool
    seconds: float


@dataclasses.dataclass(frozen=True)
class GridResult:
    best: GridPoint
    best_mae: float
    rows: Tuple[GridRow, ...]
    n_failed: int = 0

    def to_frame(self):
        records = []
        for row in self.rows:
            d = row.point
            records.append({
                'lambda': d.lam,
                'alpha': d.alpha,
                'delta': d.delta,
                'n_trees': d.gbt.n_trees if d.gbt else None,
                'max_depth': d.gbt.max_depth if d.gbt else None,
                'learning_rate': d.gbt.learning_rate if d.gbt else None,
                'validation_mae': row.validation_mae,
                'iterations': row.n_iter,
                'objective': row.objective,
                'converged': row.converged,
                'seconds': row.seconds,
            })
        return pd.DataFrame.from_records(records)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')


def _selection_key(row):
    # lower MAE first, then heavier regularization
    p = row.point
    alpha = p.alpha if p.alpha is not None else 0.0
    return (row.validation_mae, -alpha, -p.lam, -p.delta)


def grid_search(family,
                grid,
                train,
                valid,
                global_mean,
                eps=0.01,
                max_iters=100,
                warm_start=True,
                profiler=None):
    """Pick the grid point with the smallest validation MAE in seconds.

    Points are visited chain by chain; along a chain alpha decreases and,
    with ``warm_start``, each lasso solve starts from the previous
    coefficients. The Gram matrix of the training design is computed once
    for the whole grid.

    Args:
        family (FamilySpec): The family being tuned.
        grid (Grid): Candidate values.
        train, valid (FitData): Training and validation rows.
        global_mean (float): Training mean of the log lengths.

    Returns:
        GridResult
    """
    points = grid.points()
    solver = OracleSolver(train.design)
    rows: List[GridRow] = []
    n_failed = 0
    chain, beta = None, None
    for point in points:
        if point.chain_key() != chain:
            chain, beta = point.chain_key(), None
        start = time.perf_counter()
        try:
            fitted = fit_point(family,
                               point,
                               train,
                               global_mean,
                               eps=eps,
                               max_iters=max_iters,
                               solver=solver,
                               warm_start=beta if warm_start else None)
        except (ConvergenceError, FloatingPointError,
                np.linalg.LinAlgError) as e:
            n_failed += 1
            warn('Grid point {} failed: {}', point.label(), e)
            beta = None
            continue
        seconds = time.perf_counter() - start
        if profiler is not None:
            profiler.insert(family.tag, 'tune', seconds)
        if family.oracle == 'lasso':
            beta = fitted.oracle.beta
        preds = predict_seconds_many(fitted, valid.design, valid.user_ids)
        val_mae = mae(preds, valid.raw_lengths)
        debug('{}: validation MAE {:.6g}', point.label(), val_mae)
        rows.append(
            GridRow(point=point,
                    validation_mae=val_mae,
                    n_iter=fitted.n_iter,
                    objective=fitted.final_objective,
                    converged=fitted.converged,
                    seconds=seconds))
    if not rows:
        raise SessionLenError(
            f'All {len(points)} grid points failed for {family.tag}')
    best = min(rows, key=_selection_key)
    info('{}: best of {} grid points is {} (validation MAE {:.6g})',
         family.tag, len(points), best.point.label(), best.validation_mae)
    return GridResult(best=best.point,
                      best_mae=best.validation_mae,
                      rows=tuple(rows),
                      n_failed=n_failed)


__all__ = [
    'Grid', 'GridRow', 'GridResult', 'default_grid', 'grid_search'
]
