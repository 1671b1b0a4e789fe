import dataclasses
import math
from typing import Any, Optional, Tuple

import numpy as np
import pandas as pd
from sessionlen._logging import debug, trace, warn
from sessionlen.bcd.objective import UserIndex, mu_step, objective, s_step
from sessionlen.bcd.oracle import FittedOracle, OracleSolver, OracleSpec
from sessionlen.exception import ConvergenceError

# relative slack when asserting monotone objective steps
_INCREASE_SLACK = 1e-8


@dataclasses.dataclass(frozen=True)
class BcdConfig:
    lam: float
    delta: float = math.inf
    eps: float = 0.01
    max_iters: int = 100

    def __post_init__(self):
        assert self.lam > 0, f'lambda must be positive, got {self.lam}'
        assert self.delta > 0, f'delta must be positive, got {self.delta}'
        assert self.eps > 0, f'eps must be positive, got {self.eps}'
        assert self.max_iters >= 1, \
            f'max_iters must be >= 1, got {self.max_iters}'

    @property
    def robust(self):
        return not math.isinf(self.delta)

    def to_dict(self):
        # JSON has no infinity; None stands for it
        return {
            'lam': None if math.isinf(self.lam) else self.lam,
            'delta': None if math.isinf(self.delta) else self.delta,
            'eps': self.eps,
            'max_iters': self.max_iters,
        }

    @staticmethod
    def from_dict(d):
        return BcdConfig(
            lam=math.inf if d['lam'] is None else float(d['lam']),
            delta=math.inf if d['delta'] is None else float(d['delta']),
            eps=float(d['eps']),
            max_iters=int(d['max_iters']))


@dataclasses.dataclass
class FittedModel:
    """Output of the block-coordinate fit.

    ``user_effects`` maps user id to mu_i. ``corruption`` is row-aligned
    with the training design and is not used for prediction.
    """
    oracle_spec: OracleSpec
    oracle: FittedOracle
    user_effects: pd.Series
    corruption: np.ndarray
    config: BcdConfig
    objective_trace: Tuple[float, ...]
    global_mean: float = 0.0
    standardizer: Optional[Any] = None
    n_iter: int = 0
    converged: bool = True

    @property
    def final_objective(self):
        return self.objective_trace[-1] if self.objective_trace else math.nan


def bcd_fit(x,
            y,
            user_ids,
            oracle,
            cfg,
            solver=None,
            warm_start=None,
            global_mean=0.0,
            standardizer=None):
    """Minimize the joint objective over (f, mu, s) by block coordinate descent.

    Starting from f = 0, mu = 0 and s = 0 each iteration fits the oracle to
    z = y - mu - s, updates mu in closed form from the residuals y - f,
    soft-thresholds the remaining residuals into s and records the
    objective. Stops once the relative objective change falls to
    ``cfg.eps`` or after ``cfg.max_iters`` iterations.

    Args:
        x (numpy.ndarray or DesignMatrix): Standardized design, one row per
            training session.
        y (numpy.ndarray): Centered log lengths.
        user_ids (array-like): Owner of each row.
        oracle (OracleSpec): The covariate link.
        cfg (BcdConfig): Penalties and stopping rule.
        solver (OracleSolver, optional): Reused to share the Gram matrix.
        warm_start (numpy.ndarray, optional): Initial lasso coefficients.

    Returns:
        FittedModel
    """
    x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    assert x.shape[0] == len(y), \
        f'Row mismatch: X has {x.shape[0]} rows, y has {len(y)}'
    index = UserIndex.from_ids(user_ids)
    assert index.n_rows == len(y), 'user ids must be row aligned with y'
    if solver is None:
        solver = OracleSolver(x)

    mu = np.zeros(index.n_users)
    s = np.zeros(len(y))
    beta = warm_start
    fitted = None
    losses = []
    rises = 0
    converged = False
    # with mu and s pinned at zero the oracle target never changes
    single_pass = math.isinf(cfg.lam) and math.isinf(cfg.delta)

    for t in range(1, cfg.max_iters + 1):
        z = y - index.expand(mu) - s
        fitted = solver.fit(oracle, z, warm_start=beta)
        if oracle.kind == 'lasso':
            beta = fitted.beta
        f = fitted.predict(x)
        r = y - f
        mu = mu_step(r, s, index, cfg.lam)
        s = s_step(r, mu, index, cfg.delta)
        loss = objective(y, f, mu, s, index, cfg.lam, cfg.delta,
                         fitted.penalty())
        trace('iteration {} objective {:.10g}', t, loss)
        losses.append(loss)
        if single_pass:
            converged = True
            break
        if t == 1:
            continue
        prev = losses[-2]
        if loss > prev + _INCREASE_SLACK * max(1.0, abs(prev)):
            if oracle.kind != 'gbt':
                raise ConvergenceError(
                    f'Objective rose from {prev:.12g} to {loss:.12g} at '
                    f'iteration {t} with a {oracle.kind} oracle')
            rises += 1
            if rises >= 2:
                warn('Objective rose twice in a row, stopping at iteration {}',
                     t)
                break
        else:
            rises = 0
        if prev == 0 or abs(loss - prev) / abs(prev) <= cfg.eps:
            converged = True
            break

    if not converged:
        debug('Block coordinate descent stopped after {} iterations', t)
    return FittedModel(oracle_spec=oracle,
                       oracle=fitted,
                       user_effects=pd.Series(mu, index=index.users),
                       corruption=s,
                       config=cfg,
                       objective_trace=tuple(losses),
                       global_mean=float(global_mean),
                       standardizer=standardizer,
                       n_iter=len(losses),
                       converged=converged)


def predict_log_many(model, x, user_ids):
    """f(x) + mu(user) per row; users unseen in training get mu = 0."""
    f = model.oracle.predict(x)
    mu = pd.Series(np.asarray(user_ids)).map(model.user_effects)
    return f + mu.fillna(0.0).to_numpy(dtype=np.float64)


def predict_log(model, x, user_id):
    """Predicted centered log length of one session."""
    return float(predict_log_many(model, np.atleast_2d(x), [user_id])[0])


__all__ = [
    'BcdConfig', 'FittedModel', 'bcd_fit', 'predict_log', 'predict_log_many'
]
