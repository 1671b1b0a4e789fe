import dataclasses

import numpy as np
import pandas as pd
import scipy.linalg
from sessionlen.bcd.objective import UserIndex, objective


@dataclasses.dataclass(frozen=True)
class JointRidgeSolution:
    beta: np.ndarray
    user_effects: pd.Series
    objective: float


def augmented_ridge_solve(x, y, user_ids, alpha, lam):
    """Exact joint minimizer of the l2-penalized random-intercept objective.

    Solves the normal equations of the augmented design [X | Z], Z being the
    row-to-user indicator matrix, with penalty alpha on beta and lam on mu.
    The user block is diagonal, so mu is eliminated through its Schur
    complement and only a d x d system is factorized.
    """
    x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    index = UserIndex.from_ids(user_ids)
    d = x.shape[1]
    inv_diag = 1.0 / (index.counts + lam)
    zx = np.zeros((index.n_users, d))
    np.add.at(zx, index.codes, x)
    zy = index.user_sums(y)
    lhs = x.T @ x + alpha * np.eye(d) - zx.T @ (inv_diag[:, None] * zx)
    rhs = x.T @ y - zx.T @ (inv_diag * zy)
    beta = scipy.linalg.solve(0.5 * (lhs + lhs.T), rhs, assume_a='pos')
    mu = inv_diag * (zy - zx @ beta)
    f = x @ beta
    value = objective(y, f, mu, np.zeros(len(y)), index, lam, np.inf,
                      alpha * float(np.dot(beta, beta)))
    return JointRidgeSolution(beta=beta,
                              user_effects=pd.Series(mu, index=index.users),
                              objective=value)


__all__ = ['JointRidgeSolution', 'augmented_ridge_solve']
