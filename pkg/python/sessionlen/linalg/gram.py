import dataclasses

import numpy as np
import scipy.linalg


@dataclasses.dataclass(frozen=True)
class GramFactorization:
    """Cached eigendecomposition Q = X^T X = V diag(gamma) V^T.

    Computed once per design matrix and shared by every ridge / lasso solve
    along a tuning path and across block-coordinate iterations.
    """
    q: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray  # descending, clamped at 0
    lipschitz: float  # 2 * max eigenvalue

    @property
    def dim(self):
        return self.q.shape[0]


@dataclasses.dataclass(frozen=True)
class LinearCoefficients:
    beta: np.ndarray
    penalty: str  # 'l2' or 'l1'
    alpha: float
    n_iter: int = 0
    rel_change: float = 0.0
    kkt_residual: float = 0.0
    converged: bool = True

    def __post_init__(self):
        assert np.all(np.isfinite(self.beta)), 'Non-finite coefficients'

    def penalty_value(self):
        if self.penalty == 'l1':
            return self.alpha * float(np.sum(np.abs(self.beta)))
        return self.alpha * float(np.dot(self.beta, self.beta))


def precompute_gram(x):
    """Eigendecompose X^T X once.

    Args:
        x (numpy.ndarray or DesignMatrix): The N0 x d design.

    Returns:
        GramFactorization
    """
    x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f'Design must be a 2D array with d >= 1, got shape '
                         f'{x.shape}')
    if not np.all(np.isfinite(x)):
        raise ValueError('Design matrix has non-finite entries')
    q = x.T @ x
    q = 0.5 * (q + q.T)
    gammas, vectors = scipy.linalg.eigh(q)
    gammas = np.maximum(gammas[::-1], 0.0)
    vectors = vectors[:, ::-1]
    return GramFactorization(q=q,
                             eigenvectors=vectors,
                             eigenvalues=gammas,
                             lipschitz=2.0 * float(gammas[0]))


__all__ = ['GramFactorization', 'LinearCoefficients', 'precompute_gram']
