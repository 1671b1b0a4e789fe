import numpy as np
from sessionlen.linalg.gram import LinearCoefficients


def ridge_solve(gf, xtz, alpha):
    """Ridge coefficients (X^T X + alpha I)^{-1} X^T z from a cached factorization.

    Computed as V diag(1 / (gamma + alpha)) V^T X^T z, O(d^2) per call.

    Args:
        gf (GramFactorization): Factorization of X^T X.
        xtz (numpy.ndarray): The vector X^T z.
        alpha (float): Positive penalty weight.

    Returns:
        LinearCoefficients
    """
    if not alpha > 0:
        raise ValueError(f'Ridge penalty must be positive, got {alpha}')
    v = gf.eigenvectors
    beta = v @ ((v.T @ np.asarray(xtz, dtype=np.float64)) /
                (gf.eigenvalues + alpha))
    return LinearCoefficients(beta=beta, penalty='l2', alpha=float(alpha))


def ridge_path(gf, xtz, alphas):
    """Ridge solutions for every alpha, sharing one projection V^T X^T z."""
    v = gf.eigenvectors
    projected = v.T @ np.asarray(xtz, dtype=np.float64)
    path = []
    for alpha in alphas:
        if not alpha > 0:
            raise ValueError(f'Ridge penalty must be positive, got {alpha}')
        beta = v @ (projected / (gf.eigenvalues + alpha))
        path.append(LinearCoefficients(beta=beta, penalty='l2',
                                       alpha=float(alpha)))
    return path


__all__ = ['ridge_solve', 'ridge_path']
