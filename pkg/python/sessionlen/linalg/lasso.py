import numpy as np
from sessionlen._logging import debug, warn
from sessionlen.linalg.gram import LinearCoefficients

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10000


def soft_threshold(a, tau):
    """Elementwise sign(a) * max(|a| - tau, 0)."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError(f'Threshold must be non-negative, got {tau}')
    a = np.asarray(a, dtype=np.float64)
    out = np.sign(a) * np.maximum(np.abs(a) - tau, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def lasso_objective(gf, xtz, alpha, beta):
    """F(beta) = beta^T Q beta - 2 <xtz, beta> + alpha * ||beta||_1."""
    return float(beta @ (gf.q @ beta) - 2.0 * np.dot(xtz, beta) +
                 alpha * np.sum(np.abs(beta)))


def lasso_kkt_residual(gf, xtz, alpha, beta):
    beta = np.asarray(beta, dtype=np.float64)
    grad = 2.0 * (gf.q @ beta) - 2.0 * np.asarray(xtz, dtype=np.float64)
    active = beta != 0
    res = np.where(active, np.abs(grad + alpha * np.sign(beta)),
                   np.maximum(0.0, np.abs(grad) - alpha))
    return float(np.max(res)) if res.size else 0.0


def lasso_solve(gf,
                xtz,
                alpha,
                warm_start=None,
                tol=DEFAULT_TOL,
                max_iter=DEFAULT_MAX_ITER,
                trace=None):
    """Minimize beta^T Q beta - 2 <xtz, beta> + alpha ||beta||_1.

    Fixed-step proximal gradient with step 1/L, L = 2 max(gamma). Stops
    once both the relative objective change and the KKT residual fall
    below ``tol``.

    Args:
        gf (GramFactorization): Factorization of X^T X.
        xtz (numpy.ndarray): The vector X^T z.
        alpha (float): Positive l1 weight.
        warm_start (numpy.ndarray, optional): Starting coefficients.
        tol (float): Convergence tolerance.
        max_iter (int): Iteration cap; hitting it flags the result.
        trace (list, optional): When given, objective values are appended.

    Returns:
        LinearCoefficients
    """
    if not alpha > 0:
        raise ValueError(f'Lasso penalty must be positive, got {alpha}')
    if not tol > 0:
        raise ValueError(f'Tolerance must be positive, got {tol}')
    xtz = np.asarray(xtz, dtype=np.float64)
    if warm_start is None:
        beta = np.zeros(gf.dim)
    else:
        beta = np.array(warm_start, dtype=np.float64)
        assert beta.shape == (gf.dim, ), \
            f'Warm start has shape {beta.shape}, expected ({gf.dim},)'

    lip = gf.lipschitz
    if lip <= 0:
        # X^T X == 0: the minimizer is beta = 0 for any alpha > 0
        beta = np.zeros(gf.dim)
        return LinearCoefficients(beta=beta, penalty='l1', alpha=float(alpha))

    obj = lasso_objective(gf, xtz, alpha, beta)
    if trace is not None:
        trace.append(obj)
    rel_change = np.inf
    kkt = lasso_kkt_residual(gf, xtz, alpha, beta)
    n_iter = 0
    converged = False
    while n_iter < max_iter:
        grad = 2.0 * (gf.q @ beta) - 2.0 * xtz
        beta = soft_threshold(beta - grad / lip, alpha / lip)
        beta = np.atleast_1d(beta)
        new_obj = lasso_objective(gf, xtz, alpha, beta)
        n_iter += 1
        rel_change = abs(obj - new_obj) / max(1.0, abs(obj))
        obj = new_obj
        if trace is not None:
            trace.append(obj)
        kkt = lasso_kkt_residual(gf, xtz, alpha, beta)
        if max(rel_change, kkt) < tol:
            converged = True
            break
    if not converged:
        warn('Lasso reached {} iterations without converging '
             '(alpha={:.4g}, kkt={:.3g})', max_iter, alpha, kkt)
    else:
        debug('Lasso converged in {} iterations (alpha={:.4g})', n_iter, alpha)
    return LinearCoefficients(beta=beta,
                              penalty='l1',
                              alpha=float(alpha),
                              n_iter=n_iter,
                              rel_change=float(rel_change),
                              kkt_residual=kkt,
                              converged=converged)


def lasso_alpha_max(xtz):
    """Smallest alpha for which beta = 0 is optimal."""
    return 2.0 * float(np.max(np.abs(xtz))) if np.size(xtz) else 0.0


__all__ = [
    'soft_threshold', 'lasso_objective', 'lasso_kkt_residual', 'lasso_solve',
    'lasso_alpha_max', 'DEFAULT_TOL', 'DEFAULT_MAX_ITER'
]
