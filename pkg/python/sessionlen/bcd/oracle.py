import dataclasses
from typing import Optional

import numpy as np
from sessionlen.exception import SchemaMismatchError
from sessionlen.gbt import GbtModel, GbtParams, gbt_fit, gbt_predict
from sessionlen.linalg import (DEFAULT_TOL, lasso_solve, precompute_gram,
                               ridge_solve)

ORACLE_KINDS = ('ridge', 'lasso', 'gbt', 'none')


@dataclasses.dataclass(frozen=True)
class OracleSpec:
    """Which covariate link the block-coordinate fit uses for f.

    ``none`` means f == 0, the pure user-effects model.
    """
    kind: str
    alpha: Optional[float] = None
    gbt: Optional[GbtParams] = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        assert self.kind in ORACLE_KINDS, \
            f'Unknown oracle kind {self.kind!r}, expected one of {ORACLE_KINDS}'
        if self.kind in ('ridge', 'lasso'):
            assert self.alpha is not None and self.alpha > 0, \
                f'{self.kind} oracle needs alpha > 0, got {self.alpha}'
        if self.kind == 'gbt':
            assert self.gbt is not None, 'gbt oracle needs GbtParams'

    @staticmethod
    def ridge(alpha):
        return OracleSpec('ridge', alpha=float(alpha))

    @staticmethod
    def lasso(alpha, tol=DEFAULT_TOL):
        return OracleSpec('lasso', alpha=float(alpha), tol=tol)

    @staticmethod
    def boosted(params):
        return OracleSpec('gbt', gbt=params)

    @staticmethod
    def none():
        return OracleSpec('none')

    @property
    def is_linear(self):
        return self.kind in ('ridge', 'lasso')

    def to_dict(self):
        return {
            'kind': self.kind,
            'alpha': self.alpha,
            'gbt': self.gbt.to_dict() if self.gbt is not None else None,
            'tol': self.tol,
        }

    @staticmethod
    def from_dict(d):
        gbt = GbtParams.from_dict(d['gbt']) if d.get('gbt') else None
        return OracleSpec(kind=d['kind'],
                          alpha=d.get('alpha'),
                          gbt=gbt,
                          tol=d.get('tol', DEFAULT_TOL))


class FittedOracle:
    """A fitted f: ``predict`` maps a standardized design to f values."""
    kind = None

    def predict(self, x):
        raise NotImplementedError

    def penalty(self):
        """The regularization term this fit adds to the joint objective."""
        return 0.0

    def to_dict(self):
        raise NotImplementedError

    @staticmethod
    def from_dict(spec, d):
        if spec.kind in ('ridge', 'lasso'):
            return LinearOracle(spec, np.asarray(d['beta'], dtype=np.float64))
        if spec.kind == 'gbt':
            return TreeOracle(GbtModel.from_dict(d['model']))
        return ZeroOracle(int(d['n_features']))


def _width(x):
    x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return x


class LinearOracle(FittedOracle):
    def __init__(self, spec, beta, diagnostics=None):
        self.spec = spec
        self.kind = spec.kind
        self.beta = beta
        self.diagnostics = diagnostics

    def predict(self, x):
        x = _width(x)
        if x.shape[1] != len(self.beta):
            raise SchemaMismatchError(
                f'Design has {x.shape[1]} columns, model expects '
                f'{len(self.beta)}')
        return x @ self.beta

    def penalty(self):
        if self.kind == 'lasso':
            return self.spec.alpha * float(np.sum(np.abs(self.beta)))
        return self.spec.alpha * float(np.dot(self.beta, self.beta))

    def to_dict(self):
        return {'beta': self.beta.tolist()}


class TreeOracle(FittedOracle):
    kind = 'gbt'

    def __init__(self, model):
        self.model = model

    def predict(self, x):
        x = _width(x)
        if x.shape[1] != self.model.n_features:
            raise SchemaMismatchError(
                f'Design has {x.shape[1]} columns, model expects '
                f'{self.model.n_features}')
        return gbt_predict(self.model, x)

    def to_dict(self):
        return {'model': self.model.to_dict()}


class ZeroOracle(FittedOracle):
    kind = 'none'

    def __init__(self, n_features):
        self.n_features = n_features

    def predict(self, x):
        return np.zeros(_width(x).shape[0])

    def to_dict(self):
        return {'n_features': self.n_features}


class OracleSolver:
    """Solves the f-block for a fixed design, caching X^T X for linear links.

    One solver is shared across every iteration of a fit and, for a tuning
    path, across grid points.
    """
    def __init__(self, x, gram=None):
        self.x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
        self._gram = gram

    @property
    def gram(self):
        if self._gram is None:
            self._gram = precompute_gram(self.x)
        return self._gram

    def fit(self, spec, z, warm_start=None):
        if spec.kind == 'none':
            return ZeroOracle(self.x.shape[1])
        if spec.kind == 'gbt':
            return TreeOracle(gbt_fit(self.x, z, spec.gbt))
        xtz = self.x.T @ z
        if spec.kind == 'ridge':
            coef = ridge_solve(self.gram, xtz, spec.alpha)
        else:
            coef = lasso_solve(self.gram,
                               xtz,
                               spec.alpha,
                               warm_start=warm_start,
                               tol=spec.tol)
        return LinearOracle(spec, coef.beta, coef)


__all__ = [
    'ORACLE_KINDS', 'OracleSpec', 'FittedOracle', 'LinearOracle',
    'TreeOracle', 'ZeroOracle', 'OracleSolver'
]
