import dataclasses
import math
from typing import List, Optional, Tuple

import numpy as np
from sessionlen._logging import debug, trace
from sessionlen.gbt.tree import RegressionTree, tree_fit


@dataclasses.dataclass(frozen=True)
class GbtParams:
    """Boosting hyperparameters.

    ``patience`` enables early stopping: a ``validation_fraction`` share of
    the rows, drawn at random with ``seed``, is held out and boosting stops
    once its squared error has not improved for ``patience`` rounds. The
    model is then truncated to the best round.
    """
    n_trees: int = 100
    max_depth: int = 6
    learning_rate: float = 0.1
    min_samples_leaf: int = 1
    patience: Optional[int] = None
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        assert self.n_trees >= 0, f'n_trees must be >= 0, got {self.n_trees}'
        assert self.max_depth >= 0, \
            f'max_depth must be >= 0, got {self.max_depth}'
        assert 0 < self.learning_rate <= 1, \
            f'learning_rate must lie in (0, 1], got {self.learning_rate}'
        assert self.min_samples_leaf >= 1, \
            f'min_samples_leaf must be >= 1, got {self.min_samples_leaf}'
        assert self.patience is None or self.patience >= 1, \
            f'patience must be positive, got {self.patience}'
        assert 0 < self.validation_fraction < 1, \
            'validation_fraction must lie in (0, 1)'

    def to_dict(self):
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d):
        return GbtParams(**d)


@dataclasses.dataclass(frozen=True)
class GbtModel:
    base: float
    stages: Tuple[Tuple[RegressionTree, float], ...]
    n_features: int
    train_loss: Tuple[float, ...] = ()

    @property
    def n_stages(self):
        return len(self.stages)

    def feature_gain(self):
        """Total split gain per feature over all stages."""
        gains = np.zeros(self.n_features)
        for tree, eta in self.stages:
            split = tree.feature >= 0
            np.add.at(gains, tree.feature[split], eta * tree.gain[split])
        return gains

    def to_dict(self):
        return {
            'base': self.base,
            'n_features': self.n_features,
            'stages': [{
                'eta': eta,
                'tree': tree.to_dict()
            } for tree, eta in self.stages],
        }

    @staticmethod
    def from_dict(d):
        stages = tuple((RegressionTree.from_dict(s['tree']), float(s['eta']))
                       for s in d['stages'])
        return GbtModel(base=float(d['base']),
                        stages=stages,
                        n_features=int(d['n_features']))


def _accumulate(pred, x, stages):
    for tree, eta in stages:
        pred = pred + eta * tree.predict(x)
    return pred


def gbt_fit(x, z, params):
    """Least-squares gradient boosting.

    Args:
        x (numpy.ndarray or DesignMatrix): The n x d features.
        z (numpy.ndarray): Target vector.
        params (GbtParams): Hyperparameters.

    Returns:
        GbtModel
    """
    x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if len(z) == 0:
        raise ValueError('Cannot fit boosted trees on empty data')
    assert x.shape[0] == len(z), \
        f'Row mismatch: X has {x.shape[0]} rows, z has {len(z)}'

    held_out = None
    if params.patience is not None:
        n_hold = int(math.ceil(params.validation_fraction * len(z)))
        if 0 < n_hold < len(z):
            # rows are grouped by user; hold out a random subset, not the tail
            order = np.random.default_rng(params.seed).permutation(len(z))
            hold, keep = np.sort(order[:n_hold]), np.sort(order[n_hold:])
            held_out = (x[hold], z[hold])
            x, z = x[keep], z[keep]

    base = float(np.mean(z))
    pred = np.full(len(z), base)
    stages: List[Tuple[RegressionTree, float]] = []
    losses = [float(np.mean((z - pred)**2))]
    if held_out is not None:
        hold_pred = np.full(len(held_out[1]), base)
        best_hold = float(np.mean((held_out[1] - hold_pred)**2))
        best_round, stale = 0, 0

    for k in range(params.n_trees):
        tree = tree_fit(x, z - pred, params.max_depth,
                        params.min_samples_leaf)
        if tree.is_leaf:
            # residual means within every leaf are already zero
            debug('Boosting stopped at round {}: no split improves', k)
            break
        eta = params.learning_rate
        pred = pred + eta * tree.predict(x)
        stages.append((tree, eta))
        losses.append(float(np.mean((z - pred)**2)))
        trace('round {} train mse {:.6g}', k, losses[-1])
        if held_out is not None:
            hold_pred = hold_pred + eta * tree.predict(held_out[0])
            hold_loss = float(np.mean((held_out[1] - hold_pred)**2))
            if hold_loss < best_hold:
                best_hold, best_round, stale = hold_loss, len(stages), 0
            else:
                stale += 1
                if stale >= params.patience:
                    debug('Early stopping at round {}, best round {}', k,
                          best_round)
                    break

    if held_out is not None:
        stages = stages[:best_round]
        losses = losses[:best_round + 1]
    return GbtModel(base=base,
                    stages=tuple(stages),
                    n_features=x.shape[1],
                    train_loss=tuple(losses))


def gbt_predict(model, x):
    x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ValueError(f'Design width {x.shape[-1]} does not match the '
                         f'{model.n_features} features the model was fit on')
    return _accumulate(np.full(x.shape[0], model.base), x, model.stages)


__all__ = ['GbtParams', 'GbtModel', 'gbt_fit', 'gbt_predict']
