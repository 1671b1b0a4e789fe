import dataclasses

import numpy as np

LEAF = -1

# a split must beat this fraction of the node's residual energy
_MIN_GAIN_REL = 1e-10


@dataclasses.dataclass(frozen=True)
class RegressionTree:
    """A binary regression tree stored as flat node arrays.

    Node 0 is the root. For a split node ``feature[i] >= 0`` and rows with
    ``x[feature[i]] <= threshold[i]`` descend to ``left[i]``, the rest to
    ``right[i]``. Leaves have ``feature[i] == LEAF`` and predict
    ``value[i]``. ``gain`` holds the squared-error reduction of each split
    and ``n_samples`` the training rows reaching each node.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def is_leaf(self):
        return self.n_nodes == 1

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def leaves(self):
        return np.flatnonzero(self.feature == LEAF)

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                break
            r = rows[internal]
            n = node[internal]
            go_left = x[r, feat[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])
        return self.value[node]

    def to_dict(self):
        return {
            'feature': self.feature.tolist(),
            'threshold': self.threshold.tolist(),
            'left': self.left.tolist(),
            'right': self.right.tolist(),
            'value': self.value.tolist(),
            'gain': self.gain.tolist(),
            'n_samples': self.n_samples.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return RegressionTree(
            feature=np.asarray(d['feature'], dtype=np.int64),
            threshold=np.asarray(d['threshold'], dtype=np.float64),
            left=np.asarray(d['left'], dtype=np.int64),
            right=np.asarray(d['right'], dtype=np.int64),
            value=np.asarray(d['value'], dtype=np.float64),
            gain=np.asarray(d['gain'], dtype=np.float64),
            n_samples=np.asarray(d['n_samples'], dtype=np.int64))

    @staticmethod
    def leaf(value, n_samples=0):
        return RegressionTree(feature=np.array([LEAF], dtype=np.int64),
                              threshold=np.zeros(1),
                              left=np.array([LEAF], dtype=np.int64),
                              right=np.array([LEAF], dtype=np.int64),
                              value=np.array([float(value)]),
                              gain=np.zeros(1),
                              n_samples=np.array([n_samples],
                                                 dtype=np.int64))


def _best_split(x, r, min_samples_leaf):
    """Exact greedy search over all features for one node.

    Returns (gain, feature, threshold) or None. Ties keep the lowest
    feature index, then the lowest threshold.
    """
    n, d = x.shape
    if n < 2 * min_samples_leaf:
        return None
    centered = r - r.mean()
    total = float(np.dot(centered, centered))
    if total <= 0.0:
        return None
    tol = _MIN_GAIN_REL * max(total, float(np.dot(r, r)))
    n_left = np.arange(1, n)
    n_right = n - n_left
    size_ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)

    best = None
    best_gain = tol
    for j in range(d):
        order = np.argsort(x[:, j], kind='stable')
        xs = x[order, j]
        csum = np.cumsum(centered[order])
        cs, tail = csum[:-1], csum[-1]
        gains = cs**2 / n_left + (tail - cs)**2 / n_right - tail**2 / n
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        gains = np.where(valid, gains, -np.inf)
        # argmax returns the first maximum, i.e. the lowest threshold
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not xs[i] <= thr < xs[i + 1]:
                thr = xs[i]
            best_gain = float(gains[i])
            best = (best_gain, j, float(thr))
    return best


def tree_fit(x, r, depth, min_samples_leaf=1):
    """Fit a least-squares regression tree greedily, top-down.

    Args:
        x (numpy.ndarray): The n x d feature matrix.
        r (numpy.ndarray): Residuals to fit.
        depth (int): Maximum depth; 0 yields a single leaf.
        min_samples_leaf (int): Minimum training rows per leaf.

    Returns:
        RegressionTree
    """
    x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    assert x.shape[0] == len(r), \
        f'Row mismatch: X has {x.shape[0]} rows, r has {len(r)}'
    assert depth >= 0, f'depth must be non-negative, got {depth}'
    assert min_samples_leaf >= 1, \
        f'min_samples_leaf must be positive, got {min_samples_leaf}'
    if len(r) == 0:
        return RegressionTree.leaf(0.0)

    feature, threshold, left, right, value, gain, n_samples = (
        [], [], [], [], [], [], [])

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(r[rows])))
        gain.append(0.0)
        n_samples.append(len(rows))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(r))), np.arange(len(r)), 0)]
    while stack:
        node, rows, level = stack.pop()
        if level >= depth:
            continue
        split = _best_split(x[rows], r[rows], min_samples_leaf)
        if split is None:
            continue
        g, j, thr = split
        mask = x[rows, j] <= thr
        left_rows, right_rows = rows[mask], rows[~mask]
        feature[node] = j
        threshold[node] = thr
        gain[node] = g
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        # right first so the left subtree is expanded first
        stack.append((right[node], right_rows, level + 1))
        stack.append((left[node], left_rows, level + 1))

    return RegressionTree(feature=np.asarray(feature, dtype=np.int64),
                          threshold=np.asarray(threshold, dtype=np.float64),
                          left=np.asarray(left, dtype=np.int64),
                          right=np.asarray(right, dtype=np.int64),
                          value=np.asarray(value, dtype=np.float64),
                          gain=np.asarray(gain, dtype=np.float64),
                          n_samples=np.asarray(n_samples, dtype=np.int64))


__all__ = ['LEAF', 'RegressionTree', 'tree_fit']
