import os
from tempfile import mkstemp

import numpy as np

# Helper functions
REL_EPS = 1e-9


def approx(expected, **kwargs):
    '''pytest.approx with a tighter default relative tolerance'''
    kwargs.setdefault('rel', REL_EPS)

    import pytest  # pylint: disable=C0415
    return pytest.approx(expected, **kwargs)


def make_temp_file(*args, **kwargs):
    '''Create a temporary file'''

    fd, name = mkstemp(*args, **kwargs)
    os.close(fd)
    return name


def random_design(n, d, seed=0):
    '''A standard normal n x d design and a response with unit noise'''
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = x @ rng.normal(size=d) + rng.normal(size=n)
    return x, y


def random_users(n_users, max_sessions, seed=0):
    '''Row-aligned user ids with 1..max_sessions rows per user'''
    rng = np.random.default_rng(seed)
    counts = rng.integers(1, max_sessions + 1, size=n_users)
    return np.repeat(np.array([f'u{i:03d}' for i in range(n_users)],
                              dtype=object), counts)


__all__ = [
    'approx', 'make_temp_file', 'random_design', 'random_users'
]
