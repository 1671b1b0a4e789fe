"""Synthetic data from the hierarchical session-length models.

``means`` draws user effects plus noise, ``linear`` adds a linear covariate
term and ``corrupted`` additionally corrupts a fraction of the sessions. The
event-log generator produces tab-separated listening logs in the last.fm
layout for end-to-end runs.
"""
import dataclasses

import numpy as np
import pandas as pd
from sessionlen.data.sessions import SessionDataset, _typed

SIM_KINDS = ('means', 'linear', 'corrupted', 'events')

_DAY = 86400.0


@dataclasses.dataclass(frozen=True)
class SimulatedData:
    """Row-aligned synthetic sessions and the parameters that generated them.

    ``y`` holds log lengths; row k belongs to ``user_ids[k]`` and is that
    user's ``session_index[k]``-th session.
    """
    x: np.ndarray
    y: np.ndarray
    user_ids: np.ndarray
    session_index: np.ndarray
    beta: np.ndarray
    user_effects: pd.Series
    corruption: np.ndarray
    mean: float
    sigma0_sq: float
    sigma1_sq: float

    @property
    def n_rows(self):
        return len(self.y)

    def select(self, mask):
        return dataclasses.replace(self,
                                   x=self.x[mask],
                                   y=self.y[mask],
                                   user_ids=self.user_ids[mask],
                                   session_index=self.session_index[mask],
                                   corruption=self.corruption[mask])

    def sessions(self):
        """The rows as a SessionDataset, one day between a user's sessions."""
        frame = pd.DataFrame({
            'user_id': self.user_ids,
            'start_time': self.session_index * _DAY,
            'raw_length': np.exp(self.y),
            'log_length': self.y,
            'session_index': self.session_index,
        })
        return SessionDataset(_typed(frame))

    def to_frame(self):
        frame = pd.DataFrame(self.x,
                             columns=[f'x{j + 1}' for j in range(self.x.shape[1])])
        frame.insert(0, 'session_index', self.session_index)
        frame.insert(0, 'user_id', self.user_ids)
        frame['log_length'] = self.y
        frame['corruption'] = self.corruption
        return frame


def _session_counts(rng, n_users, n_sessions):
    if np.ndim(n_sessions) == 0:
        return np.full(n_users, int(n_sessions))
    lo, hi = n_sessions
    return rng.integers(lo, hi + 1, size=n_users)


def simulate_sessions(n_users,
                      n_sessions=(1, 5),
                      sigma0_sq=1.0,
                      sigma1_sq=1.0,
                      mean=6.0,
                      dim=0,
                      beta=None,
                      corruption_rate=0.0,
                      corruption_scale=5.0,
                      seed=0):
    """Draw log lengths y_ij = mean + x_ij^T beta + mu_i + s_ij + noise.

    Args:
        n_users (int): Number of users.
        n_sessions (int or Tuple[int, int]): Sessions per user, fixed or drawn
            uniformly from the inclusive range.
        sigma0_sq (float): Variance of the user effects mu_i.
        sigma1_sq (float): Variance of the per-session noise.
        mean (float): Global mean of the log lengths.
        dim (int): Number of standard normal covariates.
        beta (numpy.ndarray, optional): Covariate coefficients; drawn from
            N(0, 1) when omitted and ``dim > 0``.
        corruption_rate (float): Fraction of sessions shifted upward by
            ``corruption_scale * sigma1``.
        seed (int): Random seed.

    Returns:
        SimulatedData
    """
    assert n_users >= 1, f'n_users must be positive, got {n_users}'
    assert 0 <= corruption_rate < 1, \
        f'corruption_rate must lie in [0, 1), got {corruption_rate}'
    rng = np.random.default_rng(seed)
    counts = _session_counts(rng, n_users, n_sessions)
    width = len(str(n_users))
    users = np.array([f'u{i:0{width}d}' for i in range(n_users)], dtype=object)
    mu = rng.normal(0.0, np.sqrt(sigma0_sq), size=n_users)
    codes = np.repeat(np.arange(n_users), counts)
    n = len(codes)
    session_index = np.concatenate([np.arange(1, c + 1) for c in counts])
    if beta is None:
        beta = rng.normal(0.0, 1.0, size=dim)
    beta = np.asarray(beta, dtype=np.float64)
    x = rng.normal(0.0, 1.0, size=(n, len(beta)))
    noise = rng.normal(0.0, np.sqrt(sigma1_sq), size=n)
    corrupted = rng.random(n) < corruption_rate
    s = np.where(corrupted, corruption_scale * np.sqrt(sigma1_sq), 0.0)
    y = mean + x @ beta + mu[codes] + s + noise
    return SimulatedData(x=x,
                         y=y,
                         user_ids=users[codes],
                         session_index=session_index.astype(np.int64),
                         beta=beta,
                         user_effects=pd.Series(mu, index=users),
                         corruption=s,
                         mean=float(mean),
                         sigma0_sq=float(sigma0_sq),
                         sigma1_sq=float(sigma1_sq))


def simulate_event_log(n_users,
                       n_sessions=(4, 30),
                       start='2009-01-01T00:00:00Z',
                       seed=0):
    """A last.fm-style listening log with a per-user tracks-per-session rate.

    Sessions are separated by at least two hours of silence and tracks within
    a session by two to six minutes, so a 30 minute gap recovers them.

    Returns:
        pandas.DataFrame: Columns user_id, timestamp (ISO-8601 UTC),
        artist_id, artist_name, track_id, track_name.
    """
    rng = np.random.default_rng(seed)
    origin = pd.Timestamp(start).timestamp()
    counts = _session_counts(rng, n_users, n_sessions)
    width = len(str(n_users))
    rows = []
    for i in range(n_users):
        user = f'user_{i:0{width}d}'
        rate = np.exp(rng.normal(np.log(8.0), 0.6))
        t = origin + rng.uniform(0, _DAY)
        for _ in range(counts[i]):
            n_tracks = 1 + rng.poisson(rate)
            gaps = rng.uniform(120.0, 360.0, size=n_tracks)
            gaps[0] = 0.0
            for stamp in t + np.cumsum(gaps):
                track = int(rng.integers(0, 500))
                rows.append((user, float(stamp), f'artist-{track % 97:03d}',
                             f'Artist {track % 97}', f'track-{track:03d}',
                             f'Track {track}'))
            t = stamp + 7200.0 + rng.exponential(_DAY)
    frame = pd.DataFrame.from_records(rows,
                                      columns=[
                                          'user_id', 'seconds', 'artist_id',
                                          'artist_name', 'track_id',
                                          'track_name'
                                      ])
    stamps = pd.to_datetime(frame.pop('seconds').round(), unit='s', utc=True)
    frame.insert(1, 'timestamp', stamps.dt.strftime('%Y-%m-%dT%H:%M:%SZ'))
    return frame


def write_event_log(frame, path):
    frame.to_csv(path, sep='\t', header=False, index=False)


__all__ = [
    'SIM_KINDS', 'SimulatedData', 'simulate_sessions', 'simulate_event_log',
    'write_event_log'
]
