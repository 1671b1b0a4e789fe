import dataclasses
from typing import Optional

import numpy as np
import pandas as pd
from sessionlen._logging import debug, info
from sessionlen.exception import IngestError

SESSION_COLUMNS = ['user_id', 'start_time', 'raw_length', 'log_length',
                   'session_index']
CSV_HEADER = ['user_id', 'start_time', 'raw_length_s', 'log_length',
              'session_index']


@dataclasses.dataclass(frozen=True)
class Session:
    user_id: str
    start_time: float
    raw_length: float
    log_length: float
    session_index: int


class SessionDataset:
    """Sessions grouped by user, the y / y-tilde store.

    Rows are ordered by ``(user_id, start_time)``. Besides the session columns
    the frame may carry user-level categoricals attached with
    :func:`attach_user_attributes`. Treat instances as immutable.
    """
    def __init__(self, frame, check=True):
        frame = frame.sort_values(['user_id', 'start_time', 'session_index'],
                                  kind='stable').reset_index(drop=True)
        self._frame = frame
        if check:
            self._check()

    def _check(self):
        frame = self._frame
        missing = [c for c in SESSION_COLUMNS if c not in frame.columns]
        assert not missing, f'Session frame lacks columns {missing}'
        raw = frame['raw_length'].to_numpy()
        assert np.all(raw > 0), 'Session raw lengths must be positive'
        assert np.allclose(np.exp(frame['log_length'].to_numpy()),
                           raw,
                           rtol=1e-12,
                           atol=0), 'log_length must equal ln(raw_length)'

    @classmethod
    def from_sessions(cls, sessions):
        frame = pd.DataFrame([dataclasses.astuple(s) for s in sessions],
                             columns=SESSION_COLUMNS)
        return cls(_typed(frame))

    @classmethod
    def empty(cls):
        return cls(_typed(pd.DataFrame(columns=SESSION_COLUMNS)), check=False)

    @property
    def frame(self):
        return self._frame

    @property
    def n_sessions(self):
        """N0, the total number of sessions."""
        return len(self._frame)

    def __len__(self):
        return len(self._frame)

    @property
    def n_users(self):
        return int(self._frame['user_id'].nunique())

    @property
    def counts(self):
        """Per-user session counts n_i, indexed by user_id."""
        return self._frame.groupby('user_id', sort=True).size()

    @property
    def users(self):
        return np.asarray(sorted(self._frame['user_id'].unique()), dtype=object)

    @property
    def user_ids(self):
        return self._frame['user_id'].to_numpy()

    @property
    def raw_lengths(self):
        return self._frame['raw_length'].to_numpy(dtype=np.float64)

    @property
    def log_lengths(self):
        return self._frame['log_length'].to_numpy(dtype=np.float64)

    @property
    def start_times(self):
        return self._frame['start_time'].to_numpy(dtype=np.float64)

    def attribute_columns(self):
        return [c for c in self._frame.columns if c not in SESSION_COLUMNS]

    def __iter__(self):
        for row in self._frame[SESSION_COLUMNS].itertuples(index=False):
            yield Session(row.user_id, float(row.start_time),
                          float(row.raw_length), float(row.log_length),
                          int(row.session_index))

    def select_users(self, users):
        mask = self._frame['user_id'].isin(set(users))
        return SessionDataset(self._frame[mask], check=False)

    def concat(self, other):
        frame = pd.concat([self._frame, other.frame], ignore_index=True)
        return SessionDataset(frame, check=False)

    def with_reindexed_sessions(self):
        """Recompute 1-based session_index in chronological order per user."""
        frame = self._frame.copy()
        frame['session_index'] = frame.groupby('user_id').cumcount() + 1
        return SessionDataset(frame, check=False)

    def to_csv(self, path):
        frame = self._frame.rename(columns={'raw_length': 'raw_length_s'})
        columns = CSV_HEADER + self.attribute_columns()
        frame[columns].to_csv(path, index=False, float_format='%.17g')

    @classmethod
    def read_csv(cls, path):
        try:
            frame = pd.read_csv(path, dtype={'user_id': str})
        except (OSError, pd.errors.ParserError,
                pd.errors.EmptyDataError) as e:
            raise IngestError(f'Cannot read sessions file {path}: {e}') from None
        missing = [c for c in CSV_HEADER if c not in frame.columns]
        if missing:
            raise IngestError(f'Sessions file {path} lacks columns {missing}')
        frame = frame.rename(columns={'raw_length_s': 'raw_length'})
        return cls(_typed(frame))

    def __repr__(self):
        return (f'SessionDataset(n_users={self.n_users}, '
                f'n_sessions={self.n_sessions})')


def _typed(frame):
    frame = frame.copy()
    frame['user_id'] = frame['user_id'].astype(str)
    for column in ('start_time', 'raw_length', 'log_length'):
        frame[column] = frame[column].astype(np.float64)
    frame['session_index'] = frame['session_index'].astype(np.int64)
    return frame


@dataclasses.dataclass
class SessionizeReport:
    n_events: int
    n_sessions: int
    n_dropped: int
    gap_threshold: float
    min_session_length: float

    def to_text(self):
        return (f'events: {self.n_events}\n'
                f'sessions: {self.n_sessions}\n'
                f'dropped_short_sessions: {self.n_dropped}\n'
                f'gap_threshold_s: {self.gap_threshold:g}\n'
                f'min_session_length_s: {self.min_session_length:g}\n')


def sessionize(events, gap_threshold=1800.0, min_session_length=1.0):
    """Cut each user's event stream into sessions.

    A gap strictly greater than ``gap_threshold`` seconds starts a new
    session; a session lasts from its first to its last event. Sessions
    shorter than ``min_session_length`` seconds are dropped, and so are
    zero-length sessions whatever the minimum, since their log is undefined.

    Args:
        events (EventLog): Events sorted ascending in time per user.
        gap_threshold (float): Inactivity gap in seconds.
        min_session_length (float): Shortest kept session in seconds.

    Returns:
        Tuple[SessionDataset, SessionizeReport]
    """
    if gap_threshold <= 0:
        raise ValueError(f'gap_threshold must be positive, got {gap_threshold}')
    frame = events.frame[['user_id', 'timestamp']]
    gaps = frame.groupby('user_id', sort=False)['timestamp'].diff()
    starts = gaps.isna() | (gaps > gap_threshold)
    session_id = starts.cumsum()
    grouped = frame.groupby(session_id, sort=False)
    sessions = pd.DataFrame({
        'user_id': grouped['user_id'].first(),
        'start_time': grouped['timestamp'].min(),
        'raw_length': grouped['timestamp'].max() - grouped['timestamp'].min(),
    }).reset_index(drop=True)

    raw = sessions['raw_length']
    keep = (raw > 0) & (raw >= min_session_length)
    n_dropped = int((~keep).sum())
    sessions = sessions[keep].copy()
    sessions['log_length'] = np.log(sessions['raw_length'].to_numpy(
        dtype=np.float64))
    sessions['session_index'] = sessions.groupby('user_id').cumcount() + 1
    ds = SessionDataset(_typed(sessions))

    report = SessionizeReport(n_events=len(frame),
                              n_sessions=ds.n_sessions,
                              n_dropped=n_dropped,
                              gap_threshold=float(gap_threshold),
                              min_session_length=float(min_session_length))
    debug('Sessionized with gap {}s: {} sessions, {} dropped', gap_threshold,
          report.n_sessions, n_dropped)
    info('Built {} sessions for {} users', ds.n_sessions, ds.n_users)
    return ds, report


def attach_user_attributes(ds, attributes: pd.DataFrame,
                           columns: Optional[list] = None):
    """Merge static per-user categoricals (gender, device, ...) into ``ds``."""
    if 'user_id' not in attributes.columns:
        raise IngestError('User attribute table needs a user_id column')
    attributes = attributes.copy()
    attributes['user_id'] = attributes['user_id'].astype(str)
    if columns is None:
        columns = [c for c in attributes.columns if c != 'user_id']
    attributes = attributes.drop_duplicates('user_id')[['user_id'] + columns]
    frame = ds.frame.drop(columns=[c for c in columns if c in ds.frame.columns])
    frame = frame.merge(attributes, on='user_id', how='left')
    for column in columns:
        frame[column] = frame[column].astype(object)
    return SessionDataset(frame, check=False)


def read_user_attributes(path):
    """Load a user attribute CSV; user ids are kept as strings."""
    try:
        return pd.read_csv(path, dtype={'user_id': str})
    except (OSError, UnicodeDecodeError, pd.errors.ParserError,
            pd.errors.EmptyDataError) as e:
        raise IngestError(f'Cannot read user attributes {path}: {e}') from None


__all__ = [
    'Session', 'SessionDataset', 'SessionizeReport', 'sessionize',
    'attach_user_attributes', 'read_user_attributes', 'SESSION_COLUMNS',
    'CSV_HEADER'
]
