import dataclasses
from typing import Dict, Iterator, Optional

import numpy as np
import pandas as pd
from sessionlen._logging import info, warn
from sessionlen.exception import IngestError

LOG_FORMATS = ('iso', 'lastfm', 'epoch')


@dataclasses.dataclass(frozen=True)
class Event:
    user_id: str
    timestamp: float
    item_id: Optional[str] = None


class EventLog:
    """Parsed listening events, sorted by (user, timestamp).

    Ties on timestamp keep input order. ``frame`` has columns
    ``user_id``, ``timestamp`` (seconds since epoch, UTC) and ``item_id``.
    """
    def __init__(self, frame, n_lines=0, n_malformed=0):
        self._frame = frame.reset_index(drop=True)
        self.n_lines = n_lines
        self.n_malformed = n_malformed

    @classmethod
    def from_records(cls, records):
        """Build a log from ``(user_id, timestamp[, item_id])`` tuples."""
        rows = [tuple(r) + (None, ) * (3 - len(r)) for r in records]
        frame = pd.DataFrame(rows, columns=['user_id', 'timestamp', 'item_id'])
        frame['user_id'] = frame['user_id'].astype(str)
        frame['timestamp'] = frame['timestamp'].astype(np.float64)
        return cls(_sort_events(frame), n_lines=len(rows))

    @property
    def frame(self):
        return self._frame

    @property
    def n_events(self):
        return len(self._frame)

    def __len__(self):
        return len(self._frame)

    def users(self):
        return list(pd.unique(self._frame['user_id']))

    def __iter__(self) -> Iterator[Event]:
        for user_id, ts, item in self._frame.itertuples(index=False):
            yield Event(user_id, float(ts), item)

    def by_user(self) -> Dict[str, np.ndarray]:
        return {
            user: group['timestamp'].to_numpy()
            for user, group in self._frame.groupby('user_id', sort=True)
        }


def _sort_events(frame):
    # groupby keeps the original (stable, timestamp-sorted) order within a user
    frame = frame.sort_values('timestamp', kind='stable')
    return frame.sort_values('user_id', kind='stable')


def _parse_timestamps(values, log_format):
    if log_format == 'epoch':
        return pd.to_numeric(values, errors='coerce').astype(np.float64)
    parsed = pd.to_datetime(values, errors='coerce', utc=True, format='ISO8601')
    seconds = pd.Series(np.nan, index=values.index)
    ok = parsed.notna()
    seconds[ok] = (parsed[ok] - pd.Timestamp(0, tz='UTC')) / pd.Timedelta(
        seconds=1)
    return seconds.astype(np.float64)


def parse_event_log(path, log_format='iso', tolerance=0.05):
    """Read a tab-separated listening log.

    Each line is ``user_id \\t timestamp [\\t item_id ...]``; extra columns are
    ignored. ``log_format`` is ``'iso'`` (or ``'lastfm'``) for ISO-8601
    timestamps and ``'epoch'`` for numeric seconds.

    Args:
        path (str): Path of the UTF-8 log file.
        log_format (str): Timestamp format tag.
        tolerance (float): Largest accepted fraction of malformed lines.

    Returns:
        EventLog: Events grouped by user, ascending in time within a user.
    """
    if log_format not in LOG_FORMATS:
        raise IngestError(
            f'Unknown log format {log_format!r}, expected one of {LOG_FORMATS}'
        )
    try:
        with open(path, encoding='utf-8') as f:
            lines = f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise IngestError(f'Cannot read event log {path}: {e}') from None

    users, stamps, items = [], [], []
    n_lines = 0
    n_short = 0
    for line in lines:
        if not line.strip():
            continue
        n_lines += 1
        cols = line.split('\t')
        if len(cols) < 2 or not cols[0].strip() or not cols[1].strip():
            n_short += 1
            continue
        users.append(cols[0].strip())
        stamps.append(cols[1].strip())
        item = cols[2].strip() if len(cols) > 2 else ''
        items.append(item or None)

    frame = pd.DataFrame({
        'user_id': pd.Series(users, dtype=object),
        'timestamp': _parse_timestamps(pd.Series(stamps, dtype=object),
                                       log_format),
        'item_id': pd.Series(items, dtype=object),
    })
    bad = ~np.isfinite(frame['timestamp'].to_numpy()) | (frame['timestamp'] <
                                                         0).to_numpy()
    frame = frame[~bad]
    n_malformed = n_short + int(bad.sum())

    if len(frame) == 0:
        raise IngestError(f'Event log {path} has zero parseable lines')
    if n_malformed > tolerance * n_lines:
        raise IngestError(
            f'{n_malformed} of {n_lines} lines in {path} are malformed, '
            f'above the tolerance of {tolerance:.1%}')
    if n_malformed:
        warn('Skipped {} malformed lines out of {} in {}', n_malformed,
             n_lines, path)
    info('Parsed {} events of {} users from {}', len(frame),
         frame['user_id'].nunique(), path)
    return EventLog(_sort_events(frame), n_lines=n_lines,
                    n_malformed=n_malformed)


__all__ = ['Event', 'EventLog', 'LOG_FORMATS', 'parse_event_log']
