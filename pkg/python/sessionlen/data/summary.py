import dataclasses

import numpy as np
from sessionlen.exception import SessionLenError


@dataclasses.dataclass(frozen=True)
class LengthStats:
    q25: float
    q50: float
    q75: float
    mean: float

    @classmethod
    def of(cls, values):
        q25, q50, q75 = np.quantile(values, [0.25, 0.5, 0.75])
        return cls(float(q25), float(q50), float(q75), float(np.mean(values)))


@dataclasses.dataclass(frozen=True)
class SessionSummary:
    raw: LengthStats
    log: LengthStats
    n_users: int
    n_sessions: int

    def to_text(self):
        lines = [f'{"":8s}{"25%":>8s}{"50%":>8s}{"75%":>8s}{"mean":>8s}']
        for name, stats in (('raw', self.raw), ('log', self.log)):
            lines.append(f'{name:8s}{stats.q25:8.3f}{stats.q50:8.3f}'
                         f'{stats.q75:8.3f}{stats.mean:8.3f}')
        lines.append(f'users: {self.n_users}  sessions: {self.n_sessions}')
        return '\n'.join(lines) + '\n'


def _normalized(values):
    top = np.max(values)
    if top <= 0:
        return np.zeros_like(values)
    return values / top


def summarize(ds):
    """Quantiles and mean of max-normalized raw and log session lengths."""
    if ds.n_sessions == 0:
        raise SessionLenError('Cannot summarize an empty dataset')
    return SessionSummary(raw=LengthStats.of(_normalized(ds.raw_lengths)),
                          log=LengthStats.of(_normalized(ds.log_lengths)),
                          n_users=ds.n_users,
                          n_sessions=ds.n_sessions)


__all__ = ['LengthStats', 'SessionSummary', 'summarize']
