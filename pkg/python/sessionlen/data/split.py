import dataclasses
import math
import os
from typing import Tuple

import numpy as np
from sessionlen._logging import info
from sessionlen.data.sessions import SessionDataset
from sessionlen.exception import SplitError

PARTS = ('train', 'validation', 'test')
REPORT_FILE = 'split_report.txt'


@dataclasses.dataclass(frozen=True)
class SplitDataset:
    train: SessionDataset
    validation: SessionDataset
    test: SessionDataset
    fractions: Tuple[float, float, float]
    n_removed_validation: int = 0
    n_removed_test: int = 0

    def part(self, name):
        if name not in PARTS:
            raise SplitError(f'Unknown split part {name!r}, expected {PARTS}')
        return getattr(self, name)

    def train_valid(self):
        """The combined train + validation set used to refit the winner."""
        return self.train.concat(self.validation).with_reindexed_sessions()

    def history_for(self, name):
        """Sessions that precede ``name`` chronologically, for lag features."""
        if name == 'train':
            return SessionDataset.empty()
        if name == 'validation':
            return self.train
        return self.train_valid()

    def report_text(self):
        return (f'fractions: {",".join(f"{f:g}" for f in self.fractions)}\n'
                f'train_sessions: {self.train.n_sessions}\n'
                f'validation_sessions: {self.validation.n_sessions}\n'
                f'test_sessions: {self.test.n_sessions}\n'
                f'removed_validation_sessions: {self.n_removed_validation}\n'
                f'removed_test_sessions: {self.n_removed_test}\n')


def _split_sizes(n, fractions):
    # ceil with slack so that 0.7 * 10 does not become 8
    n_train = min(n, math.ceil(fractions[0] * n - 1e-9))
    n_valid = min(n - n_train, math.ceil(fractions[1] * n - 1e-9))
    return n_train, n_valid


def chronological_split(ds, fractions=(0.8, 0.1, 0.1)):
    """Split sessions by start time into train / validation / test.

    The first ``ceil(f_train * N0)`` sessions in time go to train, the next
    ``ceil(f_valid * N0)`` to validation and the rest to test; ties on
    start_time are broken by ``(user_id, session_index)``. Validation and test
    sessions of users with no training session are removed.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise SplitError(f'Split fractions must be three non-negative numbers, '
                         f'got {fractions}')
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise SplitError(f'Split fractions must sum to 1, got {fractions}')
    if ds.n_sessions == 0:
        raise SplitError('Cannot split an empty dataset')

    frame = ds.frame.sort_values(['start_time', 'user_id', 'session_index'],
                                 kind='stable').reset_index(drop=True)
    n_train, n_valid = _split_sizes(len(frame), fractions)
    train = frame.iloc[:n_train]
    valid = frame.iloc[n_train:n_train + n_valid]
    test = frame.iloc[n_train + n_valid:]

    train_users = set(train['user_id'])
    valid_kept = valid[valid['user_id'].isin(train_users)]
    test_kept = test[test['user_id'].isin(train_users)]
    n_removed_valid = len(valid) - len(valid_kept)
    n_removed_test = len(test) - len(test_kept)

    for name, part in (('train', train), ('validation', valid_kept),
                       ('test', test_kept)):
        if len(part) == 0:
            raise SplitError(f'Empty split: the {name} part has no sessions')

    train_ds = SessionDataset(train, check=False).with_reindexed_sessions()
    split = SplitDataset(
        train=train_ds,
        validation=_reindex_after(train_ds, valid_kept),
        test=_reindex_after(train_ds, test_kept),
        fractions=fractions,
        n_removed_validation=n_removed_valid,
        n_removed_test=n_removed_test)
    info('Split {} sessions into {}/{}/{} (removed {} validation, {} test)',
         ds.n_sessions, split.train.n_sessions, split.validation.n_sessions,
         split.test.n_sessions, n_removed_valid, n_removed_test)
    return split


def _reindex_after(train, part_frame):
    """Number ``part_frame`` sessions after each user's training sessions."""
    offset = train.counts
    part = SessionDataset(part_frame, check=False).with_reindexed_sessions()
    frame = part.frame.copy()
    frame['session_index'] += frame['user_id'].map(offset).fillna(0).astype(
        np.int64).to_numpy()
    return SessionDataset(frame, check=False)


def write_split(split, directory):
    """Write ``train.csv``, ``validation.csv``, ``test.csv`` and the report."""
    os.makedirs(directory, exist_ok=True)
    for name in PARTS:
        split.part(name).to_csv(os.path.join(directory, f'{name}.csv'))
    with open(os.path.join(directory, REPORT_FILE), 'w',
              encoding='utf-8') as f:
        f.write(split.report_text())


def _read_report(directory):
    values = {}
    path = os.path.join(directory, REPORT_FILE)
    if not os.path.exists(path):
        return values
    with open(path, encoding='utf-8') as f:
        for line in f:
            if ':' in line:
                key, value = line.split(':', 1)
                values[key.strip()] = value.strip()
    return values


def read_split(directory):
    """Reload a split written by :func:`write_split`."""
    parts = {}
    for name in PARTS:
        path = os.path.join(directory, f'{name}.csv')
        if not os.path.exists(path):
            raise SplitError(f'Split directory {directory} lacks {name}.csv')
        parts[name] = SessionDataset.read_csv(path)
    report = _read_report(directory)
    try:
        fractions = tuple(
            float(f) for f in report.get('fractions', '').split(',') if f)
    except ValueError:
        raise SplitError(f'Bad fractions in {REPORT_FILE}') from None
    return SplitDataset(
        train=parts['train'],
        validation=parts['validation'],
        test=parts['test'],
        fractions=fractions or (math.nan, ) * 3,
        n_removed_validation=int(report.get('removed_validation_sessions',
                                            0)),
        n_removed_test=int(report.get('removed_test_sessions', 0)))


__all__ = [
    'SplitDataset', 'chronological_split', 'write_split', 'read_split',
    'PARTS', 'REPORT_FILE'
]
