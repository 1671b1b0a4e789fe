import dataclasses
from typing import List, Tuple

import numpy as np
import pandas as pd
from sessionlen._logging import debug
from sessionlen.exception import FeatureError, SchemaMismatchError
from sessionlen.features.table import (NUMERIC, FeatureSchema,
                                       FeatureTable)


@dataclasses.dataclass(frozen=True)
class DesignMatrix:
    """Standardized covariates with the row -> (user_id, session_index) map."""
    values: np.ndarray
    user_ids: np.ndarray
    session_index: np.ndarray
    columns: Tuple[str, ...]

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_columns(self):
        return self.values.shape[1]

    def to_frame(self):
        frame = pd.DataFrame(self.values, columns=list(self.columns))
        frame.insert(0, 'session_index', self.session_index)
        frame.insert(0, 'user_id', self.user_ids)
        return frame

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')


def encode(table: FeatureTable, schema: FeatureSchema):
    """One-hot encode categoricals against ``schema``, dropping the first level.

    Returns the raw (unscaled) matrix and its column names. Levels absent from
    ``schema`` encode as all zeros.
    """
    blocks: List[np.ndarray] = []
    names: List[str] = []
    n = table.n_rows
    for spec in schema.features:
        values = table.frame[spec.name].to_numpy()
        if spec.kind == NUMERIC:
            blocks.append(values.astype(np.float64).reshape(n, 1))
            names.append(spec.name)
        else:
            for level in spec.levels[1:]:
                blocks.append((values == level).astype(np.float64).reshape(
                    n, 1))
                names.append(f'{spec.name}={level}')
    if not blocks:
        return np.zeros((n, 0)), names
    return np.hstack(blocks), names


@dataclasses.dataclass(frozen=True)
class Standardizer:
    schema: FeatureSchema
    columns: Tuple[str, ...]
    means: np.ndarray
    norms: np.ndarray
    dropped: Tuple[str, ...]

    @property
    def kept(self):
        return np.array([c not in self.dropped for c in self.columns])

    @property
    def output_columns(self):
        return tuple(c for c in self.columns if c not in self.dropped)

    def to_dict(self):
        return {
            'schema': self.schema.to_dict(),
            'schema_hash': self.schema.digest(),
            'columns': list(self.columns),
            'means': self.means.tolist(),
            'norms': self.norms.tolist(),
            'dropped': list(self.dropped),
        }

    @classmethod
    def from_dict(cls, d):
        schema = FeatureSchema.from_dict(d['schema'])
        if schema.digest() != d['schema_hash']:
            raise SchemaMismatchError('Standardizer schema hash mismatch')
        return cls(schema=schema,
                   columns=tuple(d['columns']),
                   means=np.asarray(d['means'], dtype=np.float64),
                   norms=np.asarray(d['norms'], dtype=np.float64),
                   dropped=tuple(d['dropped']))


def _transform(raw, kept, means, norms):
    return (raw[:, kept] - means[kept]) / norms[kept]


def _design(table, values, columns):
    return DesignMatrix(values=values,
                        user_ids=table.frame['user_id'].to_numpy(),
                        session_index=table.frame['session_index'].to_numpy(),
                        columns=tuple(columns))


def fit_standardizer(table: FeatureTable):
    """Center every encoded column and scale it to unit l2 norm.

    Zero-variance columns are dropped and recorded.

    Returns:
        Tuple[Standardizer, DesignMatrix]
    """
    raw, columns = encode(table, table.schema)
    if raw.shape[0] == 0:
        raise FeatureError('Cannot standardize an empty feature table')
    means = raw.mean(axis=0)
    norms = np.linalg.norm(raw - means, axis=0)
    scale = np.maximum(1.0, np.linalg.norm(raw, axis=0))
    constant = np.all(raw == raw[0], axis=0) | (norms <= 1e-12 * scale)
    dropped = tuple(c for c, drop in zip(columns, constant) if drop)
    if dropped:
        debug('Dropped zero-variance columns {}', list(dropped))
    if len(dropped) == len(columns):
        raise FeatureError('All feature columns have zero variance')
    norms = np.where(constant, 1.0, norms)
    std = Standardizer(schema=table.schema,
                       columns=tuple(columns),
                       means=means,
                       norms=norms,
                       dropped=dropped)
    return std, _design(table, _transform(raw, ~constant, means, norms),
                        std.output_columns)


def apply_standardizer(std: Standardizer, table: FeatureTable):
    """Transform ``table`` with the constants fitted on the training table."""
    if table.schema.names != std.schema.names or [
            f.kind for f in table.schema.features
    ] != [f.kind for f in std.schema.features]:
        raise SchemaMismatchError(
            f'Table features {table.schema.names} do not match the '
            f'standardizer features {std.schema.names}')
    raw, columns = encode(table, std.schema)
    assert tuple(columns) == std.columns, 'Encoded columns drifted'
    return _design(table, _transform(raw, std.kept, std.means, std.norms),
                   std.output_columns)


__all__ = [
    'DesignMatrix', 'Standardizer', 'encode', 'fit_standardizer',
    'apply_standardizer'
]
