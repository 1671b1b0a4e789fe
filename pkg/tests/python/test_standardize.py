import math

import numpy as np
import pandas as pd
import pytest

import sessionlen as sl
from sessionlen.features.table import CATEGORICAL, NUMERIC


def _table(**columns):
    n = len(next(iter(columns.values())))
    frame = pd.DataFrame({
        'user_id': [f'u{i}' for i in range(n)],
        'session_index': np.ones(n, dtype=np.int64),
    })
    specs = []
    for name, values in columns.items():
        frame[name] = values
        if isinstance(values[0], str):
            specs.append(
                sl.FeatureSpec(name, CATEGORICAL, tuple(sorted(set(values)))))
        else:
            specs.append(sl.FeatureSpec(name, NUMERIC))
    return sl.FeatureTable(frame, sl.FeatureSchema(tuple(specs)))


def test_standardize_by_hand():
    std, design = sl.fit_standardizer(_table(x=[1.0, 2.0, 3.0]))
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(design.values[:, 0], [-r, 0, r])
    assert design.columns == ('x', )
    assert std.norms[0] == pytest.approx(math.sqrt(2))


def test_constant_column_dropped():
    std, design = sl.fit_standardizer(
        _table(x=[1.0, 2.0, 3.0], c=[5.0, 5.0, 5.0]))
    assert std.dropped == ('c', )
    assert design.columns == ('x', )
    assert design.n_columns == 1


def test_all_constant_is_an_error():
    with pytest.raises(sl.FeatureError, match='zero variance'):
        sl.fit_standardizer(_table(c=[5.0, 5.0, 5.0]))


def test_two_level_categorical_single_indicator():
    std, design = sl.fit_standardizer(_table(g=['A', 'B', 'B', 'A']))
    assert design.columns == ('g=B', )
    raw, names = sl.encode(_table(g=['A', 'B', 'B', 'A']), std.schema)
    np.testing.assert_array_equal(raw[:, 0], [0, 1, 1, 0])


def test_training_columns_are_standardized():
    rng = np.random.default_rng(0)
    n = 200
    table = _table(a=rng.normal(3, 2, size=n),
                   b=rng.exponential(100, size=n),
                   device=list(rng.choice(['desktop', 'mobile', 'tv'],
                                          size=n)))
    std, design = sl.fit_standardizer(table)
    assert design.columns == ('a', 'b', 'device=mobile', 'device=tv')
    np.testing.assert_allclose(design.values.mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(design.values, axis=0),
                               1,
                               atol=1e-10)
    # applying to the source table is bit-identical
    again = sl.apply_standardizer(std, table)
    np.testing.assert_array_equal(again.values, design.values)
    # one-hot blocks sum to 0 or 1 per row
    raw, _ = sl.encode(table, std.schema)
    assert set(raw[:, 2:].sum(axis=1)) <= {0.0, 1.0}


def test_apply_centers_at_train_mean():
    std, _ = sl.fit_standardizer(_table(x=[1.0, 2.0, 6.0]))
    design = sl.apply_standardizer(std, _table(x=[3.0, 7.0]))
    assert design.values[0, 0] == 0.0
    assert design.values[1, 0] > 0


def test_unseen_level_encodes_as_zeros():
    train = _table(x=[1.0, 2.0, 3.0, 4.0],
                   device=['desktop', 'mobile', 'tv', 'mobile'])
    std, _ = sl.fit_standardizer(train)
    test = sl.FeatureTable(
        pd.DataFrame({
            'user_id': ['z'],
            'session_index': [1],
            'x': [2.5],
            'device': ['tablet'],
        }), train.schema)
    raw, names = sl.encode(test, std.schema)
    assert names == ['x', 'device=mobile', 'device=tv']
    np.testing.assert_array_equal(raw[0, 1:], [0, 0])
    design = sl.apply_standardizer(std, test)
    np.testing.assert_allclose(design.values[0, 1:], -std.means[1:] /
                               std.norms[1:])


def test_schema_mismatch():
    std, _ = sl.fit_standardizer(_table(x=[1.0, 2.0, 3.0]))
    with pytest.raises(sl.SchemaMismatchError):
        sl.apply_standardizer(std, _table(y=[1.0, 2.0, 3.0]))


def test_standardizer_dict_and_hash():
    std, _ = sl.fit_standardizer(
        _table(x=[1.0, 2.0, 3.0], c=[5.0, 5.0, 5.0]))
    back = sl.Standardizer.from_dict(std.to_dict())
    assert back.dropped == std.dropped
    np.testing.assert_array_equal(back.means, std.means)
    d = std.to_dict()
    d['schema_hash'] = '0' * 40
    with pytest.raises(sl.SchemaMismatchError, match='hash'):
        sl.Standardizer.from_dict(d)


def test_design_matrix_csv(tmp_path):
    _, design = sl.fit_standardizer(_table(x=[1.0, 2.0, 3.0]))
    path = str(tmp_path / 'design.csv')
    design.to_csv(path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['user_id', 'session_index', 'x']
    np.testing.assert_allclose(frame['x'], design.values[:, 0], rtol=1e-15)
