import math
import os

import numpy as np
import pandas as pd
import pytest

import sessionlen as sl
import sessionlen.tuning.experiment as experiment_module

DATA = os.path.join(os.path.dirname(__file__), 'data')

SMALL_GRID = {
    'n_lambdas': '3',
    'n_alphas': '4',
    'n_deltas': '4',
    'gbt_n_trees': '5',
    'gbt_depths': '2',
    'gbt_learning_rates': '0.3',
}


def _holdout_split(ds):
    """Last session of each user to test, the one before to validation."""
    frame = ds.frame
    from_end = frame.groupby('user_id').cumcount(ascending=False)
    parts = [
        sl.SessionDataset(frame[from_end >= 2], check=False),
        sl.SessionDataset(frame[from_end == 1], check=False),
        sl.SessionDataset(frame[from_end == 0], check=False),
    ]
    return sl.SplitDataset(*parts, fractions=(math.nan, ) * 3)


def _toy_split():
    log = sl.parse_event_log(os.path.join(DATA, 'toy_events.tsv'))
    ds, _ = sl.sessionize(log)
    return sl.chronological_split(ds, (0.8, 0.1, 0.1))


@pytest.mark.parametrize('seed', [0])
def test_model1_beats_baseline_across_seeds(seed):
    config = sl.RunConfig()
    wins = 0
    for k in range(20):
        data = sl.simulate_sessions(300, n_sessions=(3, 12), seed=seed + k)
        split = _holdout_split(data.sessions())
        result = sl.run_experiment(split, 'model1', config)
        wins += result.report.normalized_mae < 1.0
    assert wins >= 19


def test_model1_gain_largest_for_light_users():
    data = sl.simulate_sessions(3000, n_sessions=(3, 30), seed=7)
    split = _holdout_split(data.sessions())
    result = sl.run_experiment(split, 'model1', sl.RunConfig())
    groups = result.report.breakdown.normalized
    assert groups['<q10'] is not None and groups['>q20'] is not None
    assert groups['<q10'] < groups['>q20'] < 1.0
    assert groups['<q10'] <= groups['<q20']


def test_baseline_normalizes_to_one():
    data = sl.simulate_sessions(100, n_sessions=(3, 6), seed=1)
    split = _holdout_split(data.sessions())
    result = sl.run_experiment(split, 'baseline', sl.RunConfig())
    assert result.report.normalized_mae == 1.0
    assert result.grid is None
    assert result.importance() is None


def _fit_data(x, y, users):
    return sl.FitData(design=x,
                      log_lengths=y,
                      raw_lengths=np.exp(y),
                      user_ids=users)


def _three_way(data, clean_y):
    """Rows split per user: last to test, second last to validation."""
    from_end = pd.Series(data.session_index).groupby(
        data.user_ids).transform('max').to_numpy() - data.session_index
    masks = (from_end >= 2, from_end == 1, from_end == 0)
    parts = []
    for i, mask in enumerate(masks):
        y = data.y[mask] if i == 0 else clean_y[mask]
        parts.append(_fit_data(data.x[mask], y, data.user_ids[mask]))
    return parts


def _tuned_test_mae(tag, train, valid, test, config):
    family = sl.get_family(tag)
    vc = sl.variance_components_from_arrays(train.log_lengths, train.user_ids)
    grid = sl.default_grid(family, config, vc, train, vc.global_mean)
    result = sl.grid_search(family, grid, train, valid, vc.global_mean)
    both = sl.FitData(design=np.vstack([train.design, valid.design]),
                      log_lengths=np.r_[train.log_lengths, valid.log_lengths],
                      raw_lengths=np.r_[train.raw_lengths, valid.raw_lengths],
                      user_ids=np.r_[train.user_ids, valid.user_ids])
    vc = sl.variance_components_from_arrays(both.log_lengths, both.user_ids)
    fitted = sl.fit_point(family, result.best, both, vc.global_mean)
    preds = sl.predict_seconds_many(fitted, test.design, test.user_ids)
    return result, sl.mae(preds, test.raw_lengths)


def test_covariates_help():
    data = sl.simulate_sessions(300,
                                n_sessions=(3, 8),
                                dim=4,
                                beta=[0.6, -0.4, 0.3, 0.0],
                                seed=3)
    train, valid, _ = _three_way(data, data.y)
    config = sl.config_from_dict(SMALL_GRID)
    vc = sl.variance_components_from_arrays(train.log_lengths, train.user_ids)
    maes = {}
    for tag in ('model1', 'model2-l2'):
        family = sl.get_family(tag)
        grid = sl.default_grid(family, config, vc, train, vc.global_mean)
        maes[tag] = sl.grid_search(family, grid, train, valid,
                                   vc.global_mean).best_mae
    assert maes['model2-l2'] < maes['model1']


def test_robust_link_resists_corrupted_training_rows():
    config = sl.config_from_dict(SMALL_GRID)
    wins = 0
    for seed in range(20):
        data = sl.simulate_sessions(200,
                                    n_sessions=(4, 10),
                                    dim=3,
                                    corruption_rate=0.05,
                                    corruption_scale=5.0,
                                    seed=seed)
        train, valid, test = _three_way(data, data.y - data.corruption)
        _, robust = _tuned_test_mae('model3-l2', train, valid, test, config)
        _, plain = _tuned_test_mae('model2-l2', train, valid, test, config)
        wins += robust <= plain
    assert wins >= 18


def test_test_part_is_only_used_after_selection(monkeypatch):
    split = _toy_split()
    events = []
    grid_search = experiment_module.grid_search
    train_model = experiment_module.train_model
    evaluate_model = experiment_module.evaluate_model

    def recording_grid_search(family, grid, train, valid, *args, **kwargs):
        assert len(train.log_lengths) == split.train.n_sessions
        assert len(valid.log_lengths) == split.validation.n_sessions
        events.append('select')
        return grid_search(family, grid, train, valid, *args, **kwargs)

    def recording_train_model(*args, **kwargs):
        events.append('refit')
        return train_model(*args, **kwargs)

    def recording_evaluate_model(model, baseline, test, *args, **kwargs):
        assert test is split.test
        events.append('evaluate')
        return evaluate_model(model, baseline, test, *args, **kwargs)

    monkeypatch.setattr(experiment_module, 'grid_search',
                        recording_grid_search)
    monkeypatch.setattr(experiment_module, 'train_model',
                        recording_train_model)
    monkeypatch.setattr(experiment_module, 'evaluate_model',
                        recording_evaluate_model)
    config = sl.config_from_dict(SMALL_GRID)
    sl.run_experiment(split, 'model2-l2', config)
    assert events == ['select', 'refit', 'evaluate']


def test_compare_families_on_toy_log():
    split = _toy_split()
    config = sl.config_from_dict(SMALL_GRID)
    profiler = sl.FitProfiler()
    families = ('baseline', 'model1', 'ridge', 'model2-l1', 'model3-l2',
                'sigir2017')
    results = sl.compare_families(split, families, config, profiler)
    assert [r.family for r in results] == list(families)
    by_family = {r.family: r for r in results}
    assert by_family['baseline'].report.normalized_mae == 1.0
    for r in results:
        assert r.report.n_test == split.test.n_sessions
        assert r.report.mae_seconds > 0
        assert profiler.query(r.family, sl.FitProfiler.TRAIN).counter == 1
    ranked = by_family['ridge'].importance()
    names = by_family['ridge'].model.standardizer.output_columns
    assert sorted(n for n, _ in ranked) == sorted(names)
    assert by_family['sigir2017'].importance() is None
    assert by_family['model3-l2'].model.point.delta < math.inf
    assert 'validation_mae' in by_family['model3-l2'].model.diagnostics


@pytest.mark.parametrize('tag, point', [
    ('ridge', sl.GridPoint(alpha=1.0)),
    ('sigir2017',
     sl.GridPoint(gbt=sl.GbtParams(n_trees=3, max_depth=2, learning_rate=0.3))),
])
def test_families_without_user_effects_fit_single_session_users(tag, point):
    data = sl.simulate_sessions(40, n_sessions=2, seed=2)
    frame = data.sessions().frame
    first = sl.SessionDataset(frame[frame['session_index'] == 1], check=False)
    second = sl.SessionDataset(frame[frame['session_index'] == 2],
                               check=False)
    split = sl.SplitDataset(first, second, second, fractions=(math.nan, ) * 3)
    model = sl.train_model(tag, split.train, point)
    assert model.variance_components is None
    assert model.fitted.global_mean == pytest.approx(
        np.mean(split.train.log_lengths))
    assert np.all(model.predict_part(split.validation, split.train) > 0)
    grid = sl.tune(tag, split, sl.config_from_dict(SMALL_GRID))
    assert grid.best_mae > 0
    with pytest.raises(sl.ShrinkageError):
        sl.train_model('model1', split.train)


def test_trained_model_predicts_any_part():
    split = _toy_split()
    point = sl.GridPoint(lam=2.0, alpha=1.0, delta=1.0)
    model = sl.train_model('model3-l2', split.train, point)
    preds = model.predict_part(split.validation, split.train)
    assert preds.shape == (split.validation.n_sessions, )
    assert np.all(preds > 0)
    corrected = sl.train_model('model3-l2',
                               split.train,
                               point,
                               lognormal_correction=True)
    np.testing.assert_allclose(
        corrected.predict_part(split.validation, split.train),
        preds * math.exp(0.5 * model.variance_components.sigma1_sq))
    with pytest.raises(sl.ConfigError):
        sl.train_model('model2-l2', split.train)


def test_tune_skips_untuned_families():
    split = _toy_split()
    assert sl.tune('baseline', split, sl.RunConfig()) is None
    assert sl.tune('model1', split, sl.RunConfig()) is None
