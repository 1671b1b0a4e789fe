import copy
import os
import sys
from contextlib import contextmanager
from unittest.mock import patch

import pytest
from sessionlen.main import SessionLenMain, run

import sessionlen as sl

DATA = os.path.join(os.path.dirname(__file__), 'data')
TOY = os.path.join(DATA, 'toy_events.tsv')

SMALL_GRID = '''
# keep the grids tiny
n_lambdas = 2
n_alphas = 3
n_deltas = 2
'''


@contextmanager
def patch_sys_argv_helper(custom_argv: list):
    """Temporarily patch sys.argv for testing."""
    try:
        cached_argv = copy.deepcopy(sys.argv)
        sys.argv = custom_argv
        yield sys.argv
    finally:
        sys.argv = cached_argv


def _run(*argv):
    with patch_sys_argv_helper(['sessionlen'] + [str(a) for a in argv]):
        cli = SessionLenMain(test_mode=True)
        return cli()


@pytest.fixture
def split_dir(tmp_path):
    sessions_dir = tmp_path / 'sessions'
    _run('sessionize', '-i', TOY, '--out', sessions_dir)
    out = tmp_path / 'split'
    _run('split', '-s', sessions_dir / 'sessions.csv', '--out', out)
    return out


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'small.conf'
    path.write_text(SMALL_GRID, encoding='utf-8')
    return path


def test_cli_exit_two_with_no_command_provided():
    with patch_sys_argv_helper(['sessionlen']):
        cli = SessionLenMain(test_mode=True)
        assert cli() == 2


def test_cli_exit_two_with_bogus_command_provided():
    with patch_sys_argv_helper(['sessionlen', 'bogus-command-not-registered']):
        cli = SessionLenMain(test_mode=True)
        assert cli() == 2


def test_cli_can_dispatch_commands_to_methods_correctly():
    with patch_sys_argv_helper(['sessionlen', 'split', '-s', 'x.csv']):
        with patch.object(SessionLenMain, 'split',
                          return_value=None) as mock_method:
            cli = SessionLenMain(test_mode=False)
            assert cli() == 0
            mock_method.assert_called_once_with(['-s', 'x.csv'])


def test_cli_usage_errors(tmp_path):
    assert _run('split', '--no-such-flag') == 2
    assert _run('fit', '-f', 'model9', '--out', tmp_path) == 2
    # a required path that was never given
    assert _run('sessionize', '--out', tmp_path) == 2
    assert _run('sessionize', '-i', TOY, '--log-level', 'loud', '--out',
                tmp_path) == 2


def test_cli_failures_exit_one(tmp_path):
    assert _run('sessionize', '-i', tmp_path / 'missing.tsv', '--out',
                tmp_path) == 1
    assert _run('evaluate', '-m', tmp_path / 'missing.json', '-d', tmp_path,
                '--out', tmp_path) == 1
    assert _run('sessionize', '-i', TOY, '--user-attributes',
                tmp_path / 'nope.csv', '--out', tmp_path) == 1


@pytest.mark.parametrize('failure', [OSError('disk full'), ValueError('nan')])
def test_cli_unexpected_runtime_errors_exit_one(failure):
    with patch_sys_argv_helper(['sessionlen', 'split', '-s', 'x.csv']):
        with patch.object(SessionLenMain, 'split', side_effect=failure):
            cli = SessionLenMain(test_mode=True)
            assert cli() == 1


def test_cli_sessionize_without_minimum_length(tmp_path):
    tiny = os.path.join(DATA, 'tiny_epoch.tsv')
    args = _run('sessionize', '-i', tiny, '--log-format', 'epoch',
                '--min-session-length', '0', '--malformed-tolerance', '0.5',
                '--out', tmp_path)
    assert args.min_session_length == 0.0
    ds = sl.SessionDataset.read_csv(tmp_path / 'sessions.csv')
    assert (ds.raw_lengths > 0).all()
    assert _run('sessionize', '-i', tiny, '--min-session-length', '-1',
                '--out', tmp_path) == 2


def test_cli_sessionize(tmp_path):
    args = _run('sessionize', '-i', TOY, '--gap-seconds', '1800', '--out',
                tmp_path)
    assert args.gap_seconds == 1800.0
    ds = sl.SessionDataset.read_csv(tmp_path / 'sessions.csv')
    assert ds.n_users == 50
    report = (tmp_path / 'sessionize_report.txt').read_text(encoding='utf-8')
    assert 'dropped_short_sessions' in report


def test_cli_split_and_features(split_dir, tmp_path):
    split = sl.read_split(split_dir)
    assert split.train.n_sessions > split.validation.n_sessions > 0
    assert (split_dir / 'summary.txt').exists()
    out = tmp_path / 'features'
    args = _run('features', '-d', split_dir, '--out', out)
    assert args.split_dir == str(split_dir)
    for name in sl.PARTS:
        assert (out / f'features_{name}.csv').exists()
        assert (out / f'design_{name}.csv').exists()


def test_cli_fit_predict_evaluate(split_dir, small_config, tmp_path):
    out = tmp_path / 'model3'
    args = _run('fit', '-d', split_dir, '-f', 'model3-l2', '--config',
                small_config, '--out', out)
    assert args.family == 'model3-l2'
    assert (out / 'model.json').exists()
    assert (out / 'grid_model3-l2.csv').exists()
    assert (out / 'objective_model3-l2.csv').exists()

    _run('predict', '-m', out / 'model.json', '-d', split_dir, '--part',
         'test', '--out', out)
    predictions = out / 'predictions_test.csv'
    header = predictions.read_text(encoding='utf-8').splitlines()[0]
    assert header == 'user_id,session_index,predicted_s,actual_s'

    report = _run('evaluate', '-m', out / 'model.json', '-d', split_dir,
                  '--out', out)
    assert report.family == 'model3-l2'
    assert report.mae_seconds > 0
    assert (out / 'evaluation.txt').exists()


def test_cli_baseline_normalizes_to_one(split_dir, tmp_path, capsys):
    _run('fit', '-d', split_dir, '-f', 'baseline', '--out', tmp_path)
    capsys.readouterr()
    report = _run('evaluate', '-m', tmp_path / 'model.json', '-d', split_dir,
                  '--out', tmp_path)
    assert report.normalized_mae == 1.0
    assert 'normalized MAE 1.000' in capsys.readouterr().out


def test_cli_fit_model1_prints_lambda(split_dir, tmp_path, capsys):
    _run('fit', '-d', split_dir, '-f', 'model1', '--out', tmp_path)
    assert 'lambda_hat=' in capsys.readouterr().out
    model = sl.load_model(tmp_path / 'model.json')
    assert model.point.lam == pytest.approx(model.variance_components.lam)


def test_cli_fixed_parameters_skip_tuning(split_dir, tmp_path):
    args = _run('fit', '-d', split_dir, '-f', 'model2-l2', '--lambda', '2',
                '--alpha', '0.5', '--out', tmp_path)
    assert args.lam == 2.0
    model = sl.load_model(tmp_path / 'model.json')
    assert model.point == sl.GridPoint(lam=2.0, alpha=0.5)


def test_cli_report(split_dir, small_config, tmp_path):
    results = _run('report', '-d', split_dir, '--families',
                   'baseline,model1,ridge', '--config', small_config,
                   '--out', tmp_path)
    assert [r.family for r in results] == ['baseline', 'model1', 'ridge']
    text = (tmp_path / 'report.txt').read_text(encoding='utf-8')
    assert 'model1' in text


@pytest.mark.parametrize('kind,name', [('means', 'sessions.csv'),
                                       ('linear', 'simulated_linear.csv'),
                                       ('corrupted', 'simulated_corrupted.csv'),
                                       ('events', 'events.tsv')])
def test_cli_simulate(tmp_path, kind, name):
    args = _run('simulate', '-k', kind, '-n', '20', '--seed', '3', '--out',
                tmp_path)
    assert args.sim_kind == kind
    assert (tmp_path / name).exists()


def test_cli_simulated_events_sessionize(tmp_path):
    _run('simulate', '-k', 'events', '-n', '10', '--out', tmp_path)
    args = _run('sessionize', '-i', tmp_path / 'events.tsv', '--out',
                tmp_path / 'sessions')
    assert args.input == str(tmp_path / 'events.tsv')
    ds = sl.SessionDataset.read_csv(tmp_path / 'sessions' / 'sessions.csv')
    assert ds.n_users == 10


def test_excepthook_is_opt_in(monkeypatch):
    monkeypatch.delenv('SESSIONLEN_EXCEPTHOOK', raising=False)
    assert not sl.excepthook_requested()
    monkeypatch.setenv('SESSIONLEN_EXCEPTHOOK', '1')
    assert sl.excepthook_requested()
    monkeypatch.setattr(sys, 'excepthook', sys.__excepthook__)
    sl.enable_excepthook()
    assert sys.excepthook is not sys.__excepthook__


def test_run_returns_exit_codes(tmp_path):
    assert run(['sessionize', '-i', TOY, '--out', str(tmp_path)]) == 0
    assert (tmp_path / 'sessions.csv').exists()
    assert run(['bogus']) == 2
    assert run(['split', '-s', str(tmp_path / 'missing.csv'), '--out',
                str(tmp_path)]) == 1
