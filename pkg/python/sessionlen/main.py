import argparse
import os
import sys
import timeit
from functools import wraps

import pandas as pd
from colorama import Fore
from sessionlen._logging import error, info, set_logging_level
from sessionlen.core.config import (FAMILY_TAGS, config_from_dict,
                                    load_config)
from sessionlen.core.util import excepthook_requested
from sessionlen.data import (SessionDataset, attach_user_attributes,
                             chronological_split, parse_event_log,
                             read_split, read_user_attributes, sessionize,
                             summarize, write_split)
from sessionlen.exception import ConfigError, SessionLenError
from sessionlen.features import (apply_standardizer, build_features,
                                 fit_standardizer)
from sessionlen.misc.error import enable_excepthook
from sessionlen.profiler import FitProfiler
from sessionlen.tools import (SIM_KINDS, load_model, save_model,
                              simulate_event_log, simulate_sessions,
                              write_event_log)
from sessionlen.tuning import (compare_families, evaluate_model,
                               feature_config_of, fit_baseline,
                               objective_trace_frame, reports_frame,
                               reports_text, train_model, tune,
                               write_report_files)

USAGE_EXIT = 2
FAILURE_EXIT = 1


def timer(func):
    """Function decorator to benchmark a function running time."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        start = timeit.default_timer()
        result = func(*args, **kwargs)
        elapsed = timeit.default_timer() - start
        info('Running time: {:.2f}s', elapsed)
        return result

    return wrapper


def registerableCLI(cls):
    """Class decorator to register methods with @register into a set."""
    cls.registered_commands = set([])
    for name in dir(cls):
        method = getattr(cls, name)
        if hasattr(method, 'registered'):
            cls.registered_commands.add(name)
    return cls


def register(func):
    """Method decorator to register CLI commands."""
    func.registered = True
    return func


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f'{self.prog}: {message}')


def _common_parser(prog, description):
    parser = _ArgumentParser(prog=prog, description=description)
    parser.add_argument('--config', help='Flat key = value config file')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--log-level',
                        dest='log_level',
                        help='trace, debug, info, warn, error or critical')
    return parser


_OVERRIDE_KEYS = ('seed', 'out', 'input', 'log_format', 'malformed_tolerance',
                  'gap_seconds', 'min_session_length', 'sessions',
                  'fractions', 'split_dir', 'user_attributes', 'family',
                  'families', 'lam', 'alpha', 'delta', 'model', 'part',
                  'sim_kind', 'sim_users', 'sim_max_sessions', 'sim_dim',
                  'sim_corruption_rate', 'lognormal_correction')


def _config_of(args):
    overrides = {}
    for key in _OVERRIDE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.config:
        config = load_config(args.config, overrides)
    else:
        config = config_from_dict(overrides)
    os.makedirs(config.out, exist_ok=True)
    return config


@registerableCLI
class SessionLenMain:
    def __init__(self, test_mode: bool = False, argv=None):
        parser = _ArgumentParser(
            prog='sessionlen',
            description='Session length prediction with hierarchical shrinkage',
            usage=self._usage())
        parser.add_argument('command',
                            help='command from the above list to run')

        # Flag for unit testing
        self.test_mode = test_mode
        self.argv = list(sys.argv if argv is None else argv)
        self.main_parser = parser

    @timer
    def __call__(self):
        # Print help if no command provided
        if len(self.argv[1:2]) == 0:
            self.main_parser.print_help()
            return USAGE_EXIT

        command = self.argv[1]
        if command not in self.registered_commands:  # pylint: disable=E1101
            print(f'{command} is not a valid command!')
            self.main_parser.print_help()
            return USAGE_EXIT

        try:
            result = getattr(self, command)(self.argv[2:])
        except _UsageError as e:
            print(Fore.RED + str(e) + Fore.RESET, file=sys.stderr)
            return USAGE_EXIT
        except ConfigError as e:
            error('{}', e)
            return USAGE_EXIT
        except SessionLenError as e:
            error('{}: {}', type(e).__name__, e)
            return FAILURE_EXIT
        except (OSError, ValueError) as e:
            error('Runtime failure in {}: {}: {}', command,
                  type(e).__name__, e)
            return FAILURE_EXIT
        if self.test_mode:
            return result
        return 0

    def _usage(self) -> str:
        """Compose deterministic usage message based on registered_commands."""
        msg = '\n'
        space = 20
        for command in sorted(self.registered_commands):  # pylint: disable=E1101
            msg += f"    {command}{' ' * (space - len(command))}|-> {getattr(self, command).__doc__}\n"
        return msg

    @register
    def sessionize(self, arguments: list = sys.argv[2:]):
        """Cut a listening log into sessions"""
        parser = _common_parser('sessionlen sessionize',
                                f'{self.sessionize.__doc__}')
        parser.add_argument('-i', '--input', help='Tab-separated event log')
        parser.add_argument('--log-format',
                            dest='log_format',
                            choices=['iso', 'lastfm', 'epoch'])
        parser.add_argument('--gap-seconds', dest='gap_seconds', type=float)
        parser.add_argument('--min-session-length',
                            dest='min_session_length',
                            type=float)
        parser.add_argument('--malformed-tolerance',
                            dest='malformed_tolerance',
                            type=float)
        parser.add_argument('--user-attributes',
                            dest='user_attributes',
                            help='CSV of static per-user categoricals')
        args = parser.parse_args(arguments)
        config = self._prepare(args)
        config.require('input')

        events = parse_event_log(config.input, config.log_format,
                                 config.malformed_tolerance)
        ds, report = sessionize(events, config.gap_seconds,
                                config.min_session_length)
        if config.user_attributes:
            ds = attach_user_attributes(
                ds, read_user_attributes(config.user_attributes))
        path = os.path.join(config.out, 'sessions.csv')
        ds.to_csv(path)
        with open(os.path.join(config.out, 'sessionize_report.txt'),
                  'w',
                  encoding='utf-8') as f:
            f.write(report.to_text())
        print(f'sessionize: {report.n_sessions} sessions for {ds.n_users} '
              f'users ({report.n_dropped} dropped) -> {path}')
        return args if self.test_mode else None

    @register
    def split(self, arguments: list = sys.argv[2:]):
        """Chronological train / validation / test split"""
        parser = _common_parser('sessionlen split', f'{self.split.__doc__}')
        parser.add_argument('-s', '--sessions', help='Sessions CSV')
        parser.add_argument('--fractions', help='e.g. 0.8,0.1,0.1')
        args = parser.parse_args(arguments)
        config = self._prepare(args)
        config.require('sessions')

        ds = SessionDataset.read_csv(config.sessions)
        split = chronological_split(ds, config.fractions)
        write_split(split, config.out)
        with open(os.path.join(config.out, 'summary.txt'),
                  'w',
                  encoding='utf-8') as f:
            f.write(summarize(split.train).to_text())
        print(f'split: {split.train.n_sessions}/{split.validation.n_sessions}'
              f'/{split.test.n_sessions} sessions -> {config.out}')
        return args if self.test_mode else None

    @register
    def features(self, arguments: list = sys.argv[2:]):
        """Build and standardize feature tables of a split"""
        parser = _common_parser('sessionlen features',
                                f'{self.features.__doc__}')
        parser.add_argument('-d', '--split-dir', dest='split_dir')
        args = parser.parse_args(arguments)
        config = self._prepare(args)
        config.require('split_dir')

        split = read_split(config.split_dir)
        feature_set = build_features(split, feature_config_of(config))
        std, design = fit_standardizer(feature_set['train'])
        designs = {'train': design}
        for name in ('validation', 'test'):
            designs[name] = apply_standardizer(std, feature_set[name])
        for name, table in feature_set.tables.items():
            table.to_csv(os.path.join(config.out, f'features_{name}.csv'))
            designs[name].to_csv(
                os.path.join(config.out, f'design_{name}.csv'))
        print(f'features: {design.n_columns} standardized columns '
              f'({len(std.dropped)} dropped) -> {config.out}')
        return args if self.test_mode else None

    @register
    def fit(self, arguments: list = sys.argv[2:]):
        """Tune on validation, refit on train + validation, save the model"""
        parser = _common_parser('sessionlen fit', f'{self.fit.__doc__}')
        parser.add_argument('-d', '--split-dir', dest='split_dir')
        parser.add_argument('-f', '--family', choices=FAMILY_TAGS)
        parser.add_argument('--lambda', dest='lam', type=float)
        parser.add_argument('--alpha', type=float)
        parser.add_argument('--delta', type=float)
        parser.add_argument('--lognormal-correction',
                            dest='lognormal_correction',
                            action='store_const',
                            const=True)
        args = parser.parse_args(arguments)
        config = self._prepare(args)
        config.require('split_dir')

        split = read_split(config.split_dir)
        grid = tune(config.family, split, config)
        if grid is not None:
            grid.to_csv(
                os.path.join(config.out, f'grid_{config.family}.csv'))
        model = train_model(config.family,
                            split.train_valid(),
                            point=grid.best if grid is not None else None,
                            feature_config=feature_config_of(config),
                            eps=config.eps,
                            max_iters=config.max_iters,
                            lognormal_correction=config.lognormal_correction)
        if grid is not None:
            model.diagnostics['validation_mae'] = grid.best_mae
        path = config.model or os.path.join(config.out, 'model.json')
        save_model(model, path)
        if model.fitted is not None:
            objective_trace_frame(model.fitted.objective_trace).to_csv(
                os.path.join(config.out, f'objective_{config.family}.csv'),
                index=False,
                float_format='%.17g')
        summary = f'fit: {config.family}'
        if model.variance_components is not None:
            vc = model.variance_components
            summary += (f' lambda_hat={vc.lam:.6g} (sigma0^2={vc.sigma0_sq:.4g},'
                        f' sigma1^2={vc.sigma1_sq:.4g})')
        if model.point is not None:
            summary += f' [{model.point.label()}]'
        print(f'{summary} -> {path}')
        return args if self.test_mode else None

    @register
    def predict(self, arguments: list = sys.argv[2:]):
        """Predict session lengths (seconds) for a split part"""
        parser = _common_parser('sessionlen predict',
                                f'{self.predict.__doc__}')
        parser.add_argument('-m', '--model')
        parser.add_argument('-d', '--split-dir', dest='split_dir')
        parser.add_argument('--part', choices=['train', 'validation', 'test'])
        args = parser.parse_args(arguments)
        config = self._prepare(args)
        config.require('model', 'split_dir')

        model = load_model(config.model)
        split = read_split(config.split_dir)
        part = split.part(config.part)
        preds = model.predict_part(part, split.history_for(config.part))
        frame = pd.DataFrame({
            'user_id': part.user_ids,
            'session_index': part.frame['session_index'].to_numpy(),
            'predicted_s': preds,
            'actual_s': part.raw_lengths,
        })
        path = os.path.join(config.out, f'predictions_{config.part}.csv')
        frame.to_csv(path, index=False, float_format='%.17g')
        print(f'predict: {len(frame)} {config.part} sessions -> {path}')
        return args if self.test_mode else None

    @register
    def evaluate(self, arguments: list = sys.argv[2:]):
        """Normalized MAE of a saved model on the test part"""
        parser = _common_parser('sessionlen evaluate',
                                f'{self.evaluate.__doc__}')
        parser.add_argument('-m', '--model')
        parser.add_argument('-d', '--split-dir', dest='split_dir')
        args = parser.parse_args(arguments)
        config = self._prepare(args)
        config.require('model', 'split_dir')

        model = load_model(config.model)
        split = read_split(config.split_dir)
        fit_set = split.train_valid()
        report = evaluate_model(model, fit_baseline(fit_set), split.test,
                                fit_set, split.train.counts)
        with open(os.path.join(config.out, 'evaluation.txt'),
                  'w',
                  encoding='utf-8') as f:
            f.write(reports_text([report]))
        reports_frame([report]).to_csv(os.path.join(config.out,
                                                    'evaluation.csv'),
                                       index=False,
                                       float_format='%.17g')
        print(f'evaluate: {model.family} MAE {report.mae_seconds:.2f}s '
              f'normalized MAE {report.normalized_mae:.3f}')
        return report if self.test_mode else None

    @register
    def report(self, arguments: list = sys.argv[2:]):
        """Compare several families on one split"""
        parser = _common_parser('sessionlen report', f'{self.report.__doc__}')
        parser.add_argument('-d', '--split-dir', dest='split_dir')
        parser.add_argument('--families',
                            help='Comma separated family tags')
        args = parser.parse_args(arguments)
        config = self._prepare(args)
        config.require('split_dir')

        split = read_split(config.split_dir)
        profiler = FitProfiler()
        results = compare_families(split, config.families, config, profiler)
        importances = {}
        for result in results:
            ranked = result.importance()
            if ranked is not None:
                importances[result.family] = ranked
            if result.grid is not None:
                result.grid.to_csv(
                    os.path.join(config.out, f'grid_{result.family}.csv'))
        txt_path, _ = write_report_files(config.out,
                                         [r.report for r in results],
                                         importances, profiler.table_text())
        print(f'report: {len(results)} families -> {txt_path}')
        return results if self.test_mode else None

    @register
    def simulate(self, arguments: list = sys.argv[2:]):
        """Generate synthetic sessions or event logs"""
        parser = _common_parser('sessionlen simulate',
                                f'{self.simulate.__doc__}')
        parser.add_argument('-k', '--kind', dest='sim_kind', choices=SIM_KINDS)
        parser.add_argument('-n', '--users', dest='sim_users', type=int)
        parser.add_argument('--max-sessions', dest='sim_max_sessions',
                            type=int)
        parser.add_argument('--dim', dest='sim_dim', type=int)
        parser.add_argument('--corruption-rate',
                            dest='sim_corruption_rate',
                            type=float)
        args = parser.parse_args(arguments)
        config = self._prepare(args)

        kind = config.sim_kind
        if kind == 'events':
            frame = simulate_event_log(config.sim_users, seed=config.seed)
            path = os.path.join(config.out, 'events.tsv')
            write_event_log(frame, path)
            print(f'simulate: {len(frame)} events -> {path}')
            return args if self.test_mode else None
        data = simulate_sessions(
            config.sim_users,
            n_sessions=(1, config.sim_max_sessions),
            dim=0 if kind == 'means' else config.sim_dim,
            corruption_rate=config.sim_corruption_rate
            if kind == 'corrupted' else 0.0,
            seed=config.seed)
        if kind == 'means':
            path = os.path.join(config.out, 'sessions.csv')
            data.sessions().to_csv(path)
        else:
            path = os.path.join(config.out, f'simulated_{kind}.csv')
            data.to_frame().to_csv(path, index=False, float_format='%.17g')
        print(f'simulate: {data.n_rows} {kind} sessions -> {path}')
        return args if self.test_mode else None

    @staticmethod
    def _prepare(args):
        if args.log_level:
            try:
                set_logging_level(args.log_level)
            except ValueError as e:
                raise ConfigError(str(e)) from None
        return _config_of(args)


def run(argv):
    """Run the command line with ``argv`` (program name excluded)."""
    cli = SessionLenMain(argv=['sessionlen'] + list(argv))
    return cli()


def main():
    if excepthook_requested():
        enable_excepthook()
    cli = SessionLenMain()
    return cli()


if __name__ == '__main__':
    sys.exit(main())
