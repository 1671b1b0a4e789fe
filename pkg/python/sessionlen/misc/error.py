import os
import sys
import traceback

from colorama import Fore
from sessionlen.exception import (ConfigError, ConvergenceError, FeatureError,
                                  IngestError, ModelFileError, SessionLenError,
                                  ShrinkageError, SplitError, UnknownUserError,
                                  UnsupportedModelError)

PACKAGE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# most specific first
_STAGES = (
    (IngestError, 'reading input data'),
    (SplitError, 'splitting sessions'),
    (FeatureError, 'building features'),
    (ShrinkageError, 'estimating variance components'),
    (ConvergenceError, 'fitting a model'),
    (UnknownUserError, 'predicting'),
    (UnsupportedModelError, 'reporting'),
    (ModelFileError, 'reading or writing a model file'),
    (ConfigError, 'reading the configuration'),
)


def failure_stage(exc):
    """Pipeline stage a sessionlen error belongs to, or None for other errors."""
    for cls, stage in _STAGES:
        if isinstance(exc, cls):
            return stage
    if isinstance(exc, SessionLenError):
        return 'running sessionlen'
    return None


def _internal(frame):
    return os.path.abspath(frame.filename).startswith(PACKAGE_DIR + os.sep)


def format_failure(exctype, value, tb, color=True):
    """Render an uncaught exception for a command line user.

    Runs of frames inside the sessionlen package collapse to one line; the
    frame that raised is always shown with its source line.
    """
    def paint(code, text):
        return f'{code}{text}{Fore.RESET}' if color else text

    stage = failure_stage(value)
    if stage is None:
        header = 'sessionlen hit an internal error'
    else:
        header = f'sessionlen failed while {stage}'
    lines = [paint(Fore.LIGHTBLACK_EX, f'======== {header} ========')]

    frames = traceback.extract_tb(tb)
    hidden = 0
    for k, frame in enumerate(frames):
        innermost = k == len(frames) - 1
        if _internal(frame) and not innermost:
            hidden += 1
            continue
        if hidden:
            lines.append(
                paint(Fore.LIGHTBLACK_EX,
                      f'  ... {hidden} sessionlen frame(s) ...'))
            hidden = 0
        lines.append(f'  In {paint(Fore.LIGHTYELLOW_EX, frame.name)}() at '
                     f'{paint(Fore.LIGHTMAGENTA_EX, frame.filename)}:'
                     f'{paint(Fore.LIGHTCYAN_EX, frame.lineno)}')
        if frame.line:
            code = Fore.LIGHTRED_EX if innermost else Fore.LIGHTWHITE_EX
            lines.append('    ' + paint(code, frame.line))

    message = str(value)
    name = paint(Fore.LIGHTGREEN_EX, exctype.__name__)
    lines.append(f'{name}: {message}' if message else name)
    return '\n'.join(lines) + '\n'


def enable_excepthook():
    """Print uncaught exceptions with ``format_failure`` instead of a traceback."""
    def excepthook(exctype, value, tb):
        sys.stderr.write(format_failure(exctype, value, tb))

    sys.excepthook = excepthook
    return excepthook


__all__ = [
    'PACKAGE_DIR', 'failure_stage', 'format_failure', 'enable_excepthook'
]
