class SessionLenError(Exception):
    pass


class IngestError(SessionLenError):
    pass


class SplitError(SessionLenError):
    pass


class FeatureError(SessionLenError):
    pass


class SchemaMismatchError(FeatureError):
    pass


class ShrinkageError(SessionLenError, ValueError):
    pass


class UnknownUserError(SessionLenError, KeyError):
    pass


class ConvergenceError(SessionLenError):
    pass


class UnsupportedModelError(SessionLenError):
    pass


class ModelFileError(SessionLenError):
    pass


class ConfigError(SessionLenError):
    pass


__all__ = [
    'SessionLenError', 'IngestError', 'SplitError', 'FeatureError',
    'SchemaMismatchError', 'ShrinkageError', 'UnknownUserError',
    'ConvergenceError', 'UnsupportedModelError', 'ModelFileError',
    'ConfigError'
]
