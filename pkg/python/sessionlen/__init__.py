from sessionlen._logging import *
from sessionlen.bcd import *
from sessionlen.core import *
from sessionlen.data import *
from sessionlen.exception import *
from sessionlen.features import *
from sessionlen.gbt import *
from sessionlen.linalg import *
from sessionlen.main import main
from sessionlen.misc import *
from sessionlen.profiler import *
from sessionlen.shrink import *
from sessionlen.testing import *
from sessionlen.tools import *
from sessionlen.tuning import *

__all__ = [
    'bcd', 'core', 'data', 'features', 'gbt', 'linalg', 'misc', 'profiler',
    'shrink', 'tools', 'tuning', 'main'
]

__version__ = (0, 1, 0)
