from sessionlen.core.config import *
from sessionlen.core.util import *
