from sessionlen.shrink.model1 import *
from sessionlen.shrink.sequence import *
