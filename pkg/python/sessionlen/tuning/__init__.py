from sessionlen.tuning.experiment import *
from sessionlen.tuning.families import *
from sessionlen.tuning.grid import *
from sessionlen.tuning.metrics import *
from sessionlen.tuning.report import *
