from sessionlen.gbt.boosting import *
from sessionlen.gbt.tree import *
