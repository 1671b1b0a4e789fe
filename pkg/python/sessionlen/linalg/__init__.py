from sessionlen.linalg.gram import *
from sessionlen.linalg.lasso import *
from sessionlen.linalg.ridge import *
