from sessionlen.bcd.algorithm import *
from sessionlen.bcd.exact import *
from sessionlen.bcd.objective import *
from sessionlen.bcd.oracle import *
