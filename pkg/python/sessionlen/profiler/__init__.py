from sessionlen.profiler.fitprofiler import *
