from sessionlen.features.standardize import *
from sessionlen.features.table import *
