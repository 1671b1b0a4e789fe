from sessionlen.tools.model_file import *
from sessionlen.tools.simulate import *
