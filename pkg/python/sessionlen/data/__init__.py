from sessionlen.data.events import *
from sessionlen.data.sessions import *
from sessionlen.data.split import *
from sessionlen.data.summary import *
