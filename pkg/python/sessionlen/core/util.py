import os
import sys

if sys.version_info[0] < 3 or sys.version_info[1] < 8:
    raise RuntimeError(
        "\nPlease restart with Python 3.8+\n" + "Current Python version:",
        sys.version_info)


def excepthook_requested():
    return os.environ.get('SESSIONLEN_EXCEPTHOOK', '') == '1'


__all__ = ['excepthook_requested']
