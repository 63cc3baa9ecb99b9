import sys

DEBUG_MODE = False


def tostr(value):
    # sympy objects print fine, numpy floats print with too many digits
    if hasattr(value, 'dtype') and getattr(value, 'shape', None) == ():
        return repr(float(value))
    return value


def debug(*args):
    # stringify any numpy scalars
    args = [tostr(arg) for arg in args]
    # print to stderr, if we're in debug mode
    if DEBUG_MODE:
        print(*args, file=sys.stderr)


def warn(*args):
    print('warning:', *args, file=sys.stderr)
