import numpy as np

from sumfunc.sieve import FunctionTable, external


def make_table(values, integer=None):
    arr = np.asarray(values)
    if integer is None:
        integer = arr.dtype.kind in "iu"
    if integer:
        arr = arr.astype(np.int8) if np.abs(arr).max(initial=0) < 128 else arr.astype(np.int32)
    else:
        arr = arr.astype(np.float64)
    return FunctionTable(external("test", integer=integer), arr.size, arr)
