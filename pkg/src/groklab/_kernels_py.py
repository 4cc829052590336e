"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same arithmetic order; results are bit-identical.
"""
import numpy as np

POLYNOMIAL, CUBIC, ABS_CUBIC, SIGNED_SQUARE = 0, 1, 2, 3


def _value(z, kind, b, a):
    if kind == POLYNOMIAL:
        return b * z + a * (z * z)
    if kind == CUBIC:
        return (z * z) * z
    az = np.abs(z)
    if kind == ABS_CUBIC:
        return (az * az) * az
    return z * az


def _slope(z, kind, b, a):
    if kind == POLYNOMIAL:
        return b + (2.0 * a) * z
    if kind == CUBIC:
        return 3.0 * (z * z)
    if kind == ABS_CUBIC:
        return (3.0 * z) * np.abs(z)
    return 2.0 * np.abs(z)


def onehot_hidden(wt, i_idx, j_idx, p, kind, b, a, with_slope=True):
    z = wt[i_idx] + wt[p + j_idx]
    return _value(z, kind, b, a), (_slope(z, kind, b, a) if with_slope else None)


def onehot_scatter(gz, i_idx, j_idx, p):
    out = np.zeros((2 * p, gz.shape[1]), dtype=np.float64)
    # add.at is unbuffered and walks indices in order, matching the C loop
    np.add.at(out, i_idx, gz)
    np.add.at(out, p + j_idx, gz)
    return out


def activate(z, kind, b, a, with_slope=True):
    return _value(z, kind, b, a), (_slope(z, kind, b, a) if with_slope else None)
