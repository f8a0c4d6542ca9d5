# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for moment, trend and split computations.

Semantics are identical to :mod:`bearing_ssd._purepy`; only summation order
differs, so results agree to rounding.
"""
import numpy as np

from libc.math cimport log2
from libc.stdlib cimport calloc, free


cdef enum:
    BLOCK = 128


def central_moments(const double[::1] x):
    """Return ``(mean, m2, m3, m4)`` with ``mk = sum((x - mean)**k)``.

    Sums run in fixed-size blocks to keep rounding error close to pairwise
    summation.
    """
    cdef Py_ssize_t i, j, stop, n = x.shape[0]
    cdef double mean = 0.0, part, d, d2, c
    cdef double s1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0
    cdef double b1, b2, b3, b4
    if n == 0:
        raise ValueError("empty input")
    i = 0
    while i < n:
        stop = min(i + BLOCK, n)
        part = 0.0
        for j in range(i, stop):
            part += x[j]
        mean += part
        i = stop
    mean /= n
    i = 0
    while i < n:
        stop = min(i + BLOCK, n)
        b1 = b2 = b3 = b4 = 0.0
        for j in range(i, stop):
            d = x[j] - mean
            d2 = d * d
            b1 += d
            b2 += d2
            b3 += d2 * d
            b4 += d2 * d2
        s1 += b1
        m2 += b2
        m3 += b3
        m4 += b4
        i = stop
    # re-centre on mean + s1/n to absorb rounding in the mean
    c = s1 / n
    return (mean + c, m2 - n * c * c, m3 - 3 * c * m2 + 2 * n * c * c * c,
            m4 - 4 * c * m3 + 6 * c * c * m2 - 3 * n * c * c * c * c)


def trend_residual_ss(const double[::1] y):
    """Residual sum of squares of ``y`` regressed on the index ``1..n``."""
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double ybar = 0.0, xbar, sxy = 0.0, sxx = 0.0, slope, r, ss = 0.0
    if n == 0:
        raise ValueError("empty input")
    for i in range(n):
        ybar += y[i]
    ybar /= n
    xbar = (n + 1) / 2.0
    for i in range(n):
        sxx += (i + 1 - xbar) * (i + 1 - xbar)
        sxy += (i + 1 - xbar) * (y[i] - ybar)
    slope = sxy / sxx if sxx > 0.0 else 0.0
    for i in range(n):
        r = (y[i] - ybar) - slope * (i + 1 - xbar)
        ss += r * r
    return ss


cdef inline double _entropy(const long* counts, Py_ssize_t k, long total) nogil:
    cdef Py_ssize_t c
    cdef double h = 0.0, p
    if total <= 0:
        return 0.0
    for c in range(k):
        if counts[c] > 0:
            p = counts[c] / <double>total
            h -= p * log2(p)
    return h


def scan_splits(const double[::1] values, const long[::1] labels,
                Py_ssize_t n_classes, Py_ssize_t min_leaf, double tie_tol):
    """Scan binary cut points of a sorted column.

    Returns ``(index, gain, split_info)`` for the cut between ``values[index]``
    and ``values[index + 1]`` with maximal information gain, taking the
    lowest cut among gains within ``tie_tol`` of the maximum.  ``index`` is
    -1 when no admissible cut exists.
    """
    cdef Py_ssize_t n = values.shape[0], i, c, best = -1
    cdef long nl, nr
    cdef double parent, gain, gmax = 0.0, pl
    cdef bint found = False
    cdef long* total
    cdef long* left
    cdef long* right
    if n < 2:
        return -1, 0.0, 0.0
    total = <long*> calloc(n_classes, sizeof(long))
    left = <long*> calloc(n_classes, sizeof(long))
    right = <long*> calloc(n_classes, sizeof(long))
    gains = np.zeros(n)
    valid = np.zeros(n, dtype=np.uint8)
    cdef double[::1] g = gains
    cdef unsigned char[::1] ok = valid
    try:
        for i in range(n):
            total[labels[i]] += 1
        parent = _entropy(total, n_classes, n)
        for i in range(n - 1):
            left[labels[i]] += 1
            if values[i] == values[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            for c in range(n_classes):
                right[c] = total[c] - left[c]
            gain = parent - (nl * _entropy(left, n_classes, nl)
                             + nr * _entropy(right, n_classes, nr)) / n
            g[i] = gain
            ok[i] = 1
            if not found or gain > gmax:
                gmax = gain
                found = True
        if not found:
            return -1, 0.0, 0.0
        for i in range(n - 1):
            if ok[i] and g[i] >= gmax - tie_tol:
                best = i
                break
        pl = (best + 1) / <double>n
        return best, g[best], -(pl * log2(pl) + (1.0 - pl) * log2(1.0 - pl))
    finally:
        free(total)
        free(left)
        free(right)
