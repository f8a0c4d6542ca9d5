"""Numpy implementations of the hot kernels.

Used when the compiled ``_speedups`` extension is unavailable.  Each function
mirrors its compiled counterpart argument for argument.
"""

import numpy as np


def central_moments(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty input")
    n = x.size
    mean = x.sum() / n
    d = x - mean
    d2 = d * d
    return _shift(n, float(mean), float(d.sum()), float(d2.sum()),
                  float((d2 * d).sum()), float((d2 * d2).sum()))


def _shift(n, mean, s1, m2, m3, m4):
    """Re-centre moments on ``mean + s1/n`` to absorb rounding in the mean."""
    c = s1 / n
    return (mean + c, m2 - n * c * c, m3 - 3 * c * m2 + 2 * n * c ** 3,
            m4 - 4 * c * m3 + 6 * c * c * m2 - 3 * n * c ** 4)


def trend_residual_ss(y):
    y = np.asarray(y, dtype=float)
    n = y.size
    if n == 0:
        raise ValueError("empty input")
    xc = np.arange(1, n + 1, dtype=float) - (n + 1) / 2.0
    yc = y - y.sum() / n
    sxx = float(xc @ xc)
    slope = float(xc @ yc) / sxx if sxx > 0.0 else 0.0
    r = yc - slope * xc
    return float(r @ r)


def _entropy_rows(counts, totals):
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals[:, None]
        terms = np.where(counts > 0, -p * np.log2(np.where(counts > 0, p, 1.0)), 0.0)
    return terms.sum(axis=1)


def scan_splits(values, labels, n_classes, min_leaf, tie_tol):
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    n = values.size
    if n < 2:
        return -1, 0.0, 0.0
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    total = left[-1] + onehot[-1]
    right = total - left
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    ok = (values[:-1] != values[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not ok.any():
        return -1, 0.0, 0.0
    parent = _entropy_rows(total[None, :], np.array([float(n)]))[0]
    gains = parent - (nl * _entropy_rows(left, nl) + nr * _entropy_rows(right, nr)) / n
    gains = np.where(ok, gains, -1.0)
    gmax = gains.max()
    best = int(np.flatnonzero(ok & (gains >= gmax - tie_tol))[0])
    pl = (best + 1) / n
    split_info = -(pl * np.log2(pl) + (1.0 - pl) * np.log2(1.0 - pl))
    return best, float(gains[best]), float(split_info)
