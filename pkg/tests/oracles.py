"""Independent reference implementations used as test oracles.

Deliberately naive: plain Python loops with ``math.fsum`` and no shared code
with the package.
"""

import math


def two_pass_features(xs):
    xs = [float(v) for v in xs]
    n = len(xs)
    mean = math.fsum(xs) / n
    dev = [v - mean for v in xs]
    # corrected two-pass: remove the rounding left in the first mean
    shift = math.fsum(dev) / n
    dev = [d - shift for d in dev]
    ss = math.fsum(d * d for d in dev)
    var = ss / (n - 1)
    s = math.sqrt(var)
    z3 = math.fsum((d / s) ** 3 for d in dev)
    z4 = math.fsum((d / s) ** 4 for d in dev)
    kurt = math.nan if n < 4 else n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * z4 - 3 * (n - 1) ** 2 / ((n - 2) * (n - 3))
    skew = n / ((n - 1) * (n - 2)) * z3
    idx = list(range(1, n + 1))
    xbar = math.fsum(idx) / n
    sxx = math.fsum((i - xbar) ** 2 for i in idx)
    sxy = math.fsum((i - xbar) * d for i, d in zip(idx, dev))
    slope = sxy / sxx
    intercept = mean - slope * xbar
    resid = math.fsum((y - intercept - slope * i) ** 2 for i, y in zip(idx, xs))
    srt = sorted(xs)
    med = srt[n // 2] if n % 2 else 0.5 * (srt[n // 2 - 1] + srt[n // 2])
    return {
        "standard_error": math.sqrt(resid / (n - 2)),
        "standard_deviation": s,
        "sample_variance": var,
        "kurtosis": kurt,
        "skewness": skew,
        "range": max(xs) - min(xs),
        "minimum": min(xs),
        "maximum": max(xs),
        "sum": math.fsum(xs),
        "mean": mean,
        "median": med,
    }


def entropy_bits(counts):
    total = sum(counts)
    return -sum(c / total * math.log2(c / total) for c in counts if c)


def exhaustive_best_split(values, labels, min_leaf=1):
    """Max-gain midpoint by trying every candidate; lowest threshold wins ties."""
    pts = sorted(set(values))
    parent = entropy_bits([labels.count(c) for c in set(labels)])
    best = None
    for lo, hi in zip(pts, pts[1:]):
        t = (lo + hi) / 2
        left = [y for v, y in zip(values, labels) if v <= t]
        right = [y for v, y in zip(values, labels) if v > t]
        if len(left) < min_leaf or len(right) < min_leaf:
            continue
        n = len(labels)
        gain = parent - (len(left) * entropy_bits([left.count(c) for c in set(left)])
                         + len(right) * entropy_bits([right.count(c) for c in set(right)])) / n
        pl = len(left) / n
        split_info = -(pl * math.log2(pl) + (1 - pl) * math.log2(1 - pl))
        if best is None or gain > best[1] + 1e-12:
            best = (t, gain, gain / split_info)
    return best


def smallest_n(p, sigma_dd, moe, N):
    """Smallest n in 1..N with p * sigma'' * sqrt(1/n - 1/N) <= moe."""
    for n in range(1, N + 1):
        if p * sigma_dd * math.sqrt(max(1.0 / n - 1.0 / N, 0.0)) <= moe:
            return n
    return N


def bisect_normal_quantile(p):
    """Phi^-1(p) by bisection on a 50-digit erfc."""
    import mpmath

    mpmath.mp.dps = 50
    target = mpmath.mpf(p)
    lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mpmath.erfc(-mid / mpmath.sqrt(2)) / 2 < target:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)
