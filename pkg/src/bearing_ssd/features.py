"""Time-domain statistical features of vibration records.

All moment-based features come from a single two-pass central-moment
computation (``kernels.central_moments``); the raw power-sum shortcut loses
most significant digits on 8192-point records and is never used.

Conventions
-----------
* variance and standard deviation are Bessel corrected (``n - 1``);
* kurtosis is the bias-corrected excess kurtosis (0 for a Gaussian);
* skewness defaults to the corrected ``n / ((n-1)(n-2))`` prefactor;
  ``skewness_prefactor="as_printed"`` selects the bare ``n / (n-1)`` form;
* standard error is the residual standard error of a straight-line fit of
  amplitude against the sample index ``1..n``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._io import atomic_write, fmt_float
from .signals import FaultClass

__all__ = [
    "FeatureId",
    "FeatureError",
    "FeatureVector",
    "DatasetMatrix",
    "ALL_FEATURES",
    "kurtosis",
    "skewness",
    "sample_variance",
    "standard_deviation",
    "standard_error",
    "range_min_max_sum",
    "mean",
    "median",
    "extract_features",
    "parse_features",
    "write_feature_csv",
    "read_feature_csv",
]


class FeatureId(str, enum.Enum):
    STANDARD_ERROR = "standard_error"
    STANDARD_DEVIATION = "standard_deviation"
    SAMPLE_VARIANCE = "sample_variance"
    KURTOSIS = "kurtosis"
    SKEWNESS = "skewness"
    RANGE = "range"
    MINIMUM = "minimum"
    MAXIMUM = "maximum"
    SUM = "sum"
    MEAN = "mean"
    MEDIAN = "median"

    def __str__(self):
        return self.value


ALL_FEATURES = tuple(FeatureId)


class FeatureError(ValueError):
    """A feature is undefined for the given samples."""


def _as_array(samples):
    x = np.ascontiguousarray(samples, dtype=float)
    if x.ndim != 1:
        raise FeatureError("samples must be one-dimensional")
    return x


def _require(n, minimum):
    if n < minimum:
        raise FeatureError(f"insufficient points: need at least {minimum}, got {n}")


def _variance_from_moments(n, m2):
    return m2 / (n - 1)


def _kurtosis_from_moments(n, m2, m4):
    if m2 <= 0.0:
        raise FeatureError("zero variance")
    # sum(((x - mean) / s)**4) with s**2 = m2 / (n - 1)
    z4 = m4 * (n - 1) ** 2 / (m2 * m2)
    return (n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * z4
            - 3.0 * (n - 1) ** 2 / ((n - 2) * (n - 3)))


def _skewness_from_moments(n, m2, m3, prefactor="standard"):
    if m2 <= 0.0:
        raise FeatureError("zero variance")
    z3 = m3 * ((n - 1) / m2) ** 1.5
    if prefactor == "standard":
        return n / ((n - 1) * (n - 2)) * z3
    if prefactor == "as_printed":
        return n / (n - 1) * z3
    raise ValueError(f"unknown skewness_prefactor {prefactor!r}")


def _standard_error(x):
    return math.sqrt(max(kernels.trend_residual_ss(x), 0.0) / (x.size - 2))


def kurtosis(samples):
    """Bias-corrected excess kurtosis; needs ``n >= 4`` and nonzero spread.

    >>> round(kurtosis([1, 2, 3, 4, 5]), 12)
    -1.2
    """
    x = _as_array(samples)
    _require(x.size, 4)
    _, m2, _, m4 = kernels.central_moments(x)
    return _kurtosis_from_moments(x.size, m2, m4)


def skewness(samples, prefactor="standard"):
    x = _as_array(samples)
    _require(x.size, 3)
    _, m2, m3, _ = kernels.central_moments(x)
    return _skewness_from_moments(x.size, m2, m3, prefactor)


def sample_variance(samples):
    x = _as_array(samples)
    _require(x.size, 2)
    _, m2, _, _ = kernels.central_moments(x)
    return _variance_from_moments(x.size, m2)


def standard_deviation(samples):
    return math.sqrt(sample_variance(samples))


def standard_error(samples):
    """Residual standard error of the linear trend ``y ~ a + b * index``."""
    x = _as_array(samples)
    _require(x.size, 3)
    return _standard_error(x)


def range_min_max_sum(samples):
    """``(max - min, min, max, sum)`` of the samples."""
    x = _as_array(samples)
    if x.size == 0:
        raise FeatureError("empty input")
    lo, hi = float(x.min()), float(x.max())
    return hi - lo, lo, hi, float(x.sum())


def mean(samples):
    x = _as_array(samples)
    if x.size == 0:
        raise FeatureError("empty input")
    return kernels.central_moments(x)[0]


def median(samples):
    x = _as_array(samples)
    if x.size == 0:
        raise FeatureError("empty input")
    return float(np.median(x))


def _feature_values(x, active, skewness_prefactor):
    n = x.size
    out = {}
    if any(f in active for f in (FeatureId.STANDARD_DEVIATION, FeatureId.SAMPLE_VARIANCE,
                                  FeatureId.KURTOSIS, FeatureId.SKEWNESS, FeatureId.MEAN)):
        mu, m2, m3, m4 = kernels.central_moments(x)
    for f in active:
        if f is FeatureId.STANDARD_ERROR:
            _require(n, 3)
            out[f] = _standard_error(x)
        elif f is FeatureId.STANDARD_DEVIATION:
            _require(n, 2)
            out[f] = math.sqrt(_variance_from_moments(n, m2))
        elif f is FeatureId.SAMPLE_VARIANCE:
            _require(n, 2)
            out[f] = _variance_from_moments(n, m2)
        elif f is FeatureId.KURTOSIS:
            _require(n, 4)
            out[f] = _kurtosis_from_moments(n, m2, m4)
        elif f is FeatureId.SKEWNESS:
            _require(n, 3)
            out[f] = _skewness_from_moments(n, m2, m3, skewness_prefactor)
        elif f in (FeatureId.RANGE, FeatureId.MINIMUM, FeatureId.MAXIMUM, FeatureId.SUM):
            rng, lo, hi, total = range_min_max_sum(x)
            out[f] = {FeatureId.RANGE: rng, FeatureId.MINIMUM: lo,
                      FeatureId.MAXIMUM: hi, FeatureId.SUM: total}[f]
        elif f is FeatureId.MEAN:
            out[f] = mu
        elif f is FeatureId.MEDIAN:
            out[f] = float(np.median(x))
    return out


@dataclass(frozen=True)
class FeatureVector:
    signal_id: str
    label: FaultClass
    values: dict


class DatasetMatrix:
    """Labeled feature table: one row per signal, one column per feature.

    Stored column-major as a float array for the classifier; ``rows`` gives
    the per-signal :class:`FeatureVector` view.
    """

    def __init__(self, ids, labels, values, features):
        self.features = tuple(FeatureId(f) for f in features)
        self.ids = tuple(ids)
        self.labels = np.asarray(labels, dtype=np.int_).reshape(-1)
        values = np.asarray(values, dtype=float).reshape(len(self.ids), len(self.features))
        values.setflags(write=False)
        self.values = values
        self.labels.setflags(write=False)
        if self.labels.size != len(self.ids):
            raise ValueError("labels and ids differ in length")

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, DatasetMatrix):
            return NotImplemented
        return (self.features == other.features and self.ids == other.ids
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return f"DatasetMatrix({len(self)} rows x {[f.value for f in self.features]})"

    @property
    def shape(self):
        return self.values.shape

    def column(self, feature):
        return self.values[:, self.features.index(FeatureId(feature))]

    def select(self, features):
        features = [FeatureId(f) for f in features]
        cols = [self.features.index(f) for f in features]
        return DatasetMatrix(self.ids, self.labels, self.values[:, cols], features)

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int_)
        return DatasetMatrix([self.ids[i] for i in indices], self.labels[indices],
                             self.values[indices], self.features)

    @property
    def rows(self):
        return [FeatureVector(sid, FaultClass(int(lab)), dict(zip(self.features, row.tolist())))
                for sid, lab, row in zip(self.ids, self.labels, self.values)]

    @classmethod
    def from_rows(cls, rows, features):
        features = [FeatureId(f) for f in features]
        values = [[r.values[f] for f in features] for r in rows]
        return cls([r.signal_id for r in rows], [int(r.label) for r in rows], values, features)


def parse_features(names):
    """Map user-facing names (``kurtosis``, ``Kurtosis``, ``standard-error``) to ids."""
    out = []
    for name in names:
        key = name.strip().lower().replace("-", "_").replace(" ", "_")
        try:
            out.append(FeatureId(key))
        except ValueError:
            valid = ", ".join(f.value for f in FeatureId)
            raise ValueError(f"unknown feature {name!r}; valid: {valid}") from None
    return out


def extract_features(signal_set, active=None, skewness_prefactor="standard"):
    """Feature table for every signal in ``signal_set``.

    Parameters
    ----------
    signal_set : SignalSet
    active : sequence of FeatureId or str, optional
        Features to compute, in column order.  Defaults to all eleven.
    skewness_prefactor : {"standard", "as_printed"}

    Raises
    ------
    FeatureError
        A feature is undefined for some signal; the message names its id.
    """
    active = ALL_FEATURES if active is None else tuple(parse_features(
        [a.value if isinstance(a, FeatureId) else a for a in active]))
    rows = []
    for s in signal_set:
        try:
            vals = _feature_values(np.ascontiguousarray(s.samples), active, skewness_prefactor)
        except FeatureError as exc:
            raise FeatureError(f"signal {s.id}: {exc}") from None
        rows.append([vals[f] for f in active])
    values = np.array(rows, dtype=float).reshape(len(rows), len(active))
    return DatasetMatrix([s.id for s in signal_set], [int(s.label) for s in signal_set],
                         values, active)


def write_feature_csv(data, path):
    with atomic_write(path) as fh:
        fh.write(",".join(["id", "class"] + [f.value for f in data.features]) + "\n")
        for sid, lab, row in zip(data.ids, data.labels, data.values):
            fh.write(f"{sid},{int(lab)}," + ",".join(map(fmt_float, row.tolist())) + "\n")


def read_feature_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:2] != ["id", "class"]:
            raise ValueError("line 1: feature CSV header must start with 'id,class'")
        features = parse_features(header[2:])
        ids, labels, values = [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(parts)}")
            try:
                labels.append(int(FaultClass(int(parts[1]))))
                values.append([float(v) for v in parts[2:]])
            except ValueError:
                raise ValueError(f"line {lineno}: malformed row") from None
            ids.append(parts[0])
    return DatasetMatrix(ids, labels, np.array(values, dtype=float).reshape(len(ids), len(features)),
                         features)
