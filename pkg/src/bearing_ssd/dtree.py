"""Entropy-based binary decision tree over numeric features (C4.5/J48 family).

Induction follows the J48 recipe for numeric attributes:

* for every feature the cut point is the one with the highest information
  gain; the threshold is the midpoint of the two sorted neighbours;
* features are then compared by the configured criterion.  Under gain ratio
  only features whose gain is at least the average gain of the candidates
  compete, which keeps tiny edge splits from winning on a small split info;
* ties break toward the lowest threshold and then the declared feature order.

Rows with ``value <= threshold`` go left.  Leaves store the empirical class
distribution of the training rows that reached them.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .features import DatasetMatrix, FeatureId, FeatureVector
from .signals import N_CLASSES, FaultClass

__all__ = [
    "SplitCriterion",
    "TreeParams",
    "Leaf",
    "Internal",
    "NoSplitError",
    "entropy",
    "best_split",
    "build_tree",
    "classify",
    "predict",
    "KFold",
    "TrainTestSplit",
    "Resubstitution",
    "EvalReport",
    "evaluate",
    "FeatureRanking",
    "rank_features",
    "tree_to_text",
    "tree_to_dict",
    "tree_from_dict",
    "tree_to_json",
    "tree_from_json",
]

TIE_TOL = 1e-12


class SplitCriterion(str, enum.Enum):
    INFORMATION_GAIN = "information_gain"
    GAIN_RATIO = "gain_ratio"


class NoSplitError(ValueError):
    """The feature offers no admissible cut point."""


@dataclass(frozen=True)
class TreeParams:
    min_leaf: int = 2
    max_depth: int | None = None
    criterion: SplitCriterion = SplitCriterion.GAIN_RATIO
    pruning: bool = False

    def __post_init__(self):
        object.__setattr__(self, "criterion", SplitCriterion(self.criterion))
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.pruning:
            raise NotImplementedError("pruning is not supported")


@dataclass(frozen=True)
class Leaf:
    distribution: tuple
    majority: FaultClass
    support: int

    @classmethod
    def from_labels(cls, labels):
        counts = np.bincount(labels, minlength=N_CLASSES)
        support = int(counts.sum())
        dist = tuple((counts / support).tolist())
        return cls(dist, FaultClass(int(np.argmax(counts))), support)


@dataclass(frozen=True)
class Internal:
    feature: FeatureId
    threshold: float
    left: object
    right: object
    gain: float = field(default=0.0, compare=False)


def entropy(class_counts):
    """Shannon entropy in bits of a vector of class counts.

    >>> entropy([25, 25, 25, 25])
    2.0
    """
    counts = np.asarray(class_counts, dtype=float)
    if counts.ndim != 1 or np.any(counts < 0):
        raise ValueError("class counts must be a 1-D vector of nonnegative values")
    total = counts.sum()
    if total <= 0:
        raise ValueError("entropy of an empty count vector")
    p = counts[counts > 0] / total
    h = float(-(p * np.log2(p)).sum())
    return h + 0.0  # normalises -0.0


@dataclass(frozen=True)
class _Split:
    threshold: float
    gain: float
    split_info: float
    n_left: int

    def score(self, criterion):
        if criterion is SplitCriterion.INFORMATION_GAIN:
            return self.gain
        return self.gain / self.split_info if self.split_info > 0 else 0.0


def _scan(values, labels, min_leaf):
    order = np.argsort(values, kind="stable")
    v = np.ascontiguousarray(values[order], dtype=float)
    y = np.ascontiguousarray(labels[order], dtype=np.int_)
    i, gain, split_info = kernels.scan_splits(v, y, N_CLASSES, min_leaf, TIE_TOL)
    if i < 0:
        return None
    lo, hi = v[i], v[i + 1]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:  # adjacent doubles: the midpoint rounded up
        thr = lo
    return _Split(float(thr), max(float(gain), 0.0), float(split_info), i + 1)


def best_split(data, feature, criterion=SplitCriterion.GAIN_RATIO, min_leaf=1):
    """Best cut of one feature column.

    Returns
    -------
    (threshold, score) : tuple of float
        ``score`` is the information gain in bits or the gain ratio.

    Raises
    ------
    NoSplitError
        Fewer than two distinct values (after ``min_leaf`` constraints).
    """
    s = _scan(np.asarray(data.column(feature)), np.asarray(data.labels), min_leaf)
    if s is None:
        raise NoSplitError(f"no split on {FeatureId(feature).value}")
    return s.threshold, s.score(SplitCriterion(criterion))


def _choose(values, labels, features, params):
    cands = []
    for j, f in enumerate(features):
        s = _scan(values[:, j], labels, params.min_leaf)
        if s is not None and s.gain > TIE_TOL:
            cands.append((j, s))
    if not cands:
        return None
    if params.criterion is SplitCriterion.GAIN_RATIO:
        avg = sum(s.gain for _, s in cands) / len(cands)
        cands = [(j, s) for j, s in cands if s.gain >= avg - TIE_TOL]
    best = max(s.score(params.criterion) for _, s in cands)
    for j, s in cands:  # declared order breaks ties
        if s.score(params.criterion) >= best - TIE_TOL:
            return j, s


def build_tree(data, params=TreeParams()):
    """Grow a tree top-down on every row of ``data``."""
    if len(data) == 0:
        raise ValueError("cannot build a tree on an empty dataset")
    values = np.asarray(data.values, dtype=float)
    labels = np.asarray(data.labels, dtype=np.int_)
    return _grow(values, labels, data.features, params, 0)


def _grow(values, labels, features, params, depth):
    leaf = Leaf.from_labels(labels)
    if (max(leaf.distribution) == 1.0 or labels.size < 2 * params.min_leaf
            or (params.max_depth is not None and depth >= params.max_depth)):
        return leaf
    choice = _choose(values, labels, features, params)
    if choice is None:
        return leaf
    j, s = choice
    go_left = values[:, j] <= s.threshold
    return Internal(features[j], s.threshold,
                    _grow(values[go_left], labels[go_left], features, params, depth + 1),
                    _grow(values[~go_left], labels[~go_left], features, params, depth + 1),
                    s.gain)


def _lookup(vector, feature):
    source = vector.values if isinstance(vector, FeatureVector) else vector
    try:
        return source[feature]
    except KeyError:
        try:
            return source[feature.value]
        except KeyError:
            raise KeyError(f"feature vector lacks {feature.value}") from None


def classify(tree, vector):
    """Class distribution of the leaf that ``vector`` reaches.

    ``vector`` is a :class:`FeatureVector` or a mapping keyed by
    :class:`FeatureId` (or its string name).
    """
    node = tree
    while isinstance(node, Internal):
        node = node.left if _lookup(vector, node.feature) <= node.threshold else node.right
    return node.distribution


def predict(tree, data):
    """Distribution matrix (rows x classes) for every row of ``data``."""
    out = np.empty((len(data), N_CLASSES))
    _predict_into(tree, np.asarray(data.values), {f: j for j, f in enumerate(data.features)},
                  np.arange(len(data)), out)
    return out


def _predict_into(node, values, cols, rows, out):
    if isinstance(node, Leaf):
        out[rows] = node.distribution
        return
    if node.feature not in cols:
        raise KeyError(f"dataset lacks feature {node.feature.value}")
    mask = values[rows, cols[node.feature]] <= node.threshold
    _predict_into(node.left, values, cols, rows[mask], out)
    _predict_into(node.right, values, cols, rows[~mask], out)


# -- evaluation -------------------------------------------------------------

@dataclass(frozen=True)
class KFold:
    k: int = 10
    seed: int = 0

    @property
    def label(self):
        return f"{self.k}-fold cross-validation"


@dataclass(frozen=True)
class TrainTestSplit:
    fraction: float = 0.66
    seed: int = 0

    @property
    def label(self):
        return f"train/test split ({self.fraction:g} train)"


@dataclass(frozen=True)
class Resubstitution:
    @property
    def label(self):
        return "resubstitution"


@dataclass(frozen=True)
class EvalReport:
    """Pooled test-set metrics.

    MAE and RMSE compare each predicted distribution with the one-hot truth,
    averaging over every (row, class) component.
    """

    accuracy_percent: float
    mean_absolute_error: float
    root_mean_square_error: float
    confusion_matrix: np.ndarray
    protocol: str
    folds: tuple = ()

    @property
    def n_test(self):
        return int(self.confusion_matrix.sum())

    def to_dict(self):
        return {
            "protocol": self.protocol,
            "accuracy_percent": self.accuracy_percent,
            "mean_absolute_error": self.mean_absolute_error,
            "root_mean_square_error": self.root_mean_square_error,
            "confusion_matrix": self.confusion_matrix.tolist(),
            "folds": [f.to_dict() for f in self.folds],
        }


def _report(dist, truth, protocol, folds=()):
    onehot = np.eye(N_CLASSES)[truth]
    err = dist - onehot
    pred = np.argmax(dist, axis=1)
    conf = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(conf, (truth, pred), 1)
    conf.setflags(write=False)
    return EvalReport(
        accuracy_percent=100.0 * float(np.mean(pred == truth)),
        mean_absolute_error=float(np.mean(np.abs(err))),
        root_mean_square_error=float(np.sqrt(np.mean(err * err))),
        confusion_matrix=conf,
        protocol=protocol,
        folds=tuple(folds),
    )


def stratified_folds(labels, k, seed):
    """Fold index per row; each class is shuffled then dealt round-robin."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=N_CLASSES)
    present = counts[counts > 0]
    if k < 2:
        raise ValueError("k must be >= 2")
    if present.size and k > present.min():
        raise ValueError(f"k={k} exceeds the smallest class count {int(present.min())}")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in range(N_CLASSES)])
    fold = np.empty(labels.size, dtype=np.int_)
    fold[order] = np.arange(labels.size) % k
    return fold


def evaluate(data, params=TreeParams(), protocol=KFold()):
    """Train and test under ``protocol``; metrics pooled over all test rows."""
    labels = np.asarray(data.labels)
    if isinstance(protocol, Resubstitution):
        tree = build_tree(data, params)
        return _report(predict(tree, data), labels, protocol.label)
    if isinstance(protocol, TrainTestSplit):
        if not 0.0 < protocol.fraction < 1.0:
            raise ValueError("fraction must be in (0, 1)")
        rng = np.random.default_rng(protocol.seed)
        train = np.zeros(len(data), dtype=bool)
        for c in range(N_CLASSES):
            ix = rng.permutation(np.flatnonzero(labels == c))
            train[ix[: int(round(protocol.fraction * ix.size))]] = True
        if train.all() or not train.any():
            raise ValueError("split leaves an empty train or test set")
        tree = build_tree(data.subset(np.flatnonzero(train)), params)
        test = data.subset(np.flatnonzero(~train))
        return _report(predict(tree, test), np.asarray(test.labels), protocol.label)
    if isinstance(protocol, KFold):
        fold = stratified_folds(labels, protocol.k, protocol.seed)
        dist = np.empty((len(data), N_CLASSES))
        reports = []
        for f in range(protocol.k):
            test_ix = np.flatnonzero(fold == f)
            tree = build_tree(data.subset(np.flatnonzero(fold != f)), params)
            test = data.subset(test_ix)
            dist[test_ix] = predict(tree, test)
            reports.append(_report(dist[test_ix], labels[test_ix], f"fold {f + 1}"))
        return _report(dist, labels, protocol.label, reports)
    raise TypeError(f"unknown protocol {protocol!r}")


# -- ranking ----------------------------------------------------------------

@dataclass(frozen=True)
class FeatureRanking:
    """Features by descending root-level score.

    ``first_use_depth[f]`` is the shallowest depth at which the full tree
    tests ``f`` (``None`` if never).
    """

    features: tuple
    scores: tuple
    first_use_depth: dict
    criterion: SplitCriterion

    def tree_order(self):
        used = [f for f in self.features if self.first_use_depth[f] is not None]
        return sorted(used, key=lambda f: self.first_use_depth[f])


def _first_use(node, depth, out):
    if isinstance(node, Internal):
        if out.get(node.feature) is None or depth < out[node.feature]:
            out[node.feature] = depth
        _first_use(node.left, depth + 1, out)
        _first_use(node.right, depth + 1, out)


def rank_features(data, params=TreeParams()):
    labels = np.asarray(data.labels)
    if np.unique(labels).size < 2:
        raise ValueError("ranking needs at least two classes")
    scores = []
    for j, f in enumerate(data.features):
        s = _scan(np.asarray(data.values[:, j]), labels, params.min_leaf)
        scores.append(0.0 if s is None else s.score(params.criterion))
    order = sorted(range(len(scores)), key=lambda j: -scores[j])  # stable: declared order on ties
    depth = {f: None for f in data.features}
    _first_use(build_tree(data, params), 0, depth)
    return FeatureRanking(tuple(data.features[j] for j in order),
                          tuple(scores[j] for j in order), depth, params.criterion)


# -- export -----------------------------------------------------------------

def _leaf_text(leaf):
    miss = leaf.support - round(max(leaf.distribution) * leaf.support)
    return f"{leaf.majority.label} ({leaf.support}" + (f"/{miss})" if miss else ")")


def tree_to_text(tree):
    """Indented ``feature <= t`` / ``feature > t`` lines, one per branch."""
    if isinstance(tree, Leaf):
        return ": " + _leaf_text(tree) + "\n"
    lines = []

    def walk(node, depth):
        pad = "|   " * depth
        for op, child in (("<=", node.left), (">", node.right)):
            head = f"{pad}{node.feature.value} {op} {node.threshold:.6g}"
            if isinstance(child, Leaf):
                lines.append(f"{head}: {_leaf_text(child)}")
            else:
                lines.append(head)
                walk(child, depth + 1)

    walk(tree, 0)
    return "\n".join(lines) + "\n"


def tree_to_dict(tree):
    if isinstance(tree, Leaf):
        return {"leaf": {"distribution": list(tree.distribution),
                         "majority": tree.majority.label, "support": tree.support}}
    return {"feature": tree.feature.value, "threshold": tree.threshold,
            "left": tree_to_dict(tree.left), "right": tree_to_dict(tree.right)}


def tree_from_dict(d):
    if "leaf" in d:
        leaf = d["leaf"]
        dist = tuple(float(p) for p in leaf["distribution"])
        if len(dist) != N_CLASSES or abs(sum(dist) - 1.0) > 1e-9:
            raise ValueError("leaf distribution must have four entries summing to 1")
        majority = {c.label: c for c in FaultClass}[leaf["majority"]]
        return Leaf(dist, majority, int(leaf["support"]))
    return Internal(FeatureId(d["feature"]), float(d["threshold"]),
                    tree_from_dict(d["left"]), tree_from_dict(d["right"]))


def tree_to_json(tree):
    return json.dumps(tree_to_dict(tree), indent=2) + "\n"


def tree_from_json(text):
    return tree_from_dict(json.loads(text))


def tree_depth(tree):
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(tree.left), tree_depth(tree.right))


def n_leaves(tree):
    if isinstance(tree, Leaf):
        return 1
    return n_leaves(tree.left) + n_leaves(tree.right)
