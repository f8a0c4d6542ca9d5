import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bearing_ssd.dtree import (Internal, KFold, Leaf, NoSplitError, Resubstitution, SplitCriterion,
                               TrainTestSplit, TreeParams, best_split, build_tree, classify,
                               entropy, evaluate, predict, rank_features, stratified_folds,
                               tree_from_json, tree_to_json, tree_to_text)
from bearing_ssd.features import DatasetMatrix, FeatureId
from bearing_ssd.signals import FaultClass

from oracles import exhaustive_best_split

K, SE, R = FeatureId.KURTOSIS, FeatureId.STANDARD_ERROR, FeatureId.RANGE


def table(columns, labels, features=None):
    features = features or [K, SE, R][: len(columns)]
    values = np.column_stack([np.asarray(c, float) for c in columns])
    return DatasetMatrix([f"r{i}" for i in range(len(labels))], labels, values, features)


def separable(n_per=10, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(4), n_per)
    k = labels * 10.0 + rng.uniform(0, 1, labels.size)
    noise = rng.standard_normal(labels.size)
    return table([k, noise], labels)


class TestEntropy:
    @pytest.mark.parametrize("counts,expected", [([10, 0, 0, 0], 0.0), ([5, 5, 0, 0], 1.0),
                                                 ([25, 25, 25, 25], 2.0)])
    def test_units(self, counts, expected):
        assert entropy(counts) == expected

    def test_empty(self):
        with pytest.raises(ValueError):
            entropy([0, 0, 0, 0])

    @given(st.lists(st.integers(0, 50), min_size=4, max_size=4).filter(lambda c: sum(c) > 0))
    def test_bounds(self, counts):
        h = entropy(counts)
        assert 0.0 <= h <= 2.0 + 1e-12
        assert (h == 0.0) == (sum(1 for c in counts if c) == 1)


class TestBestSplit:
    def test_two_groups(self):
        d = table([[1, 1, 2, 2]], [0, 0, 1, 1])
        thr, gain = best_split(d, K, SplitCriterion.INFORMATION_GAIN)
        assert (thr, gain) == (1.5, 1.0)

    def test_independent_labels(self):
        d = table([[1, 2, 1, 2]], [0, 0, 1, 1])
        assert best_split(d, K, SplitCriterion.INFORMATION_GAIN)[1] == pytest.approx(0.0, abs=1e-12)

    def test_constant(self):
        with pytest.raises(NoSplitError, match="no split"):
            best_split(table([[3, 3, 3]], [0, 1, 2]), K)

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.tuples(st.integers(-5, 5), st.integers(0, 3)), min_size=2, max_size=12))
    def test_matches_exhaustive(self, rows):
        values = [float(v) for v, _ in rows]
        labels = [c for _, c in rows]
        ref = exhaustive_best_split(values, labels)
        d = table([values], labels)
        if ref is None:
            with pytest.raises(NoSplitError):
                best_split(d, K)
            return
        thr, gain = best_split(d, K, SplitCriterion.INFORMATION_GAIN)
        assert thr == ref[0]
        assert gain == pytest.approx(ref[1], abs=1e-12)
        assert best_split(d, K)[1] == pytest.approx(ref[2], abs=1e-12)


class TestBuildTree:
    def test_kurtosis_root(self):
        tree = build_tree(separable())
        assert isinstance(tree, Internal) and tree.feature is K

    def test_single_row(self):
        tree = build_tree(table([[1.0]], [2]))
        assert tree == Leaf((0.0, 0.0, 1.0, 0.0), FaultClass.OUTER_RACE, 1)

    def test_identical_features(self):
        tree = build_tree(table([[1.0] * 4], [0, 0, 1, 3]))
        assert isinstance(tree, Leaf)
        assert tree.distribution == (0.5, 0.25, 0.0, 0.25)

    def test_leaf_invariants(self):
        d = separable(seed=3)

        def walk(node):
            if isinstance(node, Leaf):
                assert abs(sum(node.distribution) - 1.0) < 1e-12
                assert node.support >= 2
                return node.support
            return walk(node.left) + walk(node.right)

        assert walk(build_tree(d)) == len(d)

    def test_max_depth(self):
        assert isinstance(build_tree(separable(), TreeParams(max_depth=0)), Leaf)

    def test_pure_leaf_resubstitution(self):
        d = separable()
        tree = build_tree(d, TreeParams(min_leaf=1))
        assert evaluate(d, TreeParams(min_leaf=1), Resubstitution()).accuracy_percent == 100.0
        assert np.array_equal(np.argmax(predict(tree, d), axis=1), d.labels)

    def test_deterministic(self):
        assert build_tree(separable(seed=5)) == build_tree(separable(seed=5))

    def test_monotone_transform_keeps_predictions(self):
        rng = np.random.default_rng(11)
        labels = np.repeat(np.arange(4), 15)
        k = labels + rng.normal(0, 0.8, labels.size)
        x = rng.standard_normal(labels.size)
        a = table([k, x], labels)
        b = table([np.exp(k), x], labels)
        pa = np.argmax(predict(build_tree(a), a), axis=1)
        pb = np.argmax(predict(build_tree(b), b), axis=1)
        np.testing.assert_array_equal(pa, pb)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            TreeParams(min_leaf=0)


class TestClassify:
    def test_single_leaf(self):
        leaf = Leaf((0.25, 0.25, 0.25, 0.25), FaultClass.NORMAL, 4)
        assert classify(leaf, {K: 3.0}) == leaf.distribution

    def test_threshold_sides(self):
        left = Leaf((1.0, 0, 0, 0), FaultClass.NORMAL, 2)
        right = Leaf((0, 1.0, 0, 0), FaultClass.INNER_RACE, 2)
        tree = Internal(K, 1.5, left, right)
        assert classify(tree, {K: 1.5}) == left.distribution
        assert classify(tree, {"kurtosis": 1.5000001}) == right.distribution

    def test_missing_feature(self):
        tree = Internal(K, 1.5, Leaf((1.0, 0, 0, 0), FaultClass.NORMAL, 2),
                        Leaf((0, 1.0, 0, 0), FaultClass.INNER_RACE, 2))
        with pytest.raises(KeyError):
            classify(tree, {SE: 1.0})


class TestEvaluate:
    def test_perfect(self):
        rep = evaluate(separable(), TreeParams(), KFold(5, 0))
        assert rep.accuracy_percent == 100.0
        assert rep.mean_absolute_error == 0.0 and rep.root_mean_square_error == 0.0
        assert rep.confusion_matrix.sum(axis=1).tolist() == [10, 10, 10, 10]
        assert len(rep.folds) == 5

    def test_uniform_predictor_errors(self):
        # identical features give a single uniform leaf on a balanced set
        d = table([[0.0] * 8], [0, 0, 1, 1, 2, 2, 3, 3])
        rep = evaluate(d, TreeParams(), Resubstitution())
        assert rep.mean_absolute_error == pytest.approx(0.375, abs=1e-15)
        assert rep.root_mean_square_error == pytest.approx(math.sqrt(0.75) / 2, abs=1e-15)

    def test_k_exceeding_class_count(self):
        with pytest.raises(ValueError, match="exceeds"):
            evaluate(separable(n_per=3), TreeParams(), KFold(5, 0))

    def test_split_protocol(self):
        rep = evaluate(separable(), TreeParams(), TrainTestSplit(0.5, 1))
        assert rep.n_test == 20

    def test_folds_stratified(self):
        fold = stratified_folds(np.repeat(np.arange(4), 10), 10, 3)
        for f in range(10):
            assert np.bincount(np.repeat(np.arange(4), 10)[fold == f], minlength=4).tolist() == [1] * 4

    def test_rmse_not_below_mae(self, kurtosis_table):
        rep = evaluate(kurtosis_table, TreeParams(), KFold(10, 1))
        assert rep.root_mean_square_error >= rep.mean_absolute_error
        assert 0 <= rep.accuracy_percent <= 100

    def test_population_stability(self, kurtosis_table):
        acc = [evaluate(kurtosis_table, TreeParams(), KFold(10, s)).accuracy_percent for s in range(5)]
        assert max(acc) - min(acc) <= 4.0


class TestRanking:
    def test_informative_first(self):
        r = rank_features(separable())
        assert r.features[0] is K
        assert list(r.scores) == sorted(r.scores, reverse=True)

    def test_duplicate_columns_adjacent(self):
        d = separable()
        dup = DatasetMatrix(d.ids, d.labels, np.column_stack([d.values[:, 1], d.values[:, 0],
                                                              d.values[:, 0]]), [R, K, SE])
        r = rank_features(dup)
        assert r.features[:2] == (K, SE)

    def test_population_kurtosis_first(self, feature_table):
        assert rank_features(feature_table).features[0] is K

    def test_single_class(self):
        with pytest.raises(ValueError):
            rank_features(table([[1, 2, 3]], [0, 0, 0]))


class TestExport:
    def test_text_form(self):
        txt = tree_to_text(build_tree(separable()))
        assert txt.startswith("kurtosis <= ")
        assert "|   " in txt

    def test_json_round_trip(self):
        tree = build_tree(separable(seed=2))
        again = tree_from_json(tree_to_json(tree))
        assert again == tree
        assert json.loads(tree_to_json(tree))["feature"] == "kurtosis"
