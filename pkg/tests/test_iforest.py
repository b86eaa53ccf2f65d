"""Isolation forest path lengths, scores, and tree structure."""

import json
import math

import numpy as np
import pytest

from lingsel import (
    DataError,
    IForestConfig,
    SplitMix64,
    UsageError,
    iforest_anomaly_score,
    iforest_decision,
    iforest_train,
)
from lingsel.iforest import avg_path_length, build_c_table
from lingsel.serde import model_from_obj, model_to_obj


def gaussian_cloud(n, d, seed):
    return SplitMix64(seed).gaussian_block(n * d).reshape(n, d)


class TestPathLengthNormalizer:
    def test_small_values(self):
        assert avg_path_length(0) == 0.0
        assert avg_path_length(1) == 0.0
        assert avg_path_length(2) == 1.0

    def test_reference_point(self):
        assert avg_path_length(256) == pytest.approx(10.244770920116851, abs=1e-12)

    def test_closed_form(self):
        for n in (3, 10, 100, 1000):
            expect = 2.0 * (math.log(n - 1) + 0.5772156649) - 2.0 * (n - 1) / n
            assert avg_path_length(n) == expect

    def test_monotone_increasing(self):
        values = [avg_path_length(n) for n in range(2, 500)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_table_matches_function(self):
        table = build_c_table(300)
        assert table.shape == (301,)
        for n in (0, 1, 2, 17, 256, 300):
            assert table[n] == avg_path_length(n)


class TestScores:
    def test_identical_data_scores_half(self):
        x = np.ones((50, 4))
        model = iforest_train(x, IForestConfig(n_trees=30, subsample=32, seed=1))
        scores = iforest_anomaly_score(model, x)
        # every tree is a bare root: E[h] = c(psi) exactly, s = 2^-1
        assert np.all(np.abs(scores - 0.5) <= 1e-12)

    def test_two_distinct_points_score_half(self):
        x = np.array([[0.0], [1.0]])
        model = iforest_train(x, IForestConfig(n_trees=10, subsample=2, seed=3))
        scores = iforest_anomaly_score(model, x)
        # each point isolates at depth 1 = c(2), so s = 2^-1 exactly
        assert np.all(np.abs(scores - 0.5) <= 1e-12)

    def test_outlier_ranks_above_centroid(self):
        hits = 0
        for seed in range(20):
            x = gaussian_cloud(256, 2, seed)
            model = iforest_train(x, IForestConfig(n_trees=100, subsample=128, seed=seed))
            outlier = iforest_anomaly_score(model, np.full(2, 100.0))
            center = iforest_anomaly_score(model, x.mean(axis=0))
            hits += outlier > center
        assert hits >= 19

    def test_scores_in_open_unit_interval(self):
        x = gaussian_cloud(300, 5, 7)
        model = iforest_train(x, IForestConfig(n_trees=50, subsample=64, seed=2))
        scores = iforest_anomaly_score(model, gaussian_cloud(200, 5, 8))
        assert np.all(scores > 0.0) and np.all(scores < 1.0)

    def test_decision_is_half_minus_score(self):
        x = gaussian_cloud(100, 3, 4)
        model = iforest_train(x, IForestConfig(n_trees=40, subsample=64, seed=5))
        q = gaussian_cloud(30, 3, 6)
        assert np.array_equal(
            iforest_decision(model, q), 0.5 - iforest_anomaly_score(model, q)
        )

    def test_single_vector_returns_float(self):
        x = gaussian_cloud(50, 2, 1)
        model = iforest_train(x, IForestConfig(n_trees=10, subsample=16, seed=1))
        assert isinstance(iforest_anomaly_score(model, x[0]), float)
        assert isinstance(iforest_decision(model, x[0]), float)


class TestStructure:
    def audit(self, tree, height_limit):
        n_nodes = len(tree)
        for node in range(n_nodes):
            leaf = tree.split_dim[node] == -1
            if leaf:
                assert tree.left[node] == -1 and tree.right[node] == -1
            else:
                l, r = tree.left[node], tree.right[node]
                assert 0 < l < n_nodes and 0 < r < n_nodes
                assert tree.size[node] == tree.size[l] + tree.size[r]
                assert tree.size[l] >= 1 and tree.size[r] >= 1

        def depth_of(node, depth):
            assert depth <= height_limit
            if tree.split_dim[node] != -1:
                depth_of(tree.left[node], depth + 1)
                depth_of(tree.right[node], depth + 1)

        depth_of(0, 0)

    def test_trees_well_formed(self):
        x = gaussian_cloud(200, 4, 9)
        model = iforest_train(x, IForestConfig(n_trees=30, subsample=128, seed=11))
        assert model.height_limit == math.ceil(math.log2(128))
        for tree in model.trees:
            assert tree.size[0] == model.psi
            self.audit(tree, model.height_limit)

    def test_subsample_capped_by_data(self):
        x = gaussian_cloud(10, 2, 0)
        model = iforest_train(x, IForestConfig(n_trees=5, subsample=256, seed=0))
        assert model.psi == 10
        assert model.height_limit == math.ceil(math.log2(10))

    def test_seed_changes_trees(self):
        x = gaussian_cloud(100, 3, 2)
        a = iforest_train(x, IForestConfig(n_trees=5, subsample=64, seed=1))
        b = iforest_train(x, IForestConfig(n_trees=5, subsample=64, seed=2))
        same = all(
            np.array_equal(ta.split_val, tb.split_val)
            and np.array_equal(ta.split_dim, tb.split_dim)
            for ta, tb in zip(a.trees, b.trees)
        )
        assert not same

    def test_same_seed_reproduces_exactly(self):
        x = gaussian_cloud(100, 3, 2)
        config = IForestConfig(n_trees=8, subsample=64, seed=7)
        a = iforest_train(x, config)
        b = iforest_train(x, config)
        q = gaussian_cloud(500, 3, 3)
        assert np.array_equal(iforest_anomaly_score(a, q), iforest_anomaly_score(b, q))


class TestValidation:
    def test_bad_config(self):
        with pytest.raises(UsageError):
            iforest_train(np.zeros((10, 2)), IForestConfig(n_trees=0))
        with pytest.raises(UsageError):
            iforest_train(np.zeros((10, 2)), IForestConfig(subsample=1))

    def test_too_few_rows(self):
        with pytest.raises(DataError):
            iforest_train(np.zeros((1, 3)))

    def test_non_finite_data(self):
        x = np.zeros((5, 2))
        x[0, 0] = np.inf
        with pytest.raises(DataError):
            iforest_train(x)

    def test_query_dim_mismatch(self):
        x = gaussian_cloud(20, 2, 0)
        model = iforest_train(x, IForestConfig(n_trees=5, subsample=8, seed=0))
        with pytest.raises(DataError):
            iforest_anomaly_score(model, np.zeros(3))


class TestSerde:
    def test_round_trip_scores_bit_equal(self):
        x = gaussian_cloud(150, 4, 14)
        model = iforest_train(x, IForestConfig(n_trees=20, subsample=64, seed=4))
        back = model_from_obj(model_to_obj(model))
        q = gaussian_cloud(80, 4, 15)
        assert np.array_equal(
            iforest_anomaly_score(model, q), iforest_anomaly_score(back, q)
        )
        assert back.psi == model.psi
        assert back.height_limit == model.height_limit
        assert back.seed == model.seed

    def test_serialization_is_byte_stable(self):
        x = gaussian_cloud(60, 3, 5)
        model = iforest_train(x, IForestConfig(n_trees=6, subsample=32, seed=9))
        a = json.dumps(model_to_obj(model), sort_keys=True)
        b = json.dumps(model_to_obj(model_from_obj(model_to_obj(model))), sort_keys=True)
        assert a == b
