#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tests/test_geometry.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
'''
Tests for farthest point sampling, the exact neighbour index and the nearest
neighbour losses, checked against brute force references.
'''
import numpy as np
import pytest

from rt_samplenet import autodiff as ad
from rt_samplenet.autodiff import Tensor
from rt_samplenet.exceptions import GeometryError
from rt_samplenet.geometry import (SpatialIndex, as_point_cloud, chamfer, fps, knn, nn_loss_avg, nn_loss_max,
                                   sampling_consistency)

def brute_fps(P, m, start=0):
    chosen = [start]
    while len(chosen) < m:
        best, best_d = None, -1.0
        for i in range(P.shape[0]):
            if i in chosen:
                continue
            d = float(np.min(np.sum((P[chosen] - P[i]) ** 2, axis=1)))
            if d > best_d:
                best, best_d = i, d
        chosen.append(best)
    return chosen

def brute_nearest_sq(X, Y):
    return np.array([min([np.sum((x - y) ** 2) for y in Y]) for x in X])

def min_pairwise(P):
    d = np.sqrt(np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=-1))
    return np.min(d[np.triu_indices(P.shape[0], 1)])

class TestFarthestPointSampling:
    def test_matches_brute_force(self):
        for seed in range(200):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(8, 65))
            P = rng.uniform(-1.0, 1.0, size=(n, 3))
            m = int(rng.integers(1, n + 1))
            assert fps(P, m) == brute_fps(P, m)

    def test_line_with_tie(self):
        P = np.stack([np.arange(10.0), np.zeros(10), np.zeros(10)], axis=1)
        # points 4 and 5 are equally far from {0, 9}; the lower index wins
        assert fps(P, 3) == [0, 9, 4]
        assert fps(P, 3, selected=[0]) == [0, 9, 4]
        assert fps(P, 2, start=3) == [3, 9]

    def test_all_points(self, rng):
        P = rng.normal(size=(16, 3))
        assert sorted(fps(P, 16)) == list(range(16))

    def test_covers_better_than_random(self):
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            P = rng.uniform(size=(64, 3))
            idx = fps(P, 8)
            random_idx = rng.choice(64, size=8, replace=False)
            if min_pairwise(P[idx]) >= min_pairwise(P[random_idx]):
                wins += 1
        assert wins >= 95

    def test_bad_requests(self, rng):
        P = rng.normal(size=(5, 3))
        with pytest.raises(GeometryError):
            fps(P, 6)
        with pytest.raises(GeometryError):
            fps(P, 0)
        with pytest.raises(GeometryError):
            fps(P, 3, start=5)
        with pytest.raises(GeometryError):
            fps(P, 3, selected=[1, 1])

class TestSpatialIndex:
    def test_matches_full_sort(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            P = rng.normal(size=(128, 3))
            queries = rng.normal(size=(10, 3))
            idx, dist = SpatialIndex(P).query(queries, 7)
            for q, row_idx, row_dist in zip(queries, idx, dist):
                d = np.sqrt(np.sum((P - q) ** 2, axis=1))
                order = np.lexsort((np.arange(128), d))[:7]
                np.testing.assert_array_equal(row_idx, order)
                np.testing.assert_allclose(row_dist, d[order], rtol=1e-12)

    def test_ties_order_by_index(self):
        P = np.array([[2.0, 0, 0], [0, -1.0, 0], [1.0, 0, 0], [0, 1.0, 0], [-1.0, 0, 0]])
        found = knn(SpatialIndex(P), [0.0, 0.0, 0.0], 3)
        assert [i for i, _ in found] == [1, 2, 3]
        assert [d for _, d in found] == pytest.approx([1.0, 1.0, 1.0])

    def test_k_range(self, rng):
        index = SpatialIndex(rng.normal(size=(5, 3)))
        with pytest.raises(GeometryError):
            index.query(np.zeros((1, 3)), 0)
        with pytest.raises(GeometryError):
            index.query(np.zeros((1, 3)), 6)

    def test_rejects_bad_clouds(self):
        with pytest.raises(GeometryError):
            as_point_cloud([])
        with pytest.raises(GeometryError):
            as_point_cloud(np.zeros((4, 2)))
        with pytest.raises(GeometryError):
            as_point_cloud([[0.0, np.nan, 0.0]])

class TestLosses:
    def test_hand_computed(self):
        X = np.array([[0.0, 0, 0], [1.0, 0, 0]])
        Y = np.array([[0.0, 0, 0]])
        assert nn_loss_avg(X, Y).item() == pytest.approx(0.5)
        assert nn_loss_max(X, Y).item() == pytest.approx(1.0)
        assert nn_loss_avg(Y, X).item() == pytest.approx(0.0)
        assert chamfer(X, Y).item() == pytest.approx(0.5)

    def test_match_double_loop(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(int(rng.integers(1, 17)), 3))
            Y = rng.normal(size=(int(rng.integers(1, 17)), 3))
            xy = brute_nearest_sq(X, Y)
            yx = brute_nearest_sq(Y, X)
            assert nn_loss_avg(X, Y).item() == pytest.approx(np.mean(xy), rel=1e-12)
            assert nn_loss_max(X, Y).item() == pytest.approx(np.max(xy), rel=1e-12)
            assert chamfer(X, Y).item() == pytest.approx(np.mean(xy) + np.mean(yx), rel=1e-12)
            assert chamfer(X, Y).item() == pytest.approx(chamfer(Y, X).item(), rel=1e-12)

    def test_chamfer_of_subsets(self, rng):
        P = rng.normal(size=(12, 3))
        assert chamfer(P, P[::-1]).item() == 0.0
        assert chamfer(P, P[:6]).item() > 0.0

    def test_batched_values(self, rng):
        X = rng.normal(size=(3, 8, 3))
        Y = rng.normal(size=(3, 5, 3))
        batched = chamfer(X, Y).data
        assert batched.shape == (3,)
        for b in range(3):
            assert batched[b] == pytest.approx(chamfer(X[b], Y[b]).item(), rel=1e-12)

    @pytest.mark.parametrize('loss', [nn_loss_avg, nn_loss_max, chamfer, sampling_consistency])
    def test_gradients_reach_both_clouds(self, fd_grad, loss):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            S = Tensor(rng.normal(size=(8, 3)), requires_grad=True)
            T = Tensor(rng.normal(size=(int(rng.integers(8, 17)), 3)), requires_grad=True)
            loss(S, T).backward()
            for leaf in (S, T):
                def value():
                    with ad.no_grad():
                        return loss(S.data, T.data).item()
                np.testing.assert_allclose(leaf.grad, fd_grad(value, leaf.data), rtol=1e-5, atol=1e-8)

    def test_consistency_of_matching_samples(self, rng):
        from rt_samplenet.rotation import Rotation
        T = rng.normal(size=(16, 3))
        R = Rotation.fromEuler(30.0, -20.0, 10.0)
        S = R.apply(T)[rng.permutation(16)]
        assert sampling_consistency(S, R.apply(T)).item() == pytest.approx(0.0, abs=1e-20)
