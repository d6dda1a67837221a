#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: geometry.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet geometric kernels module.
#
'''
Geometric kernels
=================

Farthest point sampling, exact k-nearest-neighbour queries and the nearest
neighbour losses. All distances used by the losses are squared; knn() reports
plain Euclidean distances. Distance ties resolve to the lowest point index.

The losses accept numpy arrays or Tensors shaped (N, 3) or batched (B, N, 3)
and return a Tensor: a scalar for a single cloud or one value per cloud for a
batch. Gradients flow to the coordinates of both clouds.
'''

import logging

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import GeometryError

__all__ = ['as_point_cloud', 'fps', 'SpatialIndex', 'knn', 'nn_loss_avg',
           'nn_loss_max', 'chamfer', 'sampling_consistency']

_log = logging.getLogger(__name__)

CloudLike = Union[Tensor, np.ndarray, Sequence]

def as_point_cloud(points: CloudLike, name: str = 'point cloud') -> np.ndarray:
    '''Validate and convert to a float64 (n, 3) array'''
    if isinstance(points, Tensor):
        points = points.data
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        raise GeometryError('%s is empty'%name)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise GeometryError('%s must be a list of 3D points, got shape %r'%(name, arr.shape))
    if arr.shape[0] == 0:
        raise GeometryError('%s is empty'%name)
    if not np.all(np.isfinite(arr)):
        raise GeometryError('%s has non-finite coordinates'%name)
    return arr

def fps(P: CloudLike, m: int, start: int = 0, selected: Optional[Sequence[int]] = None) -> List[int]:
    '''Farthest point sampling

    Starting from _start_ (or from an already _selected_ set), repeatedly add
    the point whose distance to the selection is largest.

    Returns m distinct indices into P.
    '''
    P = as_point_cloud(P)
    n = P.shape[0]
    if m < 1 or m > n:
        raise GeometryError('cannot pick %i points from a cloud of %i'%(m, n))
    if selected is not None and len(selected) > 0:
        indices = [int(i) for i in selected]
        if len(set(indices)) != len(indices) or min(indices) < 0 or max(indices) >= n:
            raise GeometryError('selected indices must be distinct and within the cloud')
        if len(indices) > m:
            raise GeometryError('%i points already selected, more than %i requested'%(len(indices), m))
    else:
        if start < 0 or start >= n:
            raise GeometryError('start index %i out of range for %i points'%(start, n))
        indices = [int(start)]
    min_sq = np.full(n, np.inf)
    for i in indices:
        np.minimum(min_sq, np.sum((P - P[i]) ** 2, axis=1), out=min_sq)
    min_sq[indices] = -np.inf
    while len(indices) < m:
        nxt = int(np.argmax(min_sq))
        indices.append(nxt)
        np.minimum(min_sq, np.sum((P - P[nxt]) ** 2, axis=1), out=min_sq)
        min_sq[nxt] = -np.inf
    return indices

class SpatialIndex(object):
    '''
    SpatialIndex class
    ------------------

    kd-tree over a point cloud returning exactly the neighbours a full
    distance sort would, with equal distances ordered by index.
    '''

    # relative slack for kd-tree rounding at the k-th neighbour
    BOUNDARY_SLACK = 1e-9

    def __init__(self, points: CloudLike):
        self.points = as_point_cloud(points)
        self.__tree = cKDTree(self.points)

    def __len__(self):
        return self.points.shape[0]

    def query(self, queries: CloudLike, k: int) -> Tuple[np.ndarray, np.ndarray]:
        '''Find the k nearest points to each query

        Returns (indices, distances), both (len(queries), k), sorted by
        ascending distance then index.
        '''
        n = len(self)
        if k < 1 or k > n:
            raise GeometryError('k must be between 1 and %i, got %i'%(n, k))
        q = np.atleast_2d(np.asarray(queries.data if isinstance(queries, Tensor) else queries, dtype=np.float64))
        if q.ndim != 2 or q.shape[1] != 3:
            raise GeometryError('queries must be 3D points, got shape %r'%(q.shape,))
        width = min(k + 1, n)
        _, cand = self.__tree.query(q, k=width)
        cand = np.asarray(cand, dtype=np.int64).reshape(q.shape[0], width)
        idx, dist = self.__exactOrder(q, cand)
        if width > k:
            boundary = dist[:, k] <= dist[:, k - 1] * (1.0 + self.BOUNDARY_SLACK) + 1e-300
            for row in np.nonzero(boundary)[0]:
                full = np.arange(n, dtype=np.int64)[None, :]
                ridx, rdist = self.__exactOrder(q[row:row + 1], full)
                idx[row, :width] = ridx[0, :width]
                dist[row, :width] = rdist[0, :width]
        return idx[:, :k], dist[:, :k]

    def __exactOrder(self, q: np.ndarray, cand: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        cand = np.broadcast_to(cand, (q.shape[0], cand.shape[1]))
        diff = self.points[cand] - q[:, None, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        by_index = np.argsort(cand, axis=-1, kind='stable')
        cand = np.take_along_axis(cand, by_index, axis=-1)
        dist = np.take_along_axis(dist, by_index, axis=-1)
        by_dist = np.argsort(dist, axis=-1, kind='stable')
        return np.take_along_axis(cand, by_dist, axis=-1).copy(), np.take_along_axis(dist, by_dist, axis=-1).copy()

def knn(index: SpatialIndex, q: Sequence[float], k: int) -> List[Tuple[int, float]]:
    '''k nearest neighbours of a single point as (index, distance) pairs'''
    idx, dist = index.query(np.asarray(q, dtype=np.float64).reshape(1, 3), k)
    return [(int(i), float(d)) for i, d in zip(idx[0], dist[0])]

def _cloud_tensor(x: CloudLike, name: str) -> Tensor:
    t = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))
    if t.ndim not in (2, 3) or t.shape[-1] != 3:
        raise GeometryError('%s must be (n, 3) or (batch, n, 3), got %r'%(name, t.shape))
    if t.shape[-2] == 0:
        raise GeometryError('%s is empty'%name)
    return t

def _nearest_sq(X: CloudLike, Y: CloudLike) -> Tensor:
    '''Squared distance from each point of X to its nearest point of Y'''
    x = _cloud_tensor(X, 'X')
    y = _cloud_tensor(Y, 'Y')
    return ad.min_over_axis(ad.pairwise_sq_dist(x, y), -1)

def nn_loss_avg(X: CloudLike, Y: CloudLike) -> Tensor:
    '''Mean over X of the squared distance to the nearest point of Y'''
    return ad.mean(_nearest_sq(X, Y), -1)

def nn_loss_max(X: CloudLike, Y: CloudLike) -> Tensor:
    '''Max over X of the squared distance to the nearest point of Y'''
    return ad.max_over_axis(_nearest_sq(X, Y), -1)

def chamfer(S: CloudLike, T: CloudLike) -> Tensor:
    '''nn_loss_avg(S, T) + nn_loss_avg(T, S)'''
    s = _cloud_tensor(S, 'S')
    t = _cloud_tensor(T, 'T')
    sq = ad.pairwise_sq_dist(s, t)
    return ad.mean(ad.min_over_axis(sq, -1), -1) + ad.mean(ad.min_over_axis(sq, -2), -1)

def sampling_consistency(S_s: CloudLike, T_s_gt: CloudLike) -> Tensor:
    '''Chamfer distance between a sampled source and the sampled template
    rotated by the ground truth rotation.
    '''
    return chamfer(S_s, T_s_gt)
