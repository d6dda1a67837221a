#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: projection.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet soft projection module.
#
'''
Soft projection
===============

A generated point q is replaced by a weighted average of its k nearest input
points, the weights being softmax(-d**2 / t**2) of the neighbour distances.
The temperature t is learnable; as it shrinks the average approaches the
nearest input point.

At inference the projection is hardened: every query keeps its highest weight
neighbour, repeated picks are dropped and the set is completed to m points by
farthest point sampling seeded with the points already chosen.

Neighbour selection is discrete and runs on detached coordinates; gradients
flow through the distances and weights to the query coordinates and to t.
'''

import enum
import logging

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import ProjectionError
from .geometry import SpatialIndex, as_point_cloud, fps
from .utils import list_join

__all__ = ['ProjectionState', 'projection_weights', 'soft_project',
           'projection_loss', 'hard_sample', 'match_nearest',
           'TemperatureKind', 'TemperatureProfile', 'temperature_schedule',
           'weight_cross_entropy_loss', 'weight_entropy_loss',
           'mean_neighbor_weights', 'WEIGHT_FLOOR']

_log = logging.getLogger(__name__)

# argument floor for log() in the weight losses
WEIGHT_FLOOR = 1e-12

@dataclass
class ProjectionState:
    '''
    Neighbourhood bookkeeping for a soft projection

    neighbor_indices: (..., M, k) indices into P, nearest first
    distances: (..., M, k) Euclidean distances to those neighbours
    weights: (..., M, k) projection weights
    temperature: the temperature used
    '''
    neighbor_indices: np.ndarray
    distances: np.ndarray
    weights: Tensor
    temperature: Tensor

    @property
    def k(self) -> int:
        return self.neighbor_indices.shape[-1]

    def cloud(self, b: int) -> 'ProjectionState':
        '''The state of one cloud of a batched projection'''
        if self.neighbor_indices.ndim != 3:
            return self
        return ProjectionState(self.neighbor_indices[b], self.distances[b], self.weights.detach()[b], self.temperature)

    def validate(self, tol: float = 1e-9):
        w = self.weights.data
        if w.shape != self.neighbor_indices.shape or w.shape != self.distances.shape:
            raise ProjectionError('projection state arrays disagree in shape')
        if np.any(w < 0.0) or np.any(w > 1.0) or np.any(np.abs(np.sum(w, axis=-1) - 1.0) > tol):
            raise ProjectionError('projection weights are not a distribution')

def _temperature_tensor(t: Union[Tensor, float]) -> Tensor:
    t = t if isinstance(t, Tensor) else Tensor(float(t))
    if t.size != 1:
        raise ProjectionError('temperature must be a single value, got shape %r'%(t.shape,))
    value = float(t.data.reshape(-1)[0])
    if not np.isfinite(value) or value <= 0.0:
        raise ProjectionError('temperature must be positive, got %r (broken schedule?)'%value)
    return t

def projection_weights(distances: Union[Tensor, np.ndarray], t: Union[Tensor, float]) -> Tensor:
    '''softmax(-d**2 / t**2) over the last axis of _distances_'''
    t = _temperature_tensor(t)
    d = distances if isinstance(distances, Tensor) else Tensor(np.asarray(distances, dtype=np.float64))
    if d.ndim == 0 or d.shape[-1] < 1:
        raise ProjectionError('need at least one neighbour distance per query')
    return ad.softmax_neg_sq_dist(ad.square(d), t)

def soft_project(P: Union[np.ndarray, Tensor], Q: Union[Tensor, np.ndarray], k: int, t: Union[Tensor, float]) -> Tuple[Tensor, ProjectionState]:
    '''Project the points of Q onto P

    P is (N, 3) or (B, N, 3); Q is (M, 3) or (B, M, 3) to match.

    Returns (R, state) with R shaped like Q.
    '''
    t = _temperature_tensor(t)
    Qt = Q if isinstance(Q, Tensor) else Tensor(np.asarray(Q, dtype=np.float64))
    Pd = P.data if isinstance(P, Tensor) else np.asarray(P, dtype=np.float64)
    if Qt.ndim != Pd.ndim or Qt.shape[-1] != 3 or Pd.shape[-1] != 3 or (Pd.ndim == 3 and Pd.shape[0] != Qt.shape[0]):
        raise ProjectionError('clouds do not match: P %r, Q %r'%(Pd.shape, Qt.shape))
    if Qt.shape[-2] == 0:
        raise ProjectionError('nothing to project, Q is empty')
    if k < 1 or k > Pd.shape[-2]:
        raise ProjectionError('k=%i neighbours requested from %i points'%(k, Pd.shape[-2]))
    if Pd.ndim == 2:
        idx, dist = SpatialIndex(Pd).query(Qt.data, k)
    else:
        found = [SpatialIndex(Pd[b]).query(Qt.data[b], k) for b in range(Pd.shape[0])]
        idx = np.stack([f[0] for f in found])
        dist = np.stack([f[1] for f in found])
    Pt = P if isinstance(P, Tensor) else Tensor(Pd)
    neighbors = ad.gather(Pt, idx)
    diff = neighbors - ad.reshape(Qt, Qt.shape[:-1] + (1, 3))
    sq = ad.sum(ad.square(diff), axis=-1)
    weights = ad.softmax_neg_sq_dist(sq, t)
    R = ad.sum(ad.reshape(weights, weights.shape + (1,)) * neighbors, axis=-2)
    return R, ProjectionState(idx, dist, weights, t)

def projection_loss(t: Tensor) -> Tensor:
    '''t squared, pushing the temperature down'''
    return ad.square(t)

def _complete(P: np.ndarray, picks: np.ndarray, m: int) -> List[int]:
    _, first = np.unique(picks, return_index=True)
    unique = [int(i) for i in picks[np.sort(first)]]
    if len(unique) >= m:
        return unique[:m]
    return fps(P, m, selected=unique)

def hard_sample(P: Union[np.ndarray, Tensor], state: ProjectionState, m: int) -> Tuple[np.ndarray, List[int]]:
    '''Select m points of P from a single cloud projection state

    Each query keeps its highest weight neighbour; repeats are dropped in
    order of first appearance and the remainder is filled by farthest point
    sampling seeded with the kept points.

    Returns (points, indices).
    '''
    P = as_point_cloud(P)
    if m < 1 or m > P.shape[0]:
        raise ProjectionError('cannot sample %i points from %i'%(m, P.shape[0]))
    if state.neighbor_indices.ndim != 2:
        raise ProjectionError('hard_sample works on one cloud, use state.cloud(b)')
    w = state.weights.data
    rows = np.arange(w.shape[0])
    picks = state.neighbor_indices[rows, np.argmax(w, axis=-1)]
    indices = _complete(P, picks, m)
    return P[indices], indices

def match_nearest(P: Union[np.ndarray, Tensor], Q: Union[np.ndarray, Tensor], m: int) -> Tuple[np.ndarray, List[int]]:
    '''Match each point of Q to its nearest point of P, then dedupe and
    complete like hard_sample().
    '''
    P = as_point_cloud(P)
    Q = as_point_cloud(Q, 'Q')
    if m < 1 or m > P.shape[0]:
        raise ProjectionError('cannot sample %i points from %i'%(m, P.shape[0]))
    idx, _ = SpatialIndex(P).query(Q, 1)
    indices = _complete(P, idx[:, 0], m)
    return P[indices], indices

class TemperatureKind(enum.Enum):
    LEARNED = 'learned'
    CONSTANT = 'constant'
    LINEAR_RECTIFIED = 'linear_rectified'
    EXPONENTIAL = 'exponential'

    def __str__(self):
        return self.value

@dataclass
class TemperatureProfile:
    '''
    How t**2 evolves over training

    t0_sq: initial t**2
    floor: minimum t (t**2 never drops below floor**2)
    decay_fraction: share of the epochs a linear profile takes to reach the floor
    exp_rate: per-epoch rate of the exponential profile
    '''
    kind: TemperatureKind = TemperatureKind.LEARNED
    t0_sq: float = 1.0
    floor: float = 0.01
    decay_fraction: float = 0.6
    exp_rate: float = 0.02

    @classmethod
    def fromString(cls, kind: str, **kwargs) -> 'TemperatureProfile':
        try:
            tk = TemperatureKind(kind)
        except ValueError:
            raise ProjectionError('unknown temperature profile %r, use one of: %s'%(kind, list_join([k.value for k in TemperatureKind], ', ', ' or ')))
        return cls(kind=tk, **kwargs)

def temperature_schedule(profile: TemperatureProfile, epoch: int, total_epochs: int) -> Optional[float]:
    '''t**2 for _epoch_, or None when the temperature is learned'''
    if not isinstance(profile.kind, TemperatureKind):
        raise ProjectionError('invalid temperature profile kind %r'%(profile.kind,))
    if epoch < 0 or epoch >= total_epochs:
        raise ProjectionError('epoch %i outside 0..%i'%(epoch, total_epochs - 1))
    floor_sq = profile.floor * profile.floor
    if profile.kind is TemperatureKind.LEARNED:
        return None
    if profile.kind is TemperatureKind.CONSTANT:
        return 1.0
    if profile.kind is TemperatureKind.LINEAR_RECTIFIED:
        e_decay = max(1.0, profile.decay_fraction * total_epochs)
        return max(profile.t0_sq * (1.0 - epoch / e_decay), floor_sq)
    return max(profile.t0_sq * float(np.exp(-profile.exp_rate * epoch)), floor_sq)

def _nearest_onehot(state: ProjectionState) -> np.ndarray:
    nearest = np.argmin(state.distances, axis=-1)
    onehot = np.zeros(state.distances.shape)
    np.put_along_axis(onehot, nearest[..., None], 1.0, axis=-1)
    return onehot

def weight_cross_entropy_loss(state: ProjectionState) -> Tensor:
    '''Mean over queries of -log of the nearest neighbour's weight'''
    w_near = ad.sum(state.weights * _nearest_onehot(state), axis=-1)
    return ad.mean(ad.neg(ad.log(w_near, floor=WEIGHT_FLOOR)))

def weight_entropy_loss(state: ProjectionState) -> Tensor:
    '''Mean over queries of the entropy of the weights'''
    w = state.weights
    return ad.mean(ad.neg(ad.sum(w * ad.log(w, floor=WEIGHT_FLOOR), axis=-1)))

def mean_neighbor_weights(state: ProjectionState) -> np.ndarray:
    '''Mean weight per neighbour rank, nearest first'''
    return np.mean(state.weights.data.reshape(-1, state.k), axis=0)
