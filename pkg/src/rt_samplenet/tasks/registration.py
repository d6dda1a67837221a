#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tasks/registration.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet rotation registration task module.
#
# This provides the RegistrationNetwork class and registers it with the
# task_factory.
#
'''
Registration task

Estimates the rotation taking a source cloud S back onto a template T, where
the data pairs are built as S = T @ R_gt.T. A shared per-point encoder is
applied to both clouds, the pooled features are concatenated and a fully
connected head emits a quaternion which is normalised to unit length.

The registered source is S @ R_pred, so R_pred = R_gt registers perfectly.
The same sampler is applied to source and template.
'''

from typing import List, Union

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..exceptions import ShapeError
from ..geometry import chamfer
from ..layers import FullyConnected, SharedMLP
from ..profiling import LayerSpec, mlp_specs
from ..rotation import Rotation, quaternion_to_matrix, rotation_error, rotation_matrix_loss
from ..task_factory import TaskConfig, TaskNetwork, add_task_network

def registration_loss(S_registered, T, R_pred: Tensor, R_gt) -> Tensor:
    '''chamfer(S_registered, T) + ||R_pred^-1 @ R_gt - I||_F**2

    Batched input is averaged over the batch.
    '''
    loss = chamfer(S_registered, T) + rotation_matrix_loss(R_pred, R_gt)
    if loss.ndim > 0:
        loss = ad.mean(loss)
    return loss

class RegistrationNetwork(TaskNetwork):
    '''
    RegistrationNetwork class
    -------------------------
    '''
    def __init__(self, config: TaskConfig, rng: np.random.Generator):
        super().__init__(config, rng)
        self.encoder = self.addModule('encoder', SharedMLP(3, config.conv_filters, rng))
        self.head = self.addModule('head', FullyConnected(2 * config.conv_filters[-1], list(config.head_widths) + [4], rng))
        # start near the identity rotation
        self.head.lastDense().bias.data[...] = np.array([1.0, 0.0, 0.0, 0.0])

    @classmethod
    def name(cls) -> str:
        return 'registration'

    @classmethod
    def metricName(cls) -> str:
        return 'rotation_error'

    def forward(self, S: Union[np.ndarray, Tensor], T: Union[np.ndarray, Tensor]) -> Tensor:
        '''Unit quaternions (4,) or (B, 4) rotating S onto T'''
        s_shape = S.shape if isinstance(S, Tensor) else np.shape(S)
        t_shape = T.shape if isinstance(T, Tensor) else np.shape(T)
        if tuple(s_shape) != tuple(t_shape) or len(s_shape) not in (2, 3) or s_shape[-1] != 3:
            raise ShapeError('registration_forward', [tuple(s_shape), tuple(t_shape)], 'source and template must match')
        fs = ad.max_over_axis(self.encoder(S), -2)
        ft = ad.max_over_axis(self.encoder(T), -2)
        q = self.head(ad.concat([fs, ft], axis=-1))
        norm = ad.sqrt(ad.sum(ad.square(q), axis=-1, keepdims=True))
        return q / norm

    def sampleInputs(self, batch) -> List[np.ndarray]:
        return [batch.sources, batch.clouds]

    def taskLoss(self, clouds: List[Tensor], batch) -> Tensor:
        S, T = clouds
        R_pred = quaternion_to_matrix(self(S, T))
        return registration_loss(ad.matmul(S, R_pred), T, R_pred, batch.rotations)

    def evaluate(self, clouds: List[np.ndarray], batch) -> np.ndarray:
        '''Rotation error in degrees per pair'''
        with ad.no_grad():
            q = self(clouds[0], clouds[1]).data.reshape(-1, 4)
        gt = np.asarray(batch.quaternions).reshape(-1, 4)
        return np.array([rotation_error(Rotation(p), Rotation(g)) for p, g in zip(q, gt)])

    def swapConsistency(self, S: np.ndarray, T: np.ndarray) -> np.ndarray:
        '''Rotation error between the estimate for (S, T) and the inverse of
        the estimate for (T, S), per pair.
        '''
        with ad.no_grad():
            forward = self(S, T).data.reshape(-1, 4)
            backward = self(T, S).data.reshape(-1, 4)
        return np.array([rotation_error(Rotation(f), Rotation(b).inverse()) for f, b in zip(forward, backward)])

    def layerSpecs(self, points: int) -> List[LayerSpec]:
        c = self.config
        specs = mlp_specs('point', 3, c.conv_filters, 2 * points)
        return specs + mlp_specs('fc', 2 * c.conv_filters[-1], list(c.head_widths) + [4], 1)

def registration_forward(model: RegistrationNetwork, S, T) -> Rotation:
    '''Rotation estimate for a single (S, T) pair'''
    with ad.no_grad():
        q = model(S, T).data
    if q.ndim != 1:
        raise ShapeError('registration_forward', [q.shape], 'single pair expected')
    return Rotation(q)

add_task_network(RegistrationNetwork)
