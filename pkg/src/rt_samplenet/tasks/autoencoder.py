#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tasks/autoencoder.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet point cloud autoencoder task module.
#
# This provides the AutoencoderNetwork class and registers it with the
# task_factory.
#
'''
Autoencoder task

Encoder: shared per-point MLP ending in the latent width, max pooled to a
latent code. Decoder: fully connected layers to n_out points. Trained with
the Chamfer distance to the complete input cloud, so a sampled input is
always scored against the full cloud it came from.
'''

from typing import List, Union

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..exceptions import ShapeError
from ..geometry import chamfer
from ..layers import FullyConnected, SharedMLP
from ..profiling import LayerSpec, mlp_specs
from ..task_factory import TaskConfig, TaskNetwork, add_task_network

class AutoencoderNetwork(TaskNetwork):
    '''
    AutoencoderNetwork class
    ------------------------
    '''
    def __init__(self, config: TaskConfig, rng: np.random.Generator):
        super().__init__(config, rng)
        self.__encoder_widths = tuple(config.conv_filters[:-1]) + (config.latent,)
        self.__decoder_widths = tuple(config.decoder_widths) + (config.n_out * 3,)
        self.encoder = self.addModule('encoder', SharedMLP(3, self.__encoder_widths, rng))
        self.decoder = self.addModule('decoder', FullyConnected(config.latent, self.__decoder_widths, rng))

    @classmethod
    def name(cls) -> str:
        return 'autoencoder'

    @classmethod
    def metricName(cls) -> str:
        return 'reconstruction_error'

    def forward(self, X: Union[np.ndarray, Tensor]) -> Tensor:
        '''(N, 3) or (B, N, 3) clouds, N <= n, to n_out reconstructed points'''
        shape = X.shape if isinstance(X, Tensor) else np.shape(X)
        if len(shape) not in (2, 3) or shape[-1] != 3 or shape[-2] < 1 or shape[-2] > self.config.n:
            raise ShapeError('autoencoder_forward', [tuple(shape)], 'expected 1..%i input points'%self.config.n)
        code = ad.max_over_axis(self.encoder(X), -2)
        out = self.decoder(code)
        return ad.reshape(out, tuple(shape[:-2]) + (self.config.n_out, 3))

    def taskLoss(self, clouds: List[Tensor], batch) -> Tensor:
        return ad.mean(chamfer(self(clouds[0]), batch.clouds))

    def evaluate(self, clouds: List[np.ndarray], batch) -> np.ndarray:
        '''Chamfer distance of each reconstruction to its complete cloud'''
        with ad.no_grad():
            return np.atleast_1d(chamfer(self(clouds[0]), batch.clouds).data).copy()

    def layerSpecs(self, points: int) -> List[LayerSpec]:
        return mlp_specs('point', 3, self.__encoder_widths, points) + mlp_specs('fc', self.config.latent, self.__decoder_widths, 1)

def autoencoder_forward(model: AutoencoderNetwork, X: Union[np.ndarray, Tensor]) -> Tensor:
    return model(X)

add_task_network(AutoencoderNetwork)
