#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tasks/classifier.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet shape classifier task module.
#
# This provides the ClassifierNetwork class and registers it with the
# task_factory.
#
'''
Classifier task

A PointNet-style classifier without input or feature transforms: shared
per-point MLP, global max pooling and fully connected layers to one logit
per class. Pooling makes the logits independent of point order and count.
'''

from typing import List, Union

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..exceptions import DataError
from ..layers import FullyConnected, SharedMLP
from ..profiling import LayerSpec, mlp_specs
from ..task_factory import TaskConfig, TaskNetwork, add_task_network

def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    '''Mean softmax cross-entropy of (B, C) logits against integer labels'''
    labels = np.asarray(labels).reshape(-1)
    if logits.ndim != 2 or labels.shape[0] != logits.shape[0]:
        raise DataError('%i labels for logits of shape %r'%(labels.shape[0], logits.shape))
    classes = logits.shape[1]
    if labels.size > 0 and (labels.min() < 0 or labels.max() >= classes):
        raise DataError('labels must be in 0..%i'%(classes - 1))
    onehot = np.zeros(logits.shape)
    onehot[np.arange(labels.shape[0]), labels] = 1.0
    z = logits - np.max(logits.data, axis=-1, keepdims=True)
    lse = ad.log(ad.sum(ad.exp(z), axis=-1))
    return ad.mean(lse - ad.sum(z * onehot, axis=-1))

class ClassifierNetwork(TaskNetwork):
    '''
    ClassifierNetwork class
    -----------------------
    '''
    def __init__(self, config: TaskConfig, rng: np.random.Generator):
        super().__init__(config, rng)
        self.mlp = self.addModule('mlp', SharedMLP(3, config.conv_filters, rng))
        self.fc = self.addModule('fc', FullyConnected(config.conv_filters[-1], list(config.fc_widths) + [config.classes], rng))

    @classmethod
    def name(cls) -> str:
        return 'classifier'

    @classmethod
    def metricName(cls) -> str:
        return 'accuracy'

    def forward(self, X: Union[np.ndarray, Tensor]) -> Tensor:
        '''(N, 3) or (B, N, 3) clouds to (classes,) or (B, classes) logits'''
        return self.fc(ad.max_over_axis(self.mlp(X), -2))

    def taskLoss(self, clouds: List[Tensor], batch) -> Tensor:
        return cross_entropy(self(clouds[0]), batch.labels)

    def evaluate(self, clouds: List[np.ndarray], batch) -> np.ndarray:
        '''1.0 for each correctly classified cloud, else 0.0'''
        with ad.no_grad():
            logits = self(clouds[0]).data
        return (np.argmax(logits, axis=-1) == np.asarray(batch.labels)).astype(np.float64)

    def layerSpecs(self, points: int) -> List[LayerSpec]:
        c = self.config
        return mlp_specs('point', 3, c.conv_filters, points) + mlp_specs('fc', c.conv_filters[-1], list(c.fc_widths) + [c.classes], 1)

def classifier_forward(model: ClassifierNetwork, X: Union[np.ndarray, Tensor]) -> Tensor:
    return model(X)

add_task_network(ClassifierNetwork)
