#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: task_factory.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet task network factory module.
# This module will load the modules in the tasks subdirectory and keep a
# registry of the TaskNetwork derived classes found there.
#
# To create a task network by kind use:
#     from rt_samplenet.task_factory import create_task_network
#
'''
Task Factory module

This collects together all registered TaskNetwork classes. TaskNetwork
classes are automatically included from the tasks subdirectory and register
themselves by calling task_factory.add_task_network() giving the class as the
parameter.

A TaskNetwork is the frozen downstream network a sampler is trained against.
It says which clouds the sampler is applied to (sampleInputs), how to score
sampled clouds while training (taskLoss) and how to measure them afterwards
(evaluate).
'''

import importlib
import logging
import pkgutil

from dataclasses import dataclass
from typing import List, Optional, Sequence, Type

import numpy as np

from .autodiff import Tensor
from .exceptions import IncompatibleError
from .layers import Module
from .profiling import LayerSpec
from .utils import list_join

__task_networks = []

def add_task_network(cls):
    '''
    Register a TaskNetwork class
    '''
    global __task_networks
    __task_networks += [cls]

def list_registered_task_networks():
    '''
    Return a list of registered TaskNetwork classes
    '''
    global __task_networks
    return list(__task_networks)

def task_network_class(kind: str) -> Type['TaskNetwork']:
    '''Find the registered TaskNetwork class for _kind_'''
    for cls in list_registered_task_networks():
        if cls.name() == kind:
            return cls
    raise IncompatibleError('unknown task %r, use one of: %s'%(kind, list_join([c.name() for c in list_registered_task_networks()], ', ', ' or ')))

def create_task_network(kind: str, config: 'TaskConfig', rng: np.random.Generator) -> 'TaskNetwork':
    return task_network_class(kind)(config, rng)

@dataclass
class TaskConfig:
    '''Task network sizes

    n: points per input cloud
    classes: classifier outputs
    conv_filters: shared per-point MLP widths of the encoders
    fc_widths: hidden widths of the classifier and registration heads
    latent: autoencoder code size
    n_out: autoencoder reconstruction size
    decoder_widths: hidden widths of the autoencoder decoder
    head_widths: hidden widths of the registration head
    '''
    n: int = 256
    classes: int = 8
    conv_filters: Sequence[int] = (32, 64, 128)
    fc_widths: Sequence[int] = (64,)
    latent: int = 64
    n_out: int = 256
    decoder_widths: Sequence[int] = (128, 256)
    head_widths: Sequence[int] = (128, 64)

class TaskNetwork(Module):
    '''
    Base class for task networks
    '''
    def __init__(self, config: TaskConfig, rng: np.random.Generator):
        '''TaskNetwork constructor

        Takes the task configuration which is accessible to child classes
        via the config member variable.
        '''
        super().__init__()
        self.config = config
        self.log = logging.getLogger(self.__class__.__name__)

    @classmethod
    def name(cls) -> Optional[str]:
        '''
        Return the task kind as used in configuration files.

        This must be implemented by classes inheriting TaskNetwork.
        '''
        return None

    @classmethod
    def metricName(cls) -> str:
        '''
        Return the name of the per-cloud metric returned by evaluate().
        '''
        return 'metric'

    def sampleInputs(self, batch) -> List[np.ndarray]:
        '''
        The clouds of _batch_ a sampler is applied to, each (B, n, 3).

        Defaults to the batch clouds.
        '''
        return [batch.clouds]

    def taskLoss(self, clouds: List[Tensor], batch) -> Tensor:
        '''
        Scalar task loss for sampled versions of sampleInputs(batch).

        This must be implemented by classes inheriting TaskNetwork.
        '''
        raise NotImplementedError

    def evaluate(self, clouds: List[np.ndarray], batch) -> np.ndarray:
        '''
        Per-cloud metric for (sampled versions of) sampleInputs(batch).

        This must be implemented by classes inheriting TaskNetwork.
        '''
        raise NotImplementedError

    def layerSpecs(self, points: int) -> List[LayerSpec]:
        '''
        Layer shapes for MAC and memory accounting with _points_ inputs.

        This must be implemented by classes inheriting TaskNetwork.
        '''
        raise NotImplementedError

    def meta(self) -> dict:
        '''Checkpoint metadata describing this network'''
        c = self.config
        return {
            'kind': self.name(),
            'n': str(c.n),
            'classes': str(c.classes),
            'conv_filters': ','.join([str(w) for w in c.conv_filters]),
            'fc_widths': ','.join([str(w) for w in c.fc_widths]),
            'latent': str(c.latent),
            'n_out': str(c.n_out),
            'decoder_widths': ','.join([str(w) for w in c.decoder_widths]),
            'head_widths': ','.join([str(w) for w in c.head_widths]),
            }

    @staticmethod
    def configFromMeta(meta: dict) -> TaskConfig:
        '''Rebuild a TaskConfig from checkpoint metadata'''
        def ints(key):
            return tuple([int(v) for v in meta[key].split(',') if len(v) > 0])
        try:
            return TaskConfig(n=int(meta['n']), classes=int(meta['classes']),
                              conv_filters=ints('conv_filters'), fc_widths=ints('fc_widths'),
                              latent=int(meta['latent']), n_out=int(meta['n_out']),
                              decoder_widths=ints('decoder_widths'),
                              head_widths=ints('head_widths'))
        except (KeyError, ValueError) as err:
            raise IncompatibleError('task checkpoint metadata incomplete: %s'%err)

# Load all task modules from the tasks subdirectory
from . import tasks as __tasks_pkg
for module_info in pkgutil.iter_modules(__tasks_pkg.__path__):
    importlib.import_module('.tasks.' + module_info.name, __package__)
