#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: layers.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet network layers module.
#
'''
Network layers
==============

Module is the parameter container every network derives from. Dense layers
use Glorot uniform initialisation. Hidden layers are followed by a
per-feature affine (scale and shift) and a ReLU.
'''

from collections import OrderedDict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import IncompatibleError

__all__ = ['Module', 'Dense', 'Affine', 'SharedMLP', 'FullyConnected']

class Module(object):
    '''
    Module class
    ------------

    Holds named parameters and child modules.
    '''
    def __init__(self):
        self.__params: 'OrderedDict[str, Tensor]' = OrderedDict()
        self.__modules: 'OrderedDict[str, Module]' = OrderedDict()
        self.__frozen = False

    def addParameter(self, name: str, value: np.ndarray) -> Tensor:
        '''Register a trainable parameter'''
        p = Tensor(value, requires_grad=not self.__frozen)
        self.__params[name] = p
        return p

    def addModule(self, name: str, module: 'Module') -> 'Module':
        self.__modules[name] = module
        return module

    def namedParameters(self, prefix: str = '') -> List[Tuple[str, Tensor]]:
        ret = [(prefix + name, p) for name, p in self.__params.items()]
        for name, module in self.__modules.items():
            ret += module.namedParameters(prefix + name + '.')
        return ret

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.namedParameters()]

    def freeze(self):
        '''Stop all parameters from collecting gradients'''
        self.__frozen = True
        for p in self.parameters():
            p.requires_grad = False
            p.grad = None
        for module in self.__modules.values():
            module.freeze()

    def frozen(self) -> bool:
        return self.__frozen

    def zeroGrad(self):
        for p in self.parameters():
            p.zeroGrad()

    def stateDict(self) -> 'OrderedDict[str, np.ndarray]':
        return OrderedDict([(name, p.data.copy()) for name, p in self.namedParameters()])

    def loadStateDict(self, state: Dict[str, np.ndarray]):
        '''Load parameter values, every name and shape must match'''
        params = OrderedDict(self.namedParameters())
        missing = [name for name in params if name not in state]
        extra = [name for name in state if name not in params]
        if len(missing) > 0 or len(extra) > 0:
            raise IncompatibleError('parameter names differ: missing %r, unexpected %r'%(missing, extra))
        for name, p in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise IncompatibleError('parameter %s has shape %r, checkpoint has %r'%(name, p.shape, value.shape))
            p.data[...] = value

    def numParameters(self) -> int:
        return int(np.sum([p.size for p in self.parameters()]))

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))

class Dense(Module):
    '''x @ W + b over the last axis'''
    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator):
        super().__init__()
        self.fan_in = fan_in
        self.fan_out = fan_out
        self.weight = self.addParameter('weight', glorot_uniform(fan_in, fan_out, rng))
        self.bias = self.addParameter('bias', np.zeros(fan_out))

    def forward(self, x):
        return ad.matmul(x, self.weight) + self.bias

class Affine(Module):
    '''Per-feature scale and shift standing in for normalisation'''
    def __init__(self, width: int):
        super().__init__()
        self.scale = self.addParameter('scale', np.ones(width))
        self.shift = self.addParameter('shift', np.zeros(width))

    def forward(self, x):
        return ad.affine(x, self.scale, self.shift)

class _Stack(Module):
    def __init__(self, fan_in: int, widths: Sequence[int], rng: np.random.Generator, activate_last: bool):
        super().__init__()
        self.widths = tuple(int(w) for w in widths)
        self.fan_in = fan_in
        self.__layers = []
        prev = fan_in
        for i, width in enumerate(self.widths):
            hidden = activate_last or i < len(self.widths) - 1
            dense = self.addModule('dense%i'%i, Dense(prev, width, rng))
            norm = self.addModule('norm%i'%i, Affine(width)) if hidden else None
            self.__layers += [(dense, norm)]
            prev = width

    def forward(self, x):
        for dense, norm in self.__layers:
            x = dense(x)
            if norm is not None:
                x = ad.relu(norm(x))
        return x

    def lastDense(self) -> Dense:
        return self.__layers[-1][0]

    def shapes(self) -> List[Tuple[int, int]]:
        '''(fan_in, fan_out) per dense layer'''
        return [(d.fan_in, d.fan_out) for d, _ in self.__layers]

class SharedMLP(_Stack):
    '''Dense layers applied to every point, (..., N, C) -> (..., N, widths[-1])'''
    def __init__(self, fan_in: int, widths: Sequence[int], rng: np.random.Generator):
        super().__init__(fan_in, widths, rng, activate_last=True)

class FullyConnected(_Stack):
    '''Dense layers on a pooled feature; the last layer is linear'''
    def __init__(self, fan_in: int, widths: Sequence[int], rng: np.random.Generator):
        super().__init__(fan_in, widths, rng, activate_last=False)
