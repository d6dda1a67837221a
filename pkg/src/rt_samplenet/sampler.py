#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: sampler.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet sampler network module.
#
'''
Sampler network
===============

The sampler applies a shared per-point MLP to the input cloud, max-pools to a
global feature and regresses m points (n points for a progressive sampler,
whose prefixes serve every control size) with fully connected layers. The
temperature of the soft projection is one of its parameters.

The training objective combines the task loss on the projected points, the
simplification loss keeping the generated points close to the input and the
t**2 projection loss.
'''

import logging

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import IncompatibleError, ProjectionError, ShapeError
from .geometry import nn_loss_avg, nn_loss_max
from .layers import FullyConnected, Module, SharedMLP
from .profiling import LayerSpec, mlp_specs
from .projection import projection_loss, soft_project

__all__ = ['SamplerConfig', 'SamplerModel', 'default_control_sizes',
           'samplenet_forward', 'simplification_loss', 'sampler_total_loss',
           'progressive_total_loss', 'simplified_total_loss']

def default_control_sizes(n: int) -> List[int]:
    '''Powers of two up to n'''
    sizes = []
    c = 1
    while c <= n:
        sizes += [c]
        c *= 2
    return sizes

@dataclass
class SamplerConfig:
    '''Sampler architecture and objective weights'''
    n: int = 256
    m: int = 32
    k: int = 7
    conv_filters: Sequence[int] = (16, 32, 64)
    fc_widths: Sequence[int] = (128,)
    alpha: float = 30.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 0.0
    lam: float = 1.0
    t_floor: float = 0.01
    progressive: bool = False
    control_sizes: Optional[Sequence[int]] = None

    def outputPoints(self) -> int:
        return self.n if self.progressive else self.m

    def controlSizes(self) -> List[int]:
        sizes = list(self.control_sizes) if self.control_sizes is not None else default_control_sizes(self.n)
        for prev, cur in zip(sizes, sizes[1:]):
            if cur <= prev:
                raise IncompatibleError('control sizes must be strictly increasing: %r'%(sizes,))
        for c in sizes:
            if c < 1 or c > self.n:
                raise IncompatibleError('control size %i outside 1..%i'%(c, self.n))
        return sizes

class SamplerModel(Module):
    '''
    SamplerModel class
    ------------------

    Learns to generate points for a frozen task network.
    '''
    def __init__(self, config: SamplerConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.log = logging.getLogger(self.__class__.__name__)
        if config.m < 1 or config.m > config.n:
            raise IncompatibleError('sample size %i must be between 1 and n=%i'%(config.m, config.n))
        if config.k < 1 or config.k > config.n:
            raise IncompatibleError('neighbourhood size %i must be between 1 and n=%i'%(config.k, config.n))
        if config.progressive:
            config.controlSizes()
        self.mlp = self.addModule('mlp', SharedMLP(3, config.conv_filters, rng))
        self.fc = self.addModule('fc', FullyConnected(config.conv_filters[-1], list(config.fc_widths) + [config.outputPoints() * 3], rng))
        self.temperature = self.addParameter('temperature', np.array(1.0))

    def forward(self, P: Union[np.ndarray, Tensor]) -> Tensor:
        '''(n, 3) or (B, n, 3) input to (m, 3) or (B, m, 3) generated points'''
        shape = P.shape if isinstance(P, Tensor) else np.shape(P)
        if len(shape) not in (2, 3) or shape[-1] != 3 or shape[-2] != self.config.n:
            raise ShapeError('samplenet_forward', [tuple(shape)], 'expected %i input points'%self.config.n)
        features = self.mlp(P)
        pooled = ad.max_over_axis(features, -2)
        out = self.fc(pooled)
        return ad.reshape(out, tuple(shape[:-2]) + (self.config.outputPoints(), 3))

    def temperatureValue(self) -> Tensor:
        '''The temperature clipped at its floor'''
        return ad.clip_min(self.temperature, self.config.t_floor)

    def setTemperatureSquared(self, t_sq: float):
        '''Fix t for a scheduled temperature profile'''
        if t_sq <= 0.0:
            raise ProjectionError('scheduled t**2 must be positive, got %r'%t_sq)
        self.temperature.data[...] = np.sqrt(t_sq)

    def clampTemperature(self):
        if self.temperature.data < self.config.t_floor:
            self.temperature.data[...] = self.config.t_floor

    def trainableParameters(self, learn_temperature: bool = True) -> List[Tensor]:
        return [p for name, p in self.namedParameters() if learn_temperature or name != 'temperature']

    def layerSpecs(self, n: Optional[int] = None, m: Optional[int] = None) -> List[LayerSpec]:
        '''Layer shapes for MAC and memory accounting'''
        if n is None:
            n = self.config.n
        if m is None or self.config.progressive:
            m = self.config.outputPoints()
        fc_widths = list(self.config.fc_widths) + [m * 3]
        return mlp_specs('point', 3, self.config.conv_filters, n) + mlp_specs('fc', self.config.conv_filters[-1], fc_widths, 1)

    def meta(self) -> dict:
        '''Checkpoint metadata describing this sampler'''
        c = self.config
        return {
            'kind': 'sampler',
            'n': str(c.n),
            'm': str(c.m),
            'k': str(c.k),
            'conv_filters': ','.join([str(w) for w in c.conv_filters]),
            'fc_widths': ','.join([str(w) for w in c.fc_widths]),
            't_floor': repr(c.t_floor),
            'progressive': str(c.progressive).lower(),
            }

    @staticmethod
    def configFromMeta(meta: dict) -> SamplerConfig:
        '''Rebuild the architecture part of a SamplerConfig from checkpoint metadata'''
        def ints(key):
            return tuple([int(v) for v in meta[key].split(',') if len(v) > 0])
        try:
            if meta.get('kind') != 'sampler':
                raise IncompatibleError('checkpoint holds a %r, not a sampler'%meta.get('kind'))
            return SamplerConfig(n=int(meta['n']), m=int(meta['m']), k=int(meta['k']),
                                 conv_filters=ints('conv_filters'), fc_widths=ints('fc_widths'),
                                 t_floor=float(meta['t_floor']), progressive=meta['progressive'] == 'true')
        except (KeyError, ValueError) as err:
            raise IncompatibleError('sampler checkpoint metadata incomplete: %s'%err)

def samplenet_forward(model: SamplerModel, P: Union[np.ndarray, Tensor]) -> Tensor:
    return model(P)

def simplification_loss(Q, P, beta: float = 1.0, gamma: float = 1.0, delta: float = 0.0) -> Tensor:
    '''L_a(Q, P) + beta L_m(Q, P) + (gamma + delta |Q|) L_a(P, Q)

    Batched clouds are averaged over the batch.
    '''
    size = Q.shape[-2] if isinstance(Q, Tensor) else np.shape(Q)[-2]
    loss = nn_loss_avg(Q, P) + beta * nn_loss_max(Q, P) + (gamma + delta * size) * nn_loss_avg(P, Q)
    if loss.ndim > 0:
        loss = ad.mean(loss)
    return loss

def _as_list(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]

def sampler_total_loss(task_loss_R: Tensor, Q, P, alpha: float, lam: float, t, beta: float = 1.0, gamma: float = 1.0, delta: float = 0.0) -> Tensor:
    '''task loss + alpha * simplification loss + lam * t**2

    Q and P may be lists of matching clouds (the sampler applied to several
    inputs); their simplification losses are summed.
    '''
    Qs, Ps = _as_list(Q), _as_list(P)
    if len(Qs) != len(Ps):
        raise IncompatibleError('%i generated clouds for %i inputs'%(len(Qs), len(Ps)))
    total = task_loss_R
    for q, p in zip(Qs, Ps):
        total = total + alpha * simplification_loss(q, p, beta, gamma, delta)
    return total + lam * projection_loss(t)

def simplified_total_loss(task_loss_Q: Tensor, Q, P, alpha: float, beta: float = 1.0, gamma: float = 1.0, delta: float = 0.0) -> Tensor:
    '''Simplification-only objective: task loss on the raw generated points
    plus alpha * simplification loss, no projection.
    '''
    total = task_loss_Q
    for q, p in zip(_as_list(Q), _as_list(P)):
        total = total + alpha * simplification_loss(q, p, beta, gamma, delta)
    return total

def progressive_total_loss(model: SamplerModel, P, task, batch=None, control_sizes: Optional[Sequence[int]] = None) -> Tensor:
    '''Sum over control sizes c of task(R_c) + alpha * simplification(Q_c, P),
    plus lam * t**2, where Q_c is the first c generated points and R_c its
    soft projection.
    '''
    c = model.config
    sizes = list(control_sizes) if control_sizes is not None else c.controlSizes()
    for size in sizes:
        if size < 1 or size > c.outputPoints():
            raise IncompatibleError('control size %i outside 1..%i'%(size, c.outputPoints()))
    Ps = _as_list(P)
    Qs = [model(p) for p in Ps]
    t = model.temperatureValue()
    total = None
    for size in sizes:
        prefixes = [q[..., :size, :] for q in Qs]
        Rs = [soft_project(p, q, c.k, t)[0] for p, q in zip(Ps, prefixes)]
        term = task.taskLoss(Rs, batch)
        for q, p in zip(prefixes, Ps):
            term = term + c.alpha * simplification_loss(q, p, c.beta, c.gamma, c.delta)
        total = term if total is None else total + term
    return total + c.lam * projection_loss(t)
