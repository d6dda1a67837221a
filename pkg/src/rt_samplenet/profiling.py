#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: profiling.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet computation and memory accounting module.
#
'''
Computation and memory accounting
=================================

Networks describe themselves as a list of LayerSpec entries. Multiply
accumulate operations (MACs) are counted for every per-point and fully
connected layer; memory is the parameter count (weights and biases).

Two presets are provided. "full" is the full size sampler and the full
PointNet classifier (input and feature transform nets, 1024 input points).
"desk" is the pair of networks this package trains.
'''

from dataclasses import dataclass
from typing import List, Optional, Sequence

__all__ = ['LayerSpec', 'mlp_specs', 'MacMemoryReport', 'mac_memory_report',
           'NoSampler', 'FullSampleNet', 'FullPointNet']

@dataclass(frozen=True)
class LayerSpec:
    '''
    kind: "point" (applied to each point), "fc" (applied once) or
          "point_matmul" (each point multiplied by a learnt fan_in x fan_out
          transform, no parameters of its own)
    '''
    kind: str
    fan_in: int
    fan_out: int
    points: int = 1

    def macs(self) -> int:
        return self.points * self.fan_in * self.fan_out

    def params(self) -> int:
        if self.kind == 'point_matmul':
            return 0
        return self.fan_in * self.fan_out + self.fan_out

def mlp_specs(kind: str, fan_in: int, widths: Sequence[int], points: int) -> List[LayerSpec]:
    specs = []
    prev = fan_in
    for width in widths:
        specs += [LayerSpec(kind, prev, int(width), points if kind != 'fc' else 1)]
        prev = int(width)
    return specs

def total_macs(specs: Sequence[LayerSpec]) -> int:
    return sum([s.macs() for s in specs])

def total_params(specs: Sequence[LayerSpec]) -> int:
    return sum([s.params() for s in specs])

class NoSampler(object):
    '''A sampler that costs nothing'''
    def layerSpecs(self, n: int, m: int) -> List[LayerSpec]:
        return []

class FullSampleNet(object):
    '''Full size sampler: MLP(64,64,64,128,128), FC(256,256,256,m*3)'''
    conv_filters = (64, 64, 64, 128, 128)
    fc_widths = (256, 256, 256)

    def layerSpecs(self, n: int, m: int) -> List[LayerSpec]:
        return mlp_specs('point', 3, self.conv_filters, n) + mlp_specs('fc', self.conv_filters[-1], list(self.fc_widths) + [m * 3], 1)

class FullPointNet(object):
    '''Full PointNet classifier with input (3x3) and feature (64x64) transforms'''
    def __init__(self, classes: int = 40):
        self.classes = classes

    @staticmethod
    def __tnet(d: int, points: int) -> List[LayerSpec]:
        return mlp_specs('point', d, (64, 128, 1024), points) + mlp_specs('fc', 1024, (512, 256, d * d), 1)

    def layerSpecs(self, points: int) -> List[LayerSpec]:
        specs = self.__tnet(3, points)
        specs += [LayerSpec('point_matmul', 3, 3, points)]
        specs += mlp_specs('point', 3, (64, 64), points)
        specs += self.__tnet(64, points)
        specs += [LayerSpec('point_matmul', 64, 64, points)]
        specs += mlp_specs('point', 64, (64, 128, 1024), points)
        specs += mlp_specs('fc', 1024, (512, 256, self.classes), 1)
        return specs

@dataclass
class MacMemoryReport:
    n: int
    m: int
    sampler_macs: int
    sampler_params: int
    task_macs_full: int
    task_macs_sampled: int
    task_params: int

    @property
    def computation_reduction(self) -> float:
        '''Percent of the full input task cost saved by sampling first'''
        return 100.0 * (1.0 - (self.sampler_macs + self.task_macs_sampled) / self.task_macs_full)

    @property
    def memory_increase(self) -> float:
        '''Sampler plus task parameters as a percent of the task parameters'''
        return 100.0 * (self.sampler_params + self.task_params) / self.task_params

def mac_memory_report(sampler, task, m: int, n: Optional[int] = None) -> MacMemoryReport:
    '''Account for sampling m of n points before running the task network

    _sampler_ has layerSpecs(n, m); _task_ has layerSpecs(points).
    '''
    if n is None:
        n = 1024
    sampler_specs = sampler.layerSpecs(n, m)
    full = task.layerSpecs(n)
    return MacMemoryReport(
            n=n, m=m,
            sampler_macs=total_macs(sampler_specs),
            sampler_params=total_params(sampler_specs),
            task_macs_full=total_macs(full),
            task_macs_sampled=total_macs(task.layerSpecs(m)),
            task_params=total_params(full),
            )
