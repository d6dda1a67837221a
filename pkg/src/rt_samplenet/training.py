#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: training.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet training loops module.
#
'''
Training loops
==============

TaskTrainer fits a task network on complete clouds. SamplerTrainer fits a
sampler against a frozen task network, with the soft projection in the loop,
in one of three modes:

  * fixed size: task(R) + alpha * simplification(Q, P) + lam * t**2
  * progressive: the same summed over the control sizes of nested prefixes
  * simplify only: task(Q) + alpha * simplification(Q, P), no projection

Both loops are single threaded and deterministic for a given seed. Per-epoch
records are appended to CSV files as training goes.
'''

import logging
import math
import os.path

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tensor
from .data import ShapeDataset
from .exceptions import DivergenceError, IncompatibleError
from .projection import (TemperatureKind, TemperatureProfile, mean_neighbor_weights, soft_project,
                         temperature_schedule, weight_cross_entropy_loss, weight_entropy_loss)
from .sampler import SamplerModel, progressive_total_loss, sampler_total_loss, simplified_total_loss
from .task_factory import TaskNetwork
from .utils import CsvLog, provenance

__all__ = ['TaskTrainer', 'SamplerTrainer', 'TrainingHistory', 'train_task_network', 'train_sampler']

def _check_finite(loss: Tensor, epoch: int, batch: int):
    value = loss.item()
    if not math.isfinite(value):
        raise DivergenceError('loss became %r at epoch %i batch %i, try a lower learning rate'%(value, epoch + 1, batch + 1))

@dataclass
class TrainingHistory:
    '''Per-epoch records kept by a trainer'''
    metrics: List[Dict] = field(default_factory=list)
    temperature: List[Dict] = field(default_factory=list)
    weights: List[Dict] = field(default_factory=list)

    def final(self, key: str):
        return self.metrics[-1][key]

class TaskTrainer(object):
    '''
    TaskTrainer class
    -----------------

    Trains a task network on complete input clouds.

    prov: build_id, config_hash and seed written on every metrics.csv row
    '''
    def __init__(self, network: TaskNetwork, train_set: ShapeDataset, epochs: int, lr: float,
                 validation: Optional[ShapeDataset] = None, lr_decay: float = 0.7, lr_decay_every: int = 60,
                 prov: Optional[Dict[str, Any]] = None):
        self.network = network
        self.prov = prov if prov is not None else provenance()
        self.train_set = train_set
        self.validation = validation
        self.epochs = epochs
        self.optimizer = Adam(network.parameters(), lr, decay=lr_decay, decay_every=lr_decay_every)
        self.log = logging.getLogger(self.__class__.__name__)

    def validate(self) -> Optional[float]:
        '''Mean task metric over the validation set'''
        if self.validation is None or len(self.validation) == 0:
            return None
        batch = self.validation.all()
        return float(np.mean(self.network.evaluate(self.network.sampleInputs(batch), batch)))

    def train(self, out_dir: Optional[str] = None) -> TrainingHistory:
        '''Run all epochs, writing metrics.csv into _out_dir_ when given'''
        metric = 'validation_' + self.network.metricName()
        history = TrainingHistory()
        with CsvLog(os.path.join(out_dir, 'metrics.csv') if out_dir is not None else None, ['epoch', 'loss', metric, 'lr'], self.prov) as metrics:
            for epoch in range(self.epochs):
                self.optimizer.setEpoch(epoch)
                losses = []
                for b, batch in enumerate(self.train_set.batches(epoch)):
                    self.optimizer.zeroGrad()
                    clouds = [Tensor(c) for c in self.network.sampleInputs(batch)]
                    loss = self.network.taskLoss(clouds, batch)
                    _check_finite(loss, epoch, b)
                    loss.backward()
                    self.optimizer.step()
                    losses += [loss.item()]
                row = {'epoch': epoch + 1, 'loss': float(np.mean(losses)), metric: self.validate(), 'lr': self.optimizer.lr()}
                metrics.append(row)
                self.log.info('%s epoch %i/%i: loss %.6g, %s %s', self.network.name(), epoch + 1, self.epochs, row['loss'], metric,
                              'n/a' if row[metric] is None else '%.4g'%row[metric])
        history.metrics = metrics.rows
        return history

def train_task_network(network: TaskNetwork, train_set: ShapeDataset, epochs: int, lr: float,
                       validation: Optional[ShapeDataset] = None, out_dir: Optional[str] = None,
                       lr_decay: float = 0.7, lr_decay_every: int = 60, prov: Optional[Dict[str, Any]] = None) -> TrainingHistory:
    return TaskTrainer(network, train_set, epochs, lr, validation, lr_decay, lr_decay_every, prov).train(out_dir)

class SamplerTrainer(object):
    '''
    SamplerTrainer class
    --------------------

    Trains a sampler against a frozen task network.

    profile: how t**2 evolves; only a learned profile trains the temperature
    aux_loss: "none", "cross_entropy" or "entropy" projection weight loss,
              scaled by eta
    prov: build_id, config_hash and seed written on every row of the
          training logs
    '''
    def __init__(self, sampler: SamplerModel, task: TaskNetwork, train_set: ShapeDataset, epochs: int, lr: float,
                 profile: Optional[TemperatureProfile] = None, aux_loss: str = 'none', eta: float = 0.1,
                 simplify_only: bool = False, validation: Optional[ShapeDataset] = None,
                 lr_decay: float = 0.7, lr_decay_every: int = 60,
                 prov: Optional[Dict[str, Any]] = None):
        if sampler.config.n != task.config.n:
            raise IncompatibleError('sampler takes %i points but the task network was trained on %i'%(sampler.config.n, task.config.n))
        if aux_loss not in ('none', 'cross_entropy', 'entropy'):
            raise IncompatibleError('unknown auxiliary loss %r'%aux_loss)
        self.sampler = sampler
        self.task = task
        self.train_set = train_set
        self.validation = validation
        self.epochs = epochs
        self.profile = profile if profile is not None else TemperatureProfile(floor=sampler.config.t_floor)
        self.aux_loss = aux_loss
        self.eta = eta
        self.simplify_only = simplify_only
        self.prov = prov if prov is not None else provenance()
        self.log = logging.getLogger(self.__class__.__name__)
        task.freeze()
        learn_temperature = self.profile.kind is TemperatureKind.LEARNED and not simplify_only
        self.optimizer = Adam(sampler.trainableParameters(learn_temperature), lr, decay=lr_decay, decay_every=lr_decay_every)

    def __auxLoss(self, states) -> Optional[Tensor]:
        if self.aux_loss == 'none':
            return None
        fn = weight_cross_entropy_loss if self.aux_loss == 'cross_entropy' else weight_entropy_loss
        total = None
        for state in states:
            term = fn(state)
            total = term if total is None else total + term
        return self.eta * total

    def batchLoss(self, batch) -> Tensor:
        '''Training objective for one batch'''
        c = self.sampler.config
        inputs = self.task.sampleInputs(batch)
        if c.progressive:
            return progressive_total_loss(self.sampler, inputs, self.task, batch)
        Qs = [self.sampler(p) for p in inputs]
        if self.simplify_only:
            return simplified_total_loss(self.task.taskLoss(Qs, batch), Qs, inputs, c.alpha, c.beta, c.gamma, c.delta)
        t = self.sampler.temperatureValue()
        projected = [soft_project(p, q, c.k, t) for p, q in zip(inputs, Qs)]
        loss = sampler_total_loss(self.task.taskLoss([r for r, _ in projected], batch), Qs, inputs,
                                  c.alpha, c.lam, t, c.beta, c.gamma, c.delta)
        aux = self.__auxLoss([state for _, state in projected])
        if aux is not None:
            loss = loss + aux
        return loss

    def monitorWeights(self) -> np.ndarray:
        '''Mean projection weight per neighbour rank over the first
        training batch
        '''
        batch = next(self.train_set.batches(0, shuffle=False))
        P = self.task.sampleInputs(batch)[0]
        with ad.no_grad():
            Q = self.sampler(P)
            if not self.sampler.config.progressive:
                Q = Q[..., :self.sampler.config.m, :]
            _, state = soft_project(P, Q, self.sampler.config.k, self.sampler.temperatureValue())
        return mean_neighbor_weights(state)

    def validate(self) -> Optional[float]:
        '''Mean task metric of the softly projected validation clouds'''
        if self.validation is None or len(self.validation) == 0:
            return None
        batch = self.validation.all()
        c = self.sampler.config
        with ad.no_grad():
            t = self.sampler.temperatureValue()
            clouds = []
            for P in self.task.sampleInputs(batch):
                Q = self.sampler(P)[..., :c.m, :]
                clouds += [Q.data if self.simplify_only else soft_project(P, Q, c.k, t)[0].data]
        return float(np.mean(self.task.evaluate(clouds, batch)))

    def train(self, out_dir: Optional[str] = None) -> TrainingHistory:
        '''Run all epochs

        When _out_dir_ is given metrics.csv, temperature.csv and
        weights_evolution.csv are written there.
        '''
        c = self.sampler.config
        metric = 'validation_' + self.task.metricName()
        def path(name):
            return os.path.join(out_dir, name) if out_dir is not None else None
        history = TrainingHistory()
        weight_fields = ['epoch'] + ['w%i'%(i + 1) for i in range(c.k)]
        with CsvLog(path('metrics.csv'), ['epoch', 'loss', metric, 'lr'], self.prov) as metrics, \
             CsvLog(path('temperature.csv'), ['epoch', 't_squared'], self.prov) as temperature, \
             CsvLog(path('weights_evolution.csv'), weight_fields, self.prov) as weights:
            for epoch in range(self.epochs):
                self.optimizer.setEpoch(epoch)
                t_sq = temperature_schedule(self.profile, epoch, self.epochs)
                if t_sq is not None:
                    self.sampler.setTemperatureSquared(t_sq)
                losses = []
                for b, batch in enumerate(self.train_set.batches(epoch)):
                    self.optimizer.zeroGrad()
                    loss = self.batchLoss(batch)
                    _check_finite(loss, epoch, b)
                    loss.backward()
                    self.optimizer.step()
                    self.sampler.clampTemperature()
                    losses += [loss.item()]
                t_value = self.sampler.temperatureValue().item()
                row = {'epoch': epoch + 1, 'loss': float(np.mean(losses)), metric: self.validate(), 'lr': self.optimizer.lr()}
                metrics.append(row)
                temperature.append({'epoch': epoch + 1, 't_squared': t_value * t_value})
                w = self.monitorWeights()
                weights.append(dict([('epoch', epoch + 1)] + [('w%i'%(i + 1), float(v)) for i, v in enumerate(w)]))
                self.log.info('sampler epoch %i/%i: loss %.6g, t^2 %.4g, nearest weight %.3f', epoch + 1, self.epochs,
                              row['loss'], t_value * t_value, w[0])
        history.metrics = metrics.rows
        history.temperature = temperature.rows
        history.weights = weights.rows
        return history

def train_sampler(sampler: SamplerModel, task: TaskNetwork, train_set: ShapeDataset, epochs: int, lr: float,
                  profile: Optional[TemperatureProfile] = None, aux_loss: str = 'none', eta: float = 0.1,
                  simplify_only: bool = False, validation: Optional[ShapeDataset] = None,
                  out_dir: Optional[str] = None, lr_decay: float = 0.7, lr_decay_every: int = 60,
                  prov: Optional[Dict[str, Any]] = None) -> TrainingHistory:
    return SamplerTrainer(sampler, task, train_set, epochs, lr, profile, aux_loss, eta, simplify_only,
                          validation, lr_decay, lr_decay_every, prov).train(out_dir)
