#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: evaluation.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet sampling strategy evaluation module.
#
'''
Sampling strategy evaluation
============================

Each strategy reduces an (n, 3) cloud to m = n / ratio points:

  random                 uniform choice without replacement
  fps                    farthest point sampling
  samplenet              hard sample of the trained sampler's projection
  samplenet-soft         the softly projected points R
  samplenet-simplified   the raw generated points Q
  simplified-matched     Q matched to the nearest input points

The task network then runs on the reduced clouds. Registration applies the
same strategy to source and template. Clouds are sampled in parallel by a
thread pool; the models are only read.
'''

import concurrent.futures
import logging
import time

from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .data import ShapeDataset
from .exceptions import DataError, IncompatibleError
from .geometry import as_point_cloud, fps, sampling_consistency
from .projection import hard_sample, match_nearest, soft_project
from .sampler import SamplerModel
from .task_factory import TaskNetwork
from .utils import PROVENANCE_FIELDS, write_csv

__all__ = ['STRATEGIES', 'SAMPLER_STRATEGIES', 'REPORT_FIELDS', 'TIMING_FIELDS',
           'EvalRow', 'EvalReport', 'Evaluator', 'sample_cloud', 'samplenet_outputs']

STRATEGIES = ('random', 'fps', 'samplenet', 'samplenet-soft', 'samplenet-simplified', 'simplified-matched')
SAMPLER_STRATEGIES = ('samplenet', 'samplenet-soft', 'samplenet-simplified', 'simplified-matched')

REPORT_FIELDS = ['task', 'strategy', 'ratio', 'm', 'metric_name', 'metric', 'consistency', 'swap_consistency',
                 'variant'] + PROVENANCE_FIELDS
TIMING_FIELDS = ['task', 'strategy', 'ratio', 'm', 'seconds'] + PROVENANCE_FIELDS

def samplenet_outputs(sampler: SamplerModel, P: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, List[int]]:
    '''(Q, R, sampled points, sampled indices) of one cloud for a sample size
    of m
    '''
    c = sampler.config
    if not c.progressive and c.m != m:
        raise IncompatibleError('sampler generates %i points, %i requested'%(c.m, m))
    if m < 1 or m > c.n:
        raise IncompatibleError('cannot sample %i points with a sampler for n=%i'%(m, c.n))
    with ad.no_grad():
        Q = sampler(P).data[:m]
        R, state = soft_project(P, Q, c.k, sampler.temperatureValue())
    sampled, indices = hard_sample(P, state, m)
    return Q, R.data, sampled, indices

def sample_cloud(strategy: str, P, m: int, sampler: Optional[SamplerModel] = None,
                 seed: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, Optional[List[int]]]:
    '''Reduce one cloud to m points

    Returns (points, indices); indices is None for the strategies whose
    points are not taken from P.
    '''
    P = as_point_cloud(P)
    if m < 1 or m > P.shape[0]:
        raise IncompatibleError('cannot sample %i points from %i'%(m, P.shape[0]))
    if strategy == 'random':
        rng = np.random.default_rng(np.random.SeedSequence(list(seed) if seed is not None else []))
        idx = [int(i) for i in rng.choice(P.shape[0], size=m, replace=False)]
        return P[idx], idx
    if strategy == 'fps':
        idx = fps(P, m)
        return P[idx], idx
    if strategy not in SAMPLER_STRATEGIES:
        raise IncompatibleError('unknown sampling strategy %r'%strategy)
    if sampler is None:
        raise IncompatibleError('strategy %s needs a trained sampler'%strategy)
    if strategy == 'simplified-matched':
        with ad.no_grad():
            Q = sampler(P).data[:m]
        return match_nearest(P, Q, m)
    Q, R, sampled, indices = samplenet_outputs(sampler, P, m)
    if strategy == 'samplenet':
        return sampled, indices
    return (R if strategy == 'samplenet-soft' else Q), None

@dataclass
class EvalRow:
    task: str
    strategy: str
    ratio: int
    m: int
    metric_name: str
    metric: float
    consistency: Optional[float] = None
    variant: str = ''
    seconds: float = 0.0
    swap_consistency: Optional[float] = None

@dataclass
class EvalReport:
    '''
    Evaluation results

    Rows are written to report.csv, wall times to a separate timing.csv; both
    carry the provenance columns. swap_consistency is the mean rotation error
    between the registration estimate and the inverse of the estimate with
    source and template swapped, in degrees.
    '''
    build_id: str = ''
    config_hash: str = ''
    seed: int = 0
    rows: List[EvalRow] = field(default_factory=list)

    def add(self, row: EvalRow):
        self.rows += [row]

    def find(self, strategy: str, ratio: int, variant: str = '') -> Optional[EvalRow]:
        for row in self.rows:
            if row.strategy == strategy and row.ratio == ratio and row.variant == variant:
                return row
        return None

    def metric(self, strategy: str, ratio: int, variant: str = '') -> float:
        row = self.find(strategy, ratio, variant)
        if row is None:
            raise KeyError('no %s row at ratio %i'%(strategy, ratio))
        return row.metric

    def reportRows(self) -> List[dict]:
        return [{'task': r.task, 'strategy': r.strategy, 'ratio': r.ratio, 'm': r.m, 'metric_name': r.metric_name,
                 'metric': r.metric, 'consistency': r.consistency, 'swap_consistency': r.swap_consistency,
                 'variant': r.variant, **self.provenance()} for r in self.rows]

    def provenance(self) -> dict:
        return {'build_id': self.build_id, 'config_hash': self.config_hash, 'seed': self.seed}

    def writeCsv(self, path: str):
        write_csv(path, REPORT_FIELDS, self.reportRows())

    def writeTimingCsv(self, path: str):
        write_csv(path, TIMING_FIELDS, [{'task': r.task, 'strategy': r.strategy, 'ratio': r.ratio, 'm': r.m,
                                         'seconds': r.seconds} for r in self.rows], self.provenance())

class Evaluator(object):
    '''
    Evaluator class
    ---------------

    Runs a frozen task network on sampled test clouds.

    samplers: ratio => trained sampler (a progressive sampler may be listed
              under every ratio)
    random_seed: seeds the random strategy, independent of the training seed
    '''
    def __init__(self, task: TaskNetwork, test_set: ShapeDataset, samplers: Optional[Mapping[int, SamplerModel]] = None,
                 random_seed: int = 1234, workers: int = 4, variant: str = ''):
        self.task = task
        self.test_set = test_set
        self.samplers = dict(samplers) if samplers is not None else {}
        self.random_seed = random_seed
        self.workers = max(1, workers)
        self.variant = variant
        self.log = logging.getLogger(self.__class__.__name__)
        self.__complete: Optional[np.ndarray] = None

    def __sampleInputs(self, executor, strategy: str, inputs: List[np.ndarray], ratio: int, offset: int) -> List[np.ndarray]:
        sampler = self.samplers.get(ratio)
        m = self.test_set.all().clouds.shape[1] // ratio
        sampled = []
        for which, clouds in enumerate(inputs):
            def work(args):
                i, P = args
                with ad.no_grad():
                    return sample_cloud(strategy, P, m, sampler, (self.random_seed, ratio, offset + i, which))[0]
            sampled += [np.stack(list(executor.map(work, enumerate(clouds))))]
        return sampled

    def __metric(self, values: np.ndarray) -> float:
        if self.task.name() == 'autoencoder':
            complete = self.completeValues()
            if np.any(complete <= 0.0):
                raise DataError('complete input reconstructs exactly, normalized error undefined')
            values = values / complete
        return float(np.mean(values))

    def completeValues(self) -> np.ndarray:
        '''Per-cloud task values on the complete inputs'''
        if self.__complete is None:
            values = []
            for batch in self.test_set.batches(0, shuffle=False):
                values += [self.task.evaluate(self.task.sampleInputs(batch), batch)]
            self.__complete = np.concatenate(values)
        return self.__complete

    def __consistency(self, sampled: List[np.ndarray], batch) -> Optional[np.ndarray]:
        if len(sampled) != 2 or batch.rotations is None:
            return None
        S_s, T_s = sampled
        T_gt = np.matmul(T_s, np.transpose(batch.rotations, (0, 2, 1)))
        with ad.no_grad():
            return sampling_consistency(S_s, T_gt).data.reshape(-1)

    def evaluateStrategy(self, strategy: str, ratio: int) -> EvalRow:
        '''Metric (and the consistencies for registration) of one strategy at one
        ratio
        '''
        n = self.test_set.all().clouds.shape[1]
        if ratio < 1 or n % ratio != 0:
            raise IncompatibleError('ratio %i does not divide n=%i'%(ratio, n))
        if strategy != 'complete' and strategy in SAMPLER_STRATEGIES and ratio not in self.samplers:
            raise IncompatibleError('no trained sampler for ratio %i'%ratio)
        start = time.perf_counter()
        values, consistency, swapped = [], [], []
        offset = 0
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.workers) as executor:
            for batch in self.test_set.batches(0, shuffle=False):
                inputs = self.task.sampleInputs(batch)
                if strategy == 'complete':
                    sampled = [np.asarray(c, dtype=np.float64) for c in inputs]
                else:
                    sampled = self.__sampleInputs(executor, strategy, inputs, ratio, offset)
                values += [self.task.evaluate(sampled, batch)]
                cons = self.__consistency(sampled, batch)
                if cons is not None:
                    consistency += [cons]
                if len(sampled) == 2 and hasattr(self.task, 'swapConsistency'):
                    swapped += [self.task.swapConsistency(sampled[0], sampled[1])]
                offset += batch.size
        values = np.concatenate(values)
        if strategy == 'complete' and self.task.name() == 'autoencoder':
            self.__complete = values
        row = EvalRow(self.task.name(), strategy, ratio, n // ratio, self.task.metricName(), self.__metric(values),
                      float(np.mean(np.concatenate(consistency))) if len(consistency) > 0 else None,
                      self.variant, time.perf_counter() - start,
                      float(np.mean(np.concatenate(swapped))) if len(swapped) > 0 else None)
        self.log.info('%s %s ratio %i (m=%i): %s %.6g%s%s', row.task, strategy, ratio, row.m, row.metric_name, row.metric,
                      '' if row.consistency is None else ', consistency %.4g'%row.consistency,
                      '' if row.swap_consistency is None else ', swap consistency %.4g deg'%row.swap_consistency)
        return row

    def evaluate(self, strategies: Sequence[str], ratios: Sequence[int], report: Optional[EvalReport] = None,
                 include_complete: bool = True) -> EvalReport:
        '''Evaluate every strategy at every ratio, complete input first'''
        for strategy in strategies:
            if strategy not in STRATEGIES:
                raise IncompatibleError('unknown sampling strategy %r'%strategy)
        if report is None:
            report = EvalReport()
        if include_complete:
            report.add(self.evaluateStrategy('complete', 1))
        for ratio in ratios:
            for strategy in strategies:
                report.add(self.evaluateStrategy(strategy, ratio))
        return report
