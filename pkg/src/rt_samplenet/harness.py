#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: harness.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet experiment harness module.
#
# The cmd_* functions implement the command line subcommands. Each takes a
# Context, claims the output directory and echoes the resolved configuration
# into it before doing any work.
#
'''
Experiment harness
==================

Output directory layout:

  config.resolved            resolved configuration
  data/                      generated dataset (unless data_dir is set)
  task.ckpt                  trained task network
  task/metrics.csv           task training per epoch
  sampler-r<ratio>.ckpt      trained sampler per ratio
  sampler-progressive.ckpt   progressive sampler
  sampler-<...>/*.csv        metrics.csv, temperature.csv, weights_evolution.csv
  report.csv, timing.csv     evaluation
  ablation.csv               ablation sweep
  profile.csv                MAC and memory accounting
'''

import concurrent.futures
import contextlib
import dataclasses
import logging
import os.path

from typing import Dict, List, Optional, Tuple

import numpy as np

from .autodiff import load_checkpoint, save_checkpoint
from .context import Context, ExperimentConfig
from .data import Dataset, RegistrationDataset, ShapeDataset, generate_dataset, load_dataset, MANIFEST
from .evaluation import SAMPLER_STRATEGIES, EvalReport, Evaluator
from .exceptions import CheckpointError, IncompatibleError
from .profiling import NoSampler, FullPointNet, FullSampleNet, mac_memory_report
from .projection import TemperatureKind
from .sampler import SamplerConfig, SamplerModel
from .task_factory import TaskNetwork, create_task_network, task_network_class
from .training import SamplerTrainer, TaskTrainer
from .utils import PROVENANCE_FIELDS, write_csv

__all__ = ['cmd_gen_data', 'cmd_train_task', 'cmd_train_sampler', 'cmd_eval', 'cmd_ablate', 'cmd_profile',
           'load_task_network', 'load_sampler', 'load_samplers', 'experiment_datasets', 'ablation_variants',
           'ABLATION_FIELDS', 'PROFILE_FIELDS', 'FULL_PROFILE_RATIOS']

ABLATION_FIELDS = ['variant', 'ratio', 'm', 'metric_name', 'metric', 'consistency', 'swap_consistency', 't_squared',
                   'nearest_weight'] + PROVENANCE_FIELDS
PROFILE_FIELDS = ['preset', 'n', 'm', 'ratio', 'sampler_macs', 'sampler_params', 'task_macs_full',
                  'task_macs_sampled', 'task_params', 'computation_reduction', 'memory_increase'] + PROVENANCE_FIELDS
FULL_PROFILE_RATIOS = (1, 2, 4, 8, 16, 32, 64, 128)
FULL_PROFILE_N = 1024

# rng stream tags under the experiment seed
_TASK_INIT = 1
_SAMPLER_INIT = 2
_VALIDATION_PAIRS = 3
_TEST_PAIRS = 4

_log = logging.getLogger(__name__)

@contextlib.contextmanager
def _experiment_dir(context: Context, cfg: ExperimentConfig):
    context.lockOutputDir(cfg.out_dir)
    try:
        context.writeResolvedConfig(cfg.out_dir)
        yield cfg.out_dir
    finally:
        context.unlockOutputDir()

def _class_names(cfg: ExperimentConfig) -> List[str]:
    if cfg.task == 'registration':
        return [cfg.registration_class]
    return list(cfg.classes)

def _dataset(cfg: ExperimentConfig) -> Dataset:
    '''Load the experiment dataset, generating it on first use'''
    data_dir = cfg.dataDir()
    if os.path.isfile(os.path.join(data_dir, MANIFEST)):
        dataset = load_dataset(data_dir, _class_names(cfg))
        if dataset.n != cfg.n:
            raise IncompatibleError('dataset in %s has %i points per cloud, n is %i'%(data_dir, dataset.n, cfg.n))
        return dataset
    with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.eval_workers) as executor:
        return generate_dataset(data_dir, cfg.dataset_size, cfg.n, _class_names(cfg), cfg.seed, cfg.jitter,
                                cfg.scale_range, cfg.fractions, executor, cfg.csvProvenance())

def experiment_datasets(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> Tuple[ShapeDataset, ShapeDataset, ShapeDataset]:
    '''(train, validation, test) batch sources for the configured task'''
    if dataset is None:
        dataset = _dataset(cfg)
    sets = []
    for name, pair_tag in (('train', None), ('validation', _VALIDATION_PAIRS), ('test', _TEST_PAIRS)):
        clouds, labels = dataset.subset(name)
        if cfg.task == 'registration':
            seed = cfg.seed if pair_tag is None else int(np.random.SeedSequence([cfg.seed, pair_tag]).generate_state(1)[0])
            sets += [RegistrationDataset(clouds, cfg.batch_size, cfg.angle_range, seed)]
        else:
            sets += [ShapeDataset(clouds, labels, cfg.batch_size, cfg.seed)]
    return sets[0], sets[1], sets[2]

def load_task_network(path: str) -> TaskNetwork:
    '''Rebuild a frozen task network from its checkpoint'''
    meta, params = load_checkpoint(path)
    if 'kind' not in meta:
        raise CheckpointError('checkpoint does not name a task network', path)
    network = task_network_class(meta['kind'])(TaskNetwork.configFromMeta(meta), np.random.default_rng(0))
    network.loadStateDict(params)
    network.freeze()
    return network

def load_sampler(path: str) -> SamplerModel:
    meta, params = load_checkpoint(path)
    sampler = SamplerModel(SamplerModel.configFromMeta(meta), np.random.default_rng(0))
    sampler.loadStateDict(params)
    sampler.freeze()
    return sampler

def load_samplers(cfg: ExperimentConfig, ratios: List[int], paths: Optional[List[str]] = None) -> Dict[int, SamplerModel]:
    '''Trained samplers by ratio

    With explicit _paths_ (or the sampler_checkpoint key) each sampler
    serves the ratio n/m, a progressive sampler serves every ratio. Otherwise
    the default checkpoint names in the output directory are used.
    '''
    if paths is None:
        paths = cfg.samplerCheckpoints()
    if len(paths) == 0:
        paths = sorted(set([cfg.samplerCheckpointPath(r) for r in ratios]))
    samplers = {}
    for path in paths:
        if not os.path.isfile(path):
            raise CheckpointError('sampler checkpoint not found, run train-sampler first', path)
        sampler = load_sampler(path)
        if sampler.config.n != cfg.n:
            raise IncompatibleError('sampler %s takes %i points, n is %i'%(path, sampler.config.n, cfg.n))
        if sampler.config.progressive:
            for r in ratios:
                samplers.setdefault(r, sampler)
        else:
            samplers[cfg.n // sampler.config.m] = sampler
    for r in ratios:
        if r not in samplers:
            raise IncompatibleError('no sampler generates %i points (ratio %i)'%(cfg.n // r, r))
    return samplers

def _task_for(cfg: ExperimentConfig) -> TaskNetwork:
    path = cfg.taskCheckpointPath()
    if not os.path.isfile(path):
        raise CheckpointError('task checkpoint not found, run train-task first', path)
    task = load_task_network(path)
    if task.name() != cfg.task:
        raise IncompatibleError('%s holds a %s network, the experiment task is %s'%(path, task.name(), cfg.task))
    if task.config.n != cfg.n:
        raise IncompatibleError('task network was trained on %i points, n is %i'%(task.config.n, cfg.n))
    return task

def _new_sampler(cfg: ExperimentConfig, sampler_config: SamplerConfig) -> SamplerModel:
    rng = np.random.default_rng([cfg.seed, _SAMPLER_INIT, sampler_config.m])
    return SamplerModel(sampler_config, rng)

def _sampler_sizes(cfg: ExperimentConfig) -> List[Tuple[str, int]]:
    '''(run name, m) of each sampler train-sampler produces'''
    if cfg.progressive:
        return [('progressive', cfg.sampleSize(max(cfg.ratios)))]
    return [('r%i'%r, cfg.sampleSize(r)) for r in cfg.ratios]

def _train_sampler(cfg: ExperimentConfig, task: TaskNetwork, sampler: SamplerModel, train: ShapeDataset,
                   validation: ShapeDataset, out_dir: str, temperature=None, aux_loss: Optional[str] = None):
    os.makedirs(out_dir, exist_ok=True)
    trainer = SamplerTrainer(sampler, task, train, cfg.sampler_epochs, cfg.lr,
                             temperature if temperature is not None else cfg.temperature,
                             aux_loss if aux_loss is not None else cfg.aux_loss, cfg.eta,
                             cfg.simplify_only, validation, cfg.lr_decay, cfg.lr_decay_every, cfg.csvProvenance())
    return trainer.train(out_dir)

def cmd_gen_data(context: Context) -> Dataset:
    cfg = context.experimentConfig()
    with _experiment_dir(context, cfg):
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.eval_workers) as executor:
            return generate_dataset(cfg.dataDir(), cfg.dataset_size, cfg.n, _class_names(cfg), cfg.seed,
                                    cfg.jitter, cfg.scale_range, cfg.fractions, executor, cfg.csvProvenance())

def cmd_train_task(context: Context) -> str:
    '''Train the task network on complete clouds

    Returns the checkpoint path.
    '''
    cfg = context.experimentConfig()
    with _experiment_dir(context, cfg) as out_dir:
        train, validation, test = experiment_datasets(cfg)
        network = create_task_network(cfg.task, cfg.task_config, np.random.default_rng([cfg.seed, _TASK_INIT]))
        run_dir = os.path.join(out_dir, 'task')
        os.makedirs(run_dir, exist_ok=True)
        TaskTrainer(network, train, cfg.task_epochs, cfg.task_lr, validation, cfg.lr_decay, cfg.lr_decay_every,
                    cfg.csvProvenance()).train(run_dir)
        path = cfg.taskCheckpointPath()
        meta = network.meta()
        meta['config_hash'] = cfg.config_hash
        save_checkpoint(path, network.stateDict(), meta)
        if len(test) > 0:
            batch = test.all()
            score = float(np.mean(network.evaluate(network.sampleInputs(batch), batch)))
            _log.info('%s test %s on complete input: %.6g', cfg.task, network.metricName(), score)
        return path

def cmd_train_sampler(context: Context) -> List[str]:
    '''Train one sampler per ratio (or a single progressive sampler)
    against the frozen task network

    Returns the checkpoint paths.
    '''
    cfg = context.experimentConfig()
    with _experiment_dir(context, cfg) as out_dir:
        task = _task_for(cfg)
        train, validation, _ = experiment_datasets(cfg)
        paths = []
        for run, m in _sampler_sizes(cfg):
            sampler = _new_sampler(cfg, cfg.samplerConfig(m))
            _log.info('Training %s sampler (m=%i, k=%i, %s temperature)', run, m, cfg.k, cfg.temperature.kind)
            _train_sampler(cfg, task, sampler, train, validation, os.path.join(out_dir, 'sampler-' + run))
            path = cfg.samplerCheckpointPath(cfg.n // m)
            meta = sampler.meta()
            meta.update({'task': cfg.task, 'config_hash': cfg.config_hash})
            if not cfg.progressive:
                meta['ratio'] = str(cfg.n // m)
            save_checkpoint(path, sampler.stateDict(), meta)
            paths += [path]
        return paths

def cmd_eval(context: Context) -> EvalReport:
    '''Evaluate the configured strategies at every ratio on the test split

    Writes report.csv and timing.csv.
    '''
    cfg = context.experimentConfig()
    with _experiment_dir(context, cfg) as out_dir:
        task = _task_for(cfg)
        _, _, test = experiment_datasets(cfg)
        samplers = {}
        if len([s for s in cfg.strategies if s in SAMPLER_STRATEGIES]) > 0:
            samplers = load_samplers(cfg, cfg.ratios)
        report = EvalReport(**cfg.csvProvenance())
        Evaluator(task, test, samplers, cfg.random_seed, cfg.eval_workers).evaluate(cfg.strategies, cfg.ratios, report)
        report.writeCsv(os.path.join(out_dir, 'report.csv'))
        report.writeTimingCsv(os.path.join(out_dir, 'timing.csv'))
        return report

def ablation_variants(cfg: ExperimentConfig) -> List[Tuple[str, dict]]:
    '''(name, overrides) per variant, each listed once

    The k sweep always includes the configured k.
    '''
    variants = [('profile=%s'%kind, {'temperature': dataclasses.replace(cfg.temperature, kind=TemperatureKind(kind))})
                for kind in cfg.profile_kinds]
    ks = list(cfg.ks)
    if len(ks) > 0 and cfg.k not in ks:
        ks = [cfg.k] + ks
    variants += [('k=%i'%k, {'k': k}) for k in ks]
    variants += [('aux=%s'%aux, {'aux_loss': aux}) for aux in cfg.aux_losses]
    seen = set()
    unique = []
    for name, overrides in variants:
        if name not in seen:
            seen.add(name)
            unique += [(name, overrides)]
    return unique

def cmd_ablate(context: Context) -> List[dict]:
    '''Train and evaluate a fresh sampler for every variant at every ratio

    Writes ablation.csv.
    '''
    cfg = context.experimentConfig()
    with _experiment_dir(context, cfg) as out_dir:
        task = _task_for(cfg)
        train, validation, test = experiment_datasets(cfg)
        rows = []
        for name, overrides in ablation_variants(cfg):
            for ratio in cfg.ratios:
                m = cfg.sampleSize(ratio)
                sampler_config = dataclasses.replace(cfg.samplerConfig(m), k=overrides.get('k', cfg.k))
                sampler = _new_sampler(cfg, sampler_config)
                run_dir = os.path.join(out_dir, 'ablate', name.replace('=', '-'), 'r%i'%ratio)
                history = _train_sampler(cfg, task, sampler, train, validation, run_dir,
                                         overrides.get('temperature'), overrides.get('aux_loss'))
                evaluator = Evaluator(task, test, {ratio: sampler}, cfg.random_seed, cfg.eval_workers, variant=name)
                result = evaluator.evaluateStrategy('samplenet', ratio)
                rows += [{'variant': name, 'ratio': ratio, 'm': m, 'metric_name': result.metric_name,
                          'metric': result.metric, 'consistency': result.consistency,
                          'swap_consistency': result.swap_consistency,
                          't_squared': history.temperature[-1]['t_squared'],
                          'nearest_weight': history.weights[-1]['w1'], **cfg.csvProvenance()}]
        write_csv(os.path.join(out_dir, 'ablation.csv'), ABLATION_FIELDS, rows)
        return rows

def _profile_rows(preset: str, sampler, task, n: int, ratios) -> List[dict]:
    rows = []
    for ratio in ratios:
        m = n // ratio
        report = mac_memory_report(sampler if ratio > 1 else NoSampler(), task, m, n)
        rows += [{'preset': preset, 'n': n, 'm': m, 'ratio': ratio,
                  'sampler_macs': report.sampler_macs, 'sampler_params': report.sampler_params,
                  'task_macs_full': report.task_macs_full, 'task_macs_sampled': report.task_macs_sampled,
                  'task_params': report.task_params,
                  'computation_reduction': report.computation_reduction, 'memory_increase': report.memory_increase}]
    return rows

def cmd_profile(context: Context) -> List[dict]:
    '''MACs, parameters, computation reduction and memory increase per ratio

    The full preset accounts for the full size sampler in front of a full
    PointNet on 1024 points; the desk preset uses the configured networks.
    Ratio 1 is the complete input without a sampler.
    '''
    cfg = context.experimentConfig()
    if cfg.mac_preset == 'full':
        rows = _profile_rows('full', FullSampleNet(), FullPointNet(cfg.mac_classes), FULL_PROFILE_N, FULL_PROFILE_RATIOS)
    else:
        task = create_task_network(cfg.task, cfg.task_config, np.random.default_rng(0))
        rows = []
        for ratio in [1] + list(cfg.ratios):
            sampler = _new_sampler(cfg, cfg.samplerConfig(cfg.sampleSize(ratio)))
            rows += _profile_rows('desk', sampler, task, cfg.n, [ratio])
    rows = [dict(row, **cfg.csvProvenance()) for row in rows]
    with _experiment_dir(context, cfg) as out_dir:
        write_csv(os.path.join(out_dir, 'profile.csv'), PROFILE_FIELDS, rows)
    for row in rows:
        _log.info('%s m=%i: sampler %i MACs %i params, task %i/%i MACs, CR %.3f%%, MI %.3f%%', row['preset'], row['m'],
                  row['sampler_macs'], row['sampler_params'], row['task_macs_sampled'], row['task_macs_full'],
                  row['computation_reduction'], row['memory_increase'])
    return rows
