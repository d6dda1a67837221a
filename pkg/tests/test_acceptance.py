#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tests/test_acceptance.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
'''
Training trend checks on the desk scale synthetic benchmark.

These train real networks and take tens of minutes on a CPU; they only run
with pytest --runslow.
'''
import logging
import statistics

import numpy as np
import pytest

from rt_samplenet.context import Context
from rt_samplenet.harness import cmd_ablate, cmd_eval, cmd_train_sampler, cmd_train_task, experiment_datasets, load_task_network
from rt_samplenet.sampler import SamplerModel
from rt_samplenet.training import SamplerTrainer

SEEDS = (0, 1, 2)

def experiment(out_dir, **overrides):
    values = {'out_dir': str(out_dir), 'eval_workers': '4'}
    values.update(overrides)
    context = Context(None, values)
    context.setAppLog(logging.getLogger('rt-samplenet-acceptance'))
    return context

def median_metric(reports, strategy, ratio):
    return statistics.median([report.metric(strategy, ratio) for report in reports])

@pytest.mark.slow
class TestClassification:
    @pytest.fixture(scope='class')
    def reports(self, tmp_path_factory):
        tmp_path = tmp_path_factory.mktemp('classification')
        reports = []
        for seed in SEEDS:
            context = experiment(tmp_path / ('seed%i'%seed), seed=str(seed),
                                 strategies='fps,samplenet,samplenet-soft')
            cmd_train_task(context)
            cmd_train_sampler(context)
            reports += [cmd_eval(context)]
        return reports

    def test_task_network_is_accurate(self, reports):
        assert median_metric(reports, 'complete', 1) >= 0.95

    def test_samplenet_beats_fps(self, reports):
        for ratio in (4, 8, 16):
            assert median_metric(reports, 'samplenet', ratio) >= median_metric(reports, 'fps', ratio), ratio
        assert median_metric(reports, 'samplenet', 16) >= median_metric(reports, 'fps', 16) + 0.05

    def test_soft_points_predict_sampled_points(self, reports):
        for ratio in (2, 4, 8):
            soft = median_metric(reports, 'samplenet-soft', ratio)
            assert abs(soft - median_metric(reports, 'samplenet', ratio)) <= 0.05, ratio

@pytest.mark.slow
class TestAnnealing:
    @pytest.fixture(scope='class')
    def context(self, tmp_path_factory):
        context = experiment(tmp_path_factory.mktemp('annealing'), ratios='8')
        cmd_train_task(context)
        return context

    def train(self, context, aux_loss):
        cfg = context.experimentConfig()
        task = load_task_network(cfg.taskCheckpointPath())
        train, validation, _ = experiment_datasets(cfg)
        sampler = SamplerModel(cfg.samplerConfig(cfg.sampleSize(8)), np.random.default_rng(cfg.seed))
        trainer = SamplerTrainer(sampler, task, train, cfg.sampler_epochs, cfg.lr, cfg.temperature, aux_loss, 0.1,
                                 validation=validation)
        return trainer.train()

    def test_learned_temperature_anneals(self, context):
        history = self.train(context, 'none')
        t_sq = [row['t_squared'] for row in history.temperature]
        assert t_sq[-1] <= 0.5
        late = t_sq[len(t_sq) // 2:]
        rises = len([1 for a, b in zip(late, late[1:]) if b > a])
        assert rises <= max(1, int(0.05 * len(late)))
        assert history.weights[-1]['w1'] > history.weights[0]['w1']

    def test_cross_entropy_concentrates_weights(self, context):
        history = self.train(context, 'cross_entropy')
        assert history.weights[-1]['w1'] >= 0.9

    def test_constant_profile_is_worse(self, context):
        context = experiment(context.experimentConfig().out_dir, profile_kinds='learned,constant', ratios='8,16')
        rows = cmd_ablate(context)
        metric = {(row['variant'], row['ratio']): row['metric'] for row in rows}
        for ratio in (8, 16):
            assert metric[('profile=constant', ratio)] < metric[('profile=learned', ratio)], ratio

@pytest.mark.slow
class TestRegistration:
    @pytest.fixture(scope='class')
    def reports(self, tmp_path_factory):
        tmp_path = tmp_path_factory.mktemp('registration')
        reports = []
        for seed in SEEDS:
            context = experiment(tmp_path / ('seed%i'%seed), task='registration', seed=str(seed), ratios='16,32',
                                 strategies='fps,samplenet')
            cmd_train_task(context)
            cmd_train_sampler(context)
            reports += [cmd_eval(context)]
        return reports

    def test_samplenet_is_more_consistent(self, reports):
        for ratio in (16, 32):
            fps = statistics.median([r.find('fps', ratio).consistency for r in reports])
            samplenet = statistics.median([r.find('samplenet', ratio).consistency for r in reports])
            assert samplenet < fps, ratio

    def test_samplenet_rotation_error(self, reports):
        for ratio in (16, 32):
            assert median_metric(reports, 'samplenet', ratio) <= median_metric(reports, 'fps', ratio), ratio
