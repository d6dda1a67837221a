#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tests/test_evaluation.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
'''
Tests for the sampling strategies and the strategy evaluator.
'''
import csv

import numpy as np
import pytest

from rt_samplenet.data import RegistrationDataset, ShapeDataset
from rt_samplenet.evaluation import REPORT_FIELDS, STRATEGIES, TIMING_FIELDS, EvalReport, Evaluator, sample_cloud, samplenet_outputs
from rt_samplenet.exceptions import IncompatibleError
from rt_samplenet.geometry import fps
from rt_samplenet.sampler import SamplerConfig, SamplerModel
from rt_samplenet.task_factory import create_task_network

@pytest.fixture
def sampler(small_sampler_config):
    return SamplerModel(small_sampler_config, np.random.default_rng(4))

@pytest.fixture
def eval_set(small_dataset):
    return ShapeDataset(small_dataset.clouds[:6], small_dataset.labels[:6], batch_size=4)

def header(path):
    with open(path, newline='') as fin:
        return next(csv.reader(fin))

class TestSampleCloud:
    def test_random_is_seeded(self, rng):
        P = rng.normal(size=(32, 3))
        points, idx = sample_cloud('random', P, 8, seed=(1, 2))
        again, idx_again = sample_cloud('random', P, 8, seed=(1, 2))
        assert idx == idx_again
        assert len(set(idx)) == 8
        np.testing.assert_array_equal(points, P[idx])
        _, other = sample_cloud('random', P, 8, seed=(1, 3))
        assert other != idx

    def test_fps(self, rng):
        P = rng.normal(size=(32, 3))
        points, idx = sample_cloud('fps', P, 8)
        assert idx == fps(P, 8)
        np.testing.assert_array_equal(points, P[idx])

    def test_sampler_strategies(self, rng, sampler):
        P = rng.normal(size=(32, 3))
        Q, R, sampled, indices = samplenet_outputs(sampler, P, 8)
        points, idx = sample_cloud('samplenet', P, 8, sampler)
        assert idx == indices
        assert len(set(idx)) == 8
        np.testing.assert_array_equal(points, sampled)
        soft, none = sample_cloud('samplenet-soft', P, 8, sampler)
        assert none is None
        np.testing.assert_array_equal(soft, R)
        raw, _ = sample_cloud('samplenet-simplified', P, 8, sampler)
        np.testing.assert_array_equal(raw, Q)
        matched, matched_idx = sample_cloud('simplified-matched', P, 8, sampler)
        assert len(set(matched_idx)) == 8
        np.testing.assert_array_equal(matched, P[matched_idx])

    def test_strategy_names(self):
        assert STRATEGIES == ('random', 'fps', 'samplenet', 'samplenet-soft', 'samplenet-simplified', 'simplified-matched')

    def test_progressive_prefix(self, rng):
        config = SamplerConfig(n=32, m=8, k=4, conv_filters=(8,), fc_widths=(), progressive=True)
        progressive = SamplerModel(config, np.random.default_rng(0))
        P = rng.normal(size=(32, 3))
        Q4, _, _, _ = samplenet_outputs(progressive, P, 4)
        Q16, _, _, idx16 = samplenet_outputs(progressive, P, 16)
        np.testing.assert_array_equal(Q16[:4], Q4)
        assert len(set(idx16)) == 16

    def test_errors(self, rng, sampler):
        P = rng.normal(size=(32, 3))
        with pytest.raises(IncompatibleError):
            sample_cloud('voxel', P, 8, sampler)
        with pytest.raises(IncompatibleError):
            sample_cloud('samplenet', P, 8)
        with pytest.raises(IncompatibleError):
            sample_cloud('fps', P, 33)
        with pytest.raises(IncompatibleError):
            samplenet_outputs(sampler, P, 4)

class TestEvaluator:
    def test_report(self, tmp_path, small_task_config, sampler, eval_set):
        task = create_task_network('classifier', small_task_config, np.random.default_rng(0))
        report = Evaluator(task, eval_set, {4: sampler}, workers=2).evaluate(['random', 'fps', 'samplenet'], [4])
        assert [(row.strategy, row.ratio, row.m) for row in report.rows] == [
            ('complete', 1, 32), ('random', 4, 8), ('fps', 4, 8), ('samplenet', 4, 8)]
        for row in report.rows:
            assert 0.0 <= row.metric <= 1.0
            assert row.metric_name == 'accuracy'
            assert row.consistency is None
            assert row.swap_consistency is None
            assert row.seconds >= 0.0
        assert report.metric('fps', 4) == report.find('fps', 4).metric
        with pytest.raises(KeyError):
            report.metric('fps', 8)
        report.writeCsv(str(tmp_path / 'report.csv'))
        report.writeTimingCsv(str(tmp_path / 'timing.csv'))
        assert header(tmp_path / 'report.csv') == REPORT_FIELDS
        assert header(tmp_path / 'timing.csv') == TIMING_FIELDS

    def test_repeatable_for_any_worker_count(self, small_task_config, sampler, eval_set):
        task = create_task_network('classifier', small_task_config, np.random.default_rng(0))
        strategies = ['random', 'samplenet', 'simplified-matched']
        one = Evaluator(task, eval_set, {4: sampler}, workers=1).evaluate(strategies, [4])
        many = Evaluator(task, eval_set, {4: sampler}, workers=3).evaluate(strategies, [4])
        assert [row.metric for row in one.rows] == [row.metric for row in many.rows]

    def test_bad_requests(self, small_task_config, sampler, eval_set):
        task = create_task_network('classifier', small_task_config, np.random.default_rng(0))
        evaluator = Evaluator(task, eval_set, {4: sampler})
        with pytest.raises(IncompatibleError):
            evaluator.evaluateStrategy('fps', 5)
        with pytest.raises(IncompatibleError):
            evaluator.evaluateStrategy('samplenet', 8)
        with pytest.raises(IncompatibleError):
            evaluator.evaluate(['voxel'], [4])

    def test_registration_consistency(self, small_task_config, small_dataset):
        task = create_task_network('registration', small_task_config, np.random.default_rng(0))
        pairs = RegistrationDataset(small_dataset.clouds[:4], batch_size=4, angle_range=45.0, seed=3)
        evaluator = Evaluator(task, pairs)
        complete = evaluator.evaluateStrategy('complete', 1)
        assert complete.metric_name == 'rotation_error'
        # the full source is exactly the rotated template
        assert complete.consistency == pytest.approx(0.0, abs=1e-12)
        sampled = evaluator.evaluateStrategy('fps', 4)
        assert sampled.consistency > 0.0

    def test_registration_swap_consistency(self, tmp_path, small_task_config, small_dataset):
        task = create_task_network('registration', small_task_config, np.random.default_rng(0))
        pairs = RegistrationDataset(small_dataset.clouds[:4], batch_size=4, angle_range=45.0, seed=3)
        report = Evaluator(task, pairs).evaluate(['fps'], [4], report=EvalReport('v1', 'abc', 3))
        batch = pairs.all()
        expected = float(np.mean(task.swapConsistency(batch.sources, batch.clouds)))
        assert report.find('complete', 1).swap_consistency == pytest.approx(expected, rel=1e-12)
        assert 0.0 <= report.find('fps', 4).swap_consistency <= 360.0
        report.writeCsv(str(tmp_path / 'report.csv'))
        with open(tmp_path / 'report.csv', newline='') as fin:
            rows = list(csv.DictReader(fin))
        assert [row['strategy'] for row in rows] == ['complete', 'fps']
        for row, written in zip(report.rows, rows):
            assert float(written['swap_consistency']) == row.swap_consistency

    def test_autoencoder_error_is_normalised(self, small_task_config, eval_set):
        task = create_task_network('autoencoder', small_task_config, np.random.default_rng(0))
        evaluator = Evaluator(task, eval_set)
        assert evaluator.evaluateStrategy('fps', 4).metric > 0.0
        report = evaluator.evaluate(['random'], [2], report=EvalReport(build_id='test', config_hash='abc', seed=7))
        assert report.metric('complete', 1) == pytest.approx(1.0)
        assert report.reportRows()[0]['build_id'] == 'test'
