#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tests/test_harness.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
'''
Tests for the experiment subcommands and the command line entry point.
'''
import csv
import os.path

import pytest

from rt_samplenet.app import main
from rt_samplenet.exceptions import CheckpointError, IncompatibleError
from rt_samplenet.harness import (ABLATION_FIELDS, PROFILE_FIELDS, ablation_variants, cmd_ablate, cmd_eval,
                                  cmd_gen_data, cmd_profile, cmd_train_sampler, cmd_train_task, load_samplers,
                                  load_task_network)
from rt_samplenet.utils import PROVENANCE_FIELDS, build_id

def read_csv(path):
    with open(path, newline='') as fin:
        reader = csv.DictReader(fin)
        return reader.fieldnames, list(reader)

def run_pipeline(context):
    cmd_gen_data(context)
    cmd_train_task(context)
    cmd_train_sampler(context)
    return cmd_eval(context)

class TestPipeline:
    def test_outputs(self, small_context):
        context = small_context()
        out = context.experimentConfig().out_dir
        report = run_pipeline(context)
        for name in ('data/manifest.csv', 'task.ckpt', 'task/metrics.csv', 'sampler-r4.ckpt',
                     'sampler-r4/metrics.csv', 'sampler-r4/temperature.csv', 'sampler-r4/weights_evolution.csv',
                     'report.csv', 'timing.csv', 'config.resolved'):
            assert os.path.isfile(os.path.join(out, name)), name
        assert not os.path.exists(os.path.join(out, '.lock'))
        _, rows = read_csv(os.path.join(out, 'report.csv'))
        assert [row['strategy'] for row in rows] == ['complete', 'random', 'fps', 'samplenet', 'samplenet-soft',
                                                     'samplenet-simplified', 'simplified-matched']
        assert set([row['config_hash'] for row in rows]) == set([context.configHash()])
        assert len(report.rows) == 7
        _, timing = read_csv(os.path.join(out, 'timing.csv'))
        assert len(timing) == 7

    def test_every_csv_row_has_provenance(self, small_context):
        context = small_context(seed='5')
        out = context.experimentConfig().out_dir
        run_pipeline(context)
        cmd_profile(context)
        expected = set([(build_id(), context.configHash(), '5')])
        for name in ('data/manifest.csv', 'task/metrics.csv', 'sampler-r4/metrics.csv', 'sampler-r4/temperature.csv',
                     'sampler-r4/weights_evolution.csv', 'report.csv', 'timing.csv', 'profile.csv'):
            fields, rows = read_csv(os.path.join(out, name))
            assert set(PROVENANCE_FIELDS) <= set(fields), name
            assert len(rows) > 0, name
            assert set([(row['build_id'], row['config_hash'], row['seed']) for row in rows]) == expected, name

    def test_same_seed_same_results(self, small_context, tmp_path):
        outputs = []
        for name in ('a', 'b'):
            context = small_context(out_dir=str(tmp_path / name))
            run_pipeline(context)
            outputs += [[(tmp_path / name / f).read_bytes() for f in ('task.ckpt', 'sampler-r4.ckpt', 'report.csv')]]
        assert outputs[0] == outputs[1]

    def test_sampler_needs_task(self, small_context):
        context = small_context()
        cmd_gen_data(context)
        with pytest.raises(CheckpointError):
            cmd_train_sampler(context)
        assert not os.path.exists(os.path.join(context.experimentConfig().out_dir, '.lock'))

    def test_progressive(self, small_context):
        context = small_context(progressive='true', ratios='2,4', control_sizes='4,8,16')
        cmd_train_task(context)
        paths = cmd_train_sampler(context)
        cfg = context.experimentConfig()
        assert paths == [os.path.join(cfg.out_dir, 'sampler-progressive.ckpt')]
        samplers = load_samplers(cfg, [2, 4])
        assert samplers[2] is samplers[4]
        assert samplers[2].config.progressive
        report = cmd_eval(context)
        assert report.find('samplenet', 2).m == 16
        assert report.find('samplenet', 4).m == 8

    def test_checkpoint_kinds(self, small_context):
        context = small_context()
        cmd_train_task(context)
        cmd_train_sampler(context)
        cfg = context.experimentConfig()
        assert load_task_network(cfg.taskCheckpointPath()).frozen()
        with pytest.raises(IncompatibleError):
            load_task_network(cfg.samplerCheckpointPath(4))

class TestAblation:
    def test_variants(self, small_context):
        cfg = small_context(ks='3,4', aux_losses='entropy').experimentConfig()
        names = [name for name, _ in ablation_variants(cfg)]
        assert names == ['profile=learned', 'profile=constant', 'profile=linear_rectified', 'profile=exponential',
                         'k=3', 'k=4', 'aux=entropy']
        names = [name for name, _ in ablation_variants(small_context(ks='3', profile_kinds='constant').experimentConfig())]
        assert names == ['profile=constant', 'k=4', 'k=3']

    def test_constant_profile_run(self, small_context):
        context = small_context(profile_kinds='constant', ks='', aux_losses='')
        cmd_train_task(context)
        rows = cmd_ablate(context)
        out = context.experimentConfig().out_dir
        fields, written = read_csv(os.path.join(out, 'ablation.csv'))
        assert fields == ABLATION_FIELDS
        assert len(rows) == len(written) == 1
        assert written[0]['variant'] == 'profile=constant'
        assert float(written[0]['t_squared']) == 1.0
        assert 0.0 <= float(written[0]['metric']) <= 1.0
        assert os.path.isfile(os.path.join(out, 'ablate', 'profile-constant', 'r4', 'temperature.csv'))

class TestProfile:
    def test_full_preset(self, small_context):
        context = small_context()
        rows = cmd_profile(context)
        assert [row['ratio'] for row in rows] == [1, 2, 4, 8, 16, 32, 64, 128]
        by_ratio = {row['ratio']: row for row in rows}
        assert by_ratio[32]['m'] == 32
        assert by_ratio[32]['sampler_macs'] == 33939456
        assert by_ratio[32]['task_macs_full'] == 448025856
        assert by_ratio[32]['computation_reduction'] == pytest.approx(88.6451, abs=1e-3)
        assert by_ratio[32]['memory_increase'] == pytest.approx(106.4214, abs=1e-3)
        assert by_ratio[1]['computation_reduction'] == 0.0
        assert by_ratio[1]['memory_increase'] == 100.0
        fields, written = read_csv(os.path.join(context.experimentConfig().out_dir, 'profile.csv'))
        assert fields == PROFILE_FIELDS
        assert len(written) == 8

    def test_desk_preset(self, small_context):
        rows = cmd_profile(small_context(mac_preset='desk'))
        assert [(row['preset'], row['ratio'], row['m']) for row in rows] == [('desk', 1, 32), ('desk', 4, 8)]
        assert rows[0]['sampler_macs'] == 0
        assert rows[1]['sampler_macs'] > 0
        assert rows[1]['task_macs_sampled'] < rows[1]['task_macs_full']

class TestCommandLine:
    def test_version_and_usage(self):
        assert main(['-v']) == 0
        assert main([]) == 1

    def test_errors_exit_non_zero(self, tmp_path):
        assert main(['eval', '--out', str(tmp_path / 'out')]) == 1
        assert main(['profile', '-c', str(tmp_path / 'missing.conf')]) == 1
        assert main(['eval', '--ratios', '3', '--out', str(tmp_path / 'out')]) == 1

    def test_profile(self, tmp_path):
        assert main(['profile', '--out', str(tmp_path / 'out')]) == 0
        assert (tmp_path / 'out' / 'profile.csv').is_file()
