#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tests/test_training.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
'''
Tests for the task and sampler training loops and the per-epoch CSV logs.
'''
import csv

import numpy as np
import pytest

from rt_samplenet.autodiff import Tensor
from rt_samplenet.data import RegistrationDataset, ShapeDataset
from rt_samplenet.exceptions import DivergenceError, IncompatibleError
from rt_samplenet.projection import TemperatureKind, TemperatureProfile, temperature_schedule
from rt_samplenet.sampler import SamplerConfig, SamplerModel
from rt_samplenet.task_factory import create_task_network
from rt_samplenet.training import SamplerTrainer, TaskTrainer, train_sampler
from rt_samplenet.utils import PROVENANCE_FIELDS

def read_csv(path):
    with open(path, newline='') as fin:
        reader = csv.DictReader(fin)
        return reader.fieldnames, list(reader)

@pytest.fixture
def validation_set(small_dataset):
    return ShapeDataset(small_dataset.clouds[:4], small_dataset.labels[:4], batch_size=4)

@pytest.fixture
def frozen_classifier(small_task_config):
    return create_task_network('classifier', small_task_config, np.random.default_rng(1))

class TestTaskTrainer:
    def test_metrics_csv(self, tmp_path, small_task_config, small_train_set, validation_set):
        net = create_task_network('classifier', small_task_config, np.random.default_rng(0))
        history = TaskTrainer(net, small_train_set, 2, 1e-3, validation_set, lr_decay=0.5, lr_decay_every=1).train(str(tmp_path))
        fields, rows = read_csv(tmp_path / 'metrics.csv')
        assert fields == ['epoch', 'loss', 'validation_accuracy', 'lr'] + PROVENANCE_FIELDS
        assert [row['epoch'] for row in rows] == ['1', '2']
        assert [float(row['lr']) for row in rows] == pytest.approx([1e-3, 5e-4])
        assert 0.0 <= history.final('validation_accuracy') <= 1.0
        assert float(rows[-1]['loss']) == history.final('loss')
        assert len(rows[0]['build_id']) > 0

    def test_metrics_provenance(self, tmp_path, small_task_config, small_train_set):
        net = create_task_network('classifier', small_task_config, np.random.default_rng(0))
        TaskTrainer(net, small_train_set, 1, 1e-3, prov={'build_id': 'v1', 'config_hash': 'abc', 'seed': 3}).train(str(tmp_path))
        _, rows = read_csv(tmp_path / 'metrics.csv')
        assert [(row['build_id'], row['config_hash'], row['seed']) for row in rows] == [('v1', 'abc', '3')]

    def test_same_seed_same_weights(self, small_task_config, small_train_set):
        states = []
        for _ in range(2):
            net = create_task_network('classifier', small_task_config, np.random.default_rng(0))
            TaskTrainer(net, small_train_set, 2, 1e-3).train()
            states += [net.stateDict()]
        for name in states[0]:
            np.testing.assert_array_equal(states[0][name], states[1][name], err_msg=name)

    def test_no_validation_gives_empty_metric(self, tmp_path, small_task_config, small_train_set):
        net = create_task_network('autoencoder', small_task_config, np.random.default_rng(0))
        history = TaskTrainer(net, small_train_set, 1, 1e-3).train(str(tmp_path))
        assert history.final('validation_reconstruction_error') is None
        _, rows = read_csv(tmp_path / 'metrics.csv')
        assert rows[0]['validation_reconstruction_error'] == ''

    def test_registration(self, small_task_config, small_dataset):
        net = create_task_network('registration', small_task_config, np.random.default_rng(0))
        train = RegistrationDataset(small_dataset.clouds[:8], batch_size=4, angle_range=45.0, seed=1)
        validation = RegistrationDataset(small_dataset.clouds[8:10], batch_size=2, angle_range=45.0, seed=2)
        history = TaskTrainer(net, train, 1, 1e-3, validation).train()
        assert 0.0 <= history.final('validation_rotation_error') <= 360.0

class TestSamplerTrainer:
    def test_logs(self, tmp_path, small_sampler_config, frozen_classifier, small_train_set, validation_set):
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        history = train_sampler(sampler, frozen_classifier, small_train_set, 2, 1e-3, validation=validation_set,
                                out_dir=str(tmp_path))
        fields, rows = read_csv(tmp_path / 'metrics.csv')
        assert fields == ['epoch', 'loss', 'validation_accuracy', 'lr'] + PROVENANCE_FIELDS
        assert len(rows) == 2
        fields, rows = read_csv(tmp_path / 'temperature.csv')
        assert fields == ['epoch', 't_squared'] + PROVENANCE_FIELDS
        assert len(rows) == 2
        fields, rows = read_csv(tmp_path / 'weights_evolution.csv')
        assert fields == ['epoch', 'w1', 'w2', 'w3', 'w4'] + PROVENANCE_FIELDS
        for row in rows:
            assert sum([float(row['w%i'%i]) for i in range(1, 5)]) == pytest.approx(1.0)
        assert len(history.weights) == 2

    def test_log_rows_carry_provenance(self, tmp_path, small_sampler_config, frozen_classifier, small_train_set):
        prov = {'build_id': 'v0.1-3-gabc123', 'config_hash': 'f00d', 'seed': 11}
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-3, prov=prov).train(str(tmp_path))
        for name in ('metrics.csv', 'temperature.csv', 'weights_evolution.csv'):
            fields, rows = read_csv(tmp_path / name)
            assert fields[-3:] == PROVENANCE_FIELDS, name
            assert len(rows) == 1, name
            assert (rows[0]['build_id'], rows[0]['config_hash'], rows[0]['seed']) == ('v0.1-3-gabc123', 'f00d', '11'), name

    def test_default_provenance(self, tmp_path, small_sampler_config, frozen_classifier, small_train_set):
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-3).train(str(tmp_path))
        for name in ('metrics.csv', 'temperature.csv', 'weights_evolution.csv'):
            fields, rows = read_csv(tmp_path / name)
            assert set(PROVENANCE_FIELDS) <= set(fields), name
            assert len(rows[0]['build_id']) > 0, name

    def test_task_is_frozen(self, small_sampler_config, frozen_classifier, small_train_set):
        before = frozen_classifier.stateDict()
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-2).train()
        assert frozen_classifier.frozen()
        for name, value in frozen_classifier.stateDict().items():
            np.testing.assert_array_equal(value, before[name], err_msg=name)

    def test_learned_temperature_moves(self, small_sampler_config, frozen_classifier, small_train_set):
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-2).train()
        assert float(sampler.temperature.data) != 1.0
        assert float(sampler.temperature.data) >= small_sampler_config.t_floor

    def test_constant_profile(self, small_sampler_config, frozen_classifier, small_train_set):
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        profile = TemperatureProfile(kind=TemperatureKind.CONSTANT)
        history = SamplerTrainer(sampler, frozen_classifier, small_train_set, 3, 1e-2, profile=profile).train()
        assert [row['t_squared'] for row in history.temperature] == [1.0, 1.0, 1.0]

    def test_linear_rectified_profile(self, tmp_path, small_sampler_config, frozen_classifier, small_train_set):
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        profile = TemperatureProfile(kind=TemperatureKind.LINEAR_RECTIFIED, t0_sq=1.0, floor=small_sampler_config.t_floor)
        SamplerTrainer(sampler, frozen_classifier, small_train_set, 4, 1e-2, profile=profile).train(str(tmp_path))
        _, rows = read_csv(tmp_path / 'temperature.csv')
        expected = [temperature_schedule(profile, e, 4) for e in range(4)]
        assert [float(row['t_squared']) for row in rows] == pytest.approx(expected, rel=1e-9)
        assert expected[-1] == pytest.approx(1e-4)

    def test_simplify_only_keeps_temperature(self, small_sampler_config, frozen_classifier, small_train_set, validation_set):
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        history = SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-2, simplify_only=True,
                                 validation=validation_set).train()
        assert float(sampler.temperature.data) == 1.0
        assert history.final('validation_accuracy') is not None

    @pytest.mark.parametrize('aux', ['cross_entropy', 'entropy'])
    def test_auxiliary_weight_losses(self, small_sampler_config, frozen_classifier, small_train_set, aux):
        sampler = SamplerModel(small_sampler_config, np.random.default_rng(2))
        trainer = SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-2, aux_loss=aux, eta=0.5)
        plain = SamplerTrainer(SamplerModel(small_sampler_config, np.random.default_rng(2)), frozen_classifier,
                               small_train_set, 1, 1e-2)
        batch = small_train_set.all()
        assert trainer.batchLoss(batch).item() > plain.batchLoss(batch).item()

    def test_progressive(self, small_task_config, frozen_classifier, small_train_set, validation_set):
        config = SamplerConfig(n=32, m=8, k=4, conv_filters=(8, 16), fc_widths=(16,), progressive=True,
                               control_sizes=(2, 4, 8))
        sampler = SamplerModel(config, np.random.default_rng(2))
        history = SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-3, validation=validation_set).train()
        assert np.isfinite(history.final('loss'))
        assert len(history.weights[0]) == 1 + config.k

    def test_divergence(self, monkeypatch, small_sampler_config, frozen_classifier, small_train_set):
        trainer = SamplerTrainer(SamplerModel(small_sampler_config, np.random.default_rng(2)), frozen_classifier,
                                 small_train_set, 1, 1e-2)
        monkeypatch.setattr(trainer, 'batchLoss', lambda batch: Tensor(float('nan')))
        with pytest.raises(DivergenceError):
            trainer.train()

    def test_incompatible_setup(self, frozen_classifier, small_train_set):
        other_n = SamplerModel(SamplerConfig(n=16, m=4, k=3, conv_filters=(4,), fc_widths=()), np.random.default_rng(0))
        with pytest.raises(IncompatibleError):
            SamplerTrainer(other_n, frozen_classifier, small_train_set, 1, 1e-2)
        sampler = SamplerModel(SamplerConfig(n=32, m=8, k=4, conv_filters=(4,), fc_widths=()), np.random.default_rng(0))
        with pytest.raises(IncompatibleError):
            SamplerTrainer(sampler, frozen_classifier, small_train_set, 1, 1e-2, aux_loss='hinge')
