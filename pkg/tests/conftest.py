#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tests/conftest.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# Shared fixtures: finite difference gradients, small network configurations
# and the --runslow switch for the training trend tests.
#
import logging

import numpy as np
import pytest

from rt_samplenet.context import Context
from rt_samplenet.data import ShapeDataset, build_dataset
from rt_samplenet.sampler import SamplerConfig
from rt_samplenet.task_factory import TaskConfig

def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the slow training trend tests')

def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='training run, use --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)

def central_difference(fn, x, eps: float = 1e-6) -> np.ndarray:
    '''Gradient of the scalar function fn at x by central differences

    x is perturbed in place and restored, so fn may close over it.
    '''
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = fn()
        flat[i] = orig - eps
        lo = fn()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad

@pytest.fixture
def fd_grad():
    return central_difference

@pytest.fixture
def rng():
    return np.random.default_rng(42)

SMALL_N = 32

@pytest.fixture
def small_task_config():
    return TaskConfig(n=SMALL_N, classes=2, conv_filters=(8, 16), fc_widths=(16,), latent=16, n_out=SMALL_N,
                      decoder_widths=(32,), head_widths=(16,))

@pytest.fixture
def small_sampler_config():
    return SamplerConfig(n=SMALL_N, m=8, k=4, conv_filters=(8, 16), fc_widths=(16,))

@pytest.fixture(scope='session')
def small_dataset():
    return build_dataset(20, SMALL_N, ['sphere', 'box'], seed=3)

@pytest.fixture
def small_train_set(small_dataset):
    return ShapeDataset(small_dataset.clouds, small_dataset.labels, batch_size=8, seed=0)

SMALL_EXPERIMENT = {
    'n': str(SMALL_N),
    'dataset_size': '16',
    'classes': 'sphere,box',
    'task_conv_filters': '8,16',
    'task_fc_widths': '8',
    'latent': '16',
    'decoder_widths': '32',
    'head_widths': '16',
    'sampler_conv_filters': '8,16',
    'sampler_fc_widths': '16',
    'k': '4',
    'task_epochs': '1',
    'sampler_epochs': '1',
    'batch_size': '8',
    'ratios': '4',
    'eval_workers': '2',
    }

@pytest.fixture
def small_context(tmp_path):
    '''A Context for a tiny classifier experiment writing under tmp_path'''
    def make(**overrides):
        values = dict(SMALL_EXPERIMENT)
        values['out_dir'] = str(tmp_path / 'out')
        values.update(overrides)
        context = Context(None, values)
        context.setAppLog(logging.getLogger('rt-samplenet-tests'))
        return context
    return make
