#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: tests/test_autodiff.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
'''
Tests for the reverse-mode differentiation engine, the optimizer and the
checkpoint files.
'''
import numpy as np
import pytest

from rt_samplenet import autodiff as ad
from rt_samplenet.autodiff import Adam, AdamState, Tensor, load_checkpoint, save_checkpoint, sgd_adam_step
from rt_samplenet.exceptions import CheckpointError, GraphError, ShapeError

def _weighted(out: Tensor, weights: np.ndarray) -> Tensor:
    return ad.sum(out * weights)

def _check_grads(fd_grad, build, arrays, seed, rtol=1e-5, atol=1e-8):
    '''Compare backward() with central differences for sum(build(*inputs) * W)'''
    leaves = [Tensor(a, requires_grad=True) for a in arrays]
    out = build(*leaves)
    weights = np.random.default_rng(seed).normal(size=out.shape)
    _weighted(out, weights).backward()
    for leaf in leaves:
        def value():
            with ad.no_grad():
                return _weighted(build(*[Tensor(l.data) for l in leaves]), weights).item()
        expected = fd_grad(value, leaf.data)
        np.testing.assert_allclose(leaf.grad, expected, rtol=rtol, atol=atol)

# (name, builder, input shapes, input transform)
_OPS = [
    ('add_broadcast', lambda a, b: a + b, [(3, 4), (4,)], None),
    ('sub_broadcast', lambda a, b: a - b, [(2, 3, 4), (3, 1)], None),
    ('mul', lambda a, b: a * b, [(3, 4), (3, 4)], None),
    ('div', lambda a, b: a / b, [(3, 4), (3, 4)], lambda i, x: x if i == 0 else np.abs(x) + 0.5),
    ('neg', lambda a: -a, [(5,)], None),
    ('exp', ad.exp, [(4, 3)], None),
    ('log', ad.log, [(4, 3)], lambda i, x: np.abs(x) + 0.5),
    ('square', ad.square, [(4, 3)], None),
    ('sqrt', ad.sqrt, [(4, 3)], lambda i, x: np.abs(x) + 0.5),
    ('relu', ad.relu, [(4, 3)], lambda i, x: np.sign(x) * (np.abs(x) + 0.1)),
    ('clip_min', lambda a: ad.clip_min(a, 0.0), [(4, 3)], lambda i, x: np.sign(x) * (np.abs(x) + 0.1)),
    ('sum_axis', lambda a: ad.sum(a, axis=1), [(3, 4, 2)], None),
    ('mean_axis_keepdims', lambda a: ad.mean(a, axis=-1, keepdims=True), [(3, 4)], None),
    ('max_over_axis', lambda a: ad.max_over_axis(a, -1), [(4, 6)], None),
    ('min_over_axis', lambda a: ad.min_over_axis(a, 0), [(4, 6)], None),
    ('softmax', ad.softmax, [(3, 5)], None),
    ('softmax_neg_sq_dist', ad.softmax_neg_sq_dist, [(4, 7), ()], lambda i, x: np.abs(x) + 0.2),
    ('matmul', ad.matmul, [(3, 4), (4, 2)], None),
    ('matmul_batched', ad.matmul, [(2, 3, 4), (4, 5)], None),
    ('matmul_vector', ad.matmul, [(4,), (4, 3)], None),
    ('affine', ad.affine, [(2, 5, 3), (3,), (3,)], None),
    ('pairwise_sq_dist', ad.pairwise_sq_dist, [(5, 3), (4, 3)], None),
    ('pairwise_sq_dist_batched', ad.pairwise_sq_dist, [(2, 5, 3), (2, 4, 3)], None),
    ('gather', lambda a: ad.gather(a, np.array([[0, 2], [2, 3]])), [(4, 3)], None),
    ('gather_batched', lambda a: ad.gather(a, np.array([[1, 1, 0], [3, 2, 0]])), [(2, 4, 3)], None),
    ('take', lambda a: a[1:, ::2], [(4, 5)], None),
    ('concat', lambda a, b: ad.concat([a, b], axis=-1), [(3, 2), (3, 4)], None),
    ('reshape', lambda a: ad.reshape(a, (6, 2)), [(3, 4)], None),
    ('transpose', ad.transpose, [(2, 3, 4)], None),
]

class TestOpGradients:
    '''Analytic gradients agree with central differences'''

    @pytest.mark.parametrize('name,build,shapes,transform', _OPS, ids=[op[0] for op in _OPS])
    def test_matches_central_differences(self, fd_grad, name, build, shapes, transform):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            arrays = [rng.normal(size=shape) for shape in shapes]
            if transform is not None:
                arrays = [transform(i, a) for i, a in enumerate(arrays)]
            _check_grads(fd_grad, build, arrays, seed)

    def test_shared_subexpression_accumulates(self):
        x = Tensor(np.array([1.5, -2.0]), requires_grad=True)
        (ad.sum(x * x + x)).backward()
        np.testing.assert_allclose(x.grad, 2.0 * x.data + 1.0)

class TestGraph:
    def test_second_backward_raises(self):
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        loss = ad.sum(ad.square(x))
        loss.backward()
        with pytest.raises(GraphError):
            loss.backward()

    def test_leaf_gradients_accumulate_over_graphs(self):
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        ad.sum(x).backward()
        ad.sum(x * 3.0).backward()
        np.testing.assert_allclose(x.grad, [4.0, 4.0])
        x.zeroGrad()
        assert x.grad is None

    def test_non_scalar_root_raises(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(GraphError):
            (x * 2.0).backward()

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with ad.no_grad():
            y = ad.sum(x * 2.0)
        assert not y.requires_grad
        assert y.isLeaf()
        assert ad.is_grad_enabled()

    def test_rebuilt_graph_is_deterministic(self):
        '''Recomputing after a parameter change matches a fresh computation'''
        w = Tensor(np.array([[1.0, -1.0], [0.5, 2.0]]), requires_grad=True)
        x = np.array([[0.3, 0.7]])
        ad.sum(ad.relu(ad.matmul(x, w))).backward()
        w.data += 0.1
        again = ad.sum(ad.relu(ad.matmul(x, w))).item()
        fresh = ad.sum(ad.relu(ad.matmul(x, Tensor(w.data.copy())))).item()
        assert again == fresh

    def test_forward_op_dispatch(self):
        out = ad.forward_op('add', np.array([1.0]), np.array([2.0]))
        np.testing.assert_allclose(out.data, [3.0])
        with pytest.raises(GraphError):
            ad.forward_op('no_such_op', np.array([1.0]))

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            ad.matmul(np.ones((2, 3)), np.ones((2, 3)))
        with pytest.raises(ShapeError):
            ad.add(np.ones((2, 3)), np.ones((4,)))
        with pytest.raises(ShapeError):
            ad.gather(np.ones((4, 3)), np.array([4]))
        with pytest.raises(ShapeError):
            ad.mean(np.ones((0,)))

class TestAdam:
    def test_minimises_quadratic(self):
        x = Tensor(np.array([0.0]), requires_grad=True)
        optimizer = Adam([x], lr=0.1, decay_every=0)
        for _ in range(1000):
            optimizer.zeroGrad()
            ad.sum(ad.square(x - 3.0)).backward()
            optimizer.step()
        assert abs(x.data[0] - 3.0) < 0.1

    def test_scalar_recurrence(self):
        x = Tensor(np.array([0.0]), requires_grad=True)
        state = AdamState.forParams([x])
        for _ in range(200):
            x.zeroGrad()
            ad.sum(ad.square(x - 2.0)).backward()
            sgd_adam_step([x], state, 0.05)
        assert state.step == 200
        assert abs(x.data[0] - 2.0) < 1e-2

    def test_zero_gradient_leaves_parameter(self):
        x = Tensor(np.array([1.5, -0.25]), requires_grad=True)
        state = AdamState.forParams([x])
        for _ in range(3):
            x.grad = np.zeros(2)
            sgd_adam_step([x], state, 0.05)
        np.testing.assert_array_equal(x.data, [1.5, -0.25])

    def test_step_decay(self):
        optimizer = Adam([Tensor(np.zeros(1), requires_grad=True)], lr=0.1, decay=0.5, decay_every=2)
        optimizer.setEpoch(1)
        assert optimizer.lr() == pytest.approx(0.1)
        optimizer.setEpoch(5)
        assert optimizer.lr() == pytest.approx(0.025)

    def test_step_without_gradient_raises(self):
        optimizer = Adam([Tensor(np.zeros(2), requires_grad=True)], lr=0.1)
        with pytest.raises(GraphError):
            optimizer.step()

class TestCheckpoint:
    def test_values_and_meta_survive(self, tmp_path, rng):
        params = {'layer.weight': rng.normal(size=(3, 4)), 'temperature': np.array(0.123456789012345)}
        path = str(tmp_path / 'model.ckpt')
        save_checkpoint(path, params, {'kind': 'sampler', 'n': '32'})
        meta, loaded = load_checkpoint(path)
        assert meta == {'kind': 'sampler', 'n': '32'}
        assert list(loaded.keys()) == ['layer.weight', 'temperature']
        np.testing.assert_array_equal(loaded['layer.weight'], params['layer.weight'])
        assert loaded['temperature'].shape == ()
        assert float(loaded['temperature']) == float(params['temperature'])

    def test_truncated_file(self, tmp_path):
        path = str(tmp_path / 'model.ckpt')
        save_checkpoint(path, {'w': np.ones(3)})
        with open(path) as fin:
            lines = fin.read().split('\n')
        with open(path, 'w') as out:
            out.write('\n'.join(lines[:-2]) + '\n')
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_wrong_value_count_reports_line(self, tmp_path):
        path = str(tmp_path / 'model.ckpt')
        with open(path, 'w') as out:
            out.write('rt-samplenet-checkpoint 1\nparam w 2x2\n1 2 3\nend\n')
        with pytest.raises(CheckpointError) as err:
            load_checkpoint(path)
        assert err.value.args[2] == 3

    def test_not_a_checkpoint(self, tmp_path):
        path = str(tmp_path / 'model.ckpt')
        with open(path, 'w') as out:
            out.write('hello\n')
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / 'missing.ckpt'))
