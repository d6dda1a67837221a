#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: autodiff.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet reverse-mode differentiation module.
#
# Classes:
# Tensor    - float64 array with optional gradient tracking
# AdamState - optimizer moments for a list of parameters
# Adam      - optimizer with step-decayed learning rate
#
# Functions:
# forward_op(name, *inputs, **params) - apply a named op
# sgd_adam_step(params, state, lr, betas) - one Adam update
# save_checkpoint(path, params, meta) / load_checkpoint(path)
#
'''
Reverse-mode automatic differentiation
======================================

A small dense-tensor engine. Every op records a node with a closure that
pushes the output gradient back to its inputs. Calling backward() on a scalar
Tensor sorts the recorded graph topologically and runs the closures from the
root towards the leaves.

Shapes follow numpy broadcasting for the elementwise ops (add, sub, mul, div);
gradients are summed back over the broadcast dimensions. matmul follows
numpy.matmul (1-D operands and batched stacks included).

A graph can be differentiated once. A second backward() over any node that was
already differentiated raises GraphError. Leaf gradients accumulate until
zeroGrad() is called.
'''

import contextlib
import logging
import threading

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import regex

from .exceptions import CheckpointError, GraphError, ShapeError

__all__ = ['Tensor', 'no_grad', 'is_grad_enabled', 'forward_op', 'OPS',
           'add', 'sub', 'mul', 'div', 'neg', 'matmul', 'relu', 'exp', 'log',
           'square', 'sqrt', 'sum', 'mean', 'max_over_axis', 'min_over_axis',
           'softmax', 'softmax_neg_sq_dist', 'gather', 'concat', 'reshape',
           'transpose', 'affine', 'batch_norm_eval_free_variant', 'clip_min',
           'pairwise_sq_dist', 'take', 'AdamState', 'sgd_adam_step', 'Adam',
           'save_checkpoint', 'load_checkpoint', 'CHECKPOINT_VERSION']

_log = logging.getLogger(__name__)

ArrayLike = Union['Tensor', np.ndarray, float, int, Sequence]

__grad_state = threading.local()

def is_grad_enabled() -> bool:
    '''Is graph recording enabled in this thread?'''
    return getattr(__grad_state, 'enabled', True)

@contextlib.contextmanager
def no_grad():
    '''Disable graph recording in the current thread'''
    previous = is_grad_enabled()
    __grad_state.enabled = False
    try:
        yield
    finally:
        __grad_state.enabled = previous

class Tensor(object):
    '''
    Tensor class
    ------------

    Dense float64 array with optional gradient tracking.
    '''

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self._op: Optional[str] = None
        self._consumed = False

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def __len__(self):
        return self.data.shape[0]

    def __repr__(self):
        op = ''
        if self._op is not None:
            op = ', op=%r'%self._op
        return 'Tensor(shape=%r, requires_grad=%r%s)'%(self.shape, self.requires_grad, op)

    def item(self) -> float:
        '''Get the value of a single element Tensor'''
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> 'Tensor':
        '''Get a Tensor sharing this value outside of any graph'''
        ret = Tensor.__new__(Tensor)
        ret.data = self.data
        ret.requires_grad = False
        ret.grad = None
        ret._parents = ()
        ret._backward = None
        ret._op = None
        ret._consumed = False
        return ret

    def isLeaf(self) -> bool:
        return self._backward is None

    def zeroGrad(self):
        self.grad = None

    def backward(self):
        '''Back-propagate from this scalar Tensor

        Populates grad on every reachable Tensor which requires a gradient.
        Leaf gradients are accumulated onto any existing grad.
        '''
        if self.data.size != 1:
            raise GraphError('backward() needs a scalar root, got shape %r'%(self.shape,))
        if not self.requires_grad:
            raise GraphError('backward() root does not require a gradient')
        order = _topological_order(self)
        for node in order:
            if node._backward is not None:
                if node._consumed:
                    raise GraphError('graph node %r was already differentiated, rebuild the graph first'%node)
                node.grad = np.zeros_like(node.data)
            elif node.grad is None:
                node.grad = np.zeros_like(node.data)
        self.grad = self.grad + np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)
                node._consumed = True

    def _accumulate(self, g: np.ndarray):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # Operators
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __matmul__(self, other): return matmul(self, other)
    def __rmatmul__(self, other): return matmul(other, self)
    def __neg__(self): return neg(self)
    def __getitem__(self, key): return take(self, key)

def _topological_order(root: Tensor) -> List[Tensor]:
    '''Inputs before consumers, over nodes that require a gradient'''
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order

def _as_tensor(x: ArrayLike) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)

def _result(data: np.ndarray, parents: Sequence[Tensor], op: str, backward: Callable[[np.ndarray], None]) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = np.asarray(data, dtype=np.float64)
    out.grad = None
    out._op = op
    out._consumed = False
    tracked = tuple(p for p in parents if p.requires_grad)
    if is_grad_enabled() and len(tracked) > 0:
        out.requires_grad = True
        out._parents = tracked
        out._backward = backward
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out

def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g

def _broadcast_check(op: str, a: Tensor, b: Tensor):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, [a.shape, b.shape], 'not broadcastable')

def _norm_axis(op: str, x: Tensor, axis: int) -> int:
    if x.ndim == 0 or axis < -x.ndim or axis >= x.ndim:
        raise ShapeError(op, [x.shape], 'axis %i out of range'%axis)
    return axis % x.ndim

#### Elementwise ops ####

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    '''a + b with broadcasting'''
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check('add', a, b)
    def _backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))
    return _result(a.data + b.data, (a, b), 'add', _backward)

def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    '''a - b with broadcasting'''
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check('sub', a, b)
    def _backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(-g, b.shape))
    return _result(a.data - b.data, (a, b), 'sub', _backward)

def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    '''a * b with broadcasting'''
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check('mul', a, b)
    def _backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))
    return _result(a.data * b.data, (a, b), 'mul', _backward)

def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    '''a / b with broadcasting'''
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check('div', a, b)
    out = a.data / b.data
    def _backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * out / b.data, b.shape))
    return _result(out, (a, b), 'div', _backward)

def neg(x: ArrayLike) -> Tensor:
    x = _as_tensor(x)
    def _backward(g):
        x._accumulate(-g)
    return _result(-x.data, (x,), 'neg', _backward)

def relu(x: ArrayLike) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0.0
    def _backward(g):
        x._accumulate(g * mask)
    return _result(np.where(mask, x.data, 0.0), (x,), 'relu', _backward)

def exp(x: ArrayLike) -> Tensor:
    x = _as_tensor(x)
    out = np.exp(x.data)
    def _backward(g):
        x._accumulate(g * out)
    return _result(out, (x,), 'exp', _backward)

def log(x: ArrayLike, floor: Optional[float] = None) -> Tensor:
    '''Natural log

    With a floor the argument is clamped from below first; clamped elements
    get no gradient.
    '''
    x = _as_tensor(x)
    if floor is None:
        arg = x.data
        mask = None
    else:
        mask = x.data >= floor
        arg = np.where(mask, x.data, floor)
    def _backward(g):
        gx = g / arg
        if mask is not None:
            gx = gx * mask
        x._accumulate(gx)
    return _result(np.log(arg), (x,), 'log', _backward)

def square(x: ArrayLike) -> Tensor:
    x = _as_tensor(x)
    def _backward(g):
        x._accumulate(2.0 * g * x.data)
    return _result(x.data * x.data, (x,), 'square', _backward)

def sqrt(x: ArrayLike) -> Tensor:
    x = _as_tensor(x)
    out = np.sqrt(x.data)
    def _backward(g):
        safe = np.where(out > 0.0, out, 1.0)
        x._accumulate(np.where(out > 0.0, 0.5 * g / safe, 0.0))
    return _result(out, (x,), 'sqrt', _backward)

def clip_min(x: ArrayLike, floor: float) -> Tensor:
    '''max(x, floor); gradient passes where x >= floor and is zero where clipped'''
    x = _as_tensor(x)
    mask = x.data >= floor
    def _backward(g):
        x._accumulate(g * mask)
    return _result(np.where(mask, x.data, floor), (x,), 'clip_min', _backward)

#### Reductions ####

def sum(x: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    if axis is not None:
        axis = _norm_axis('sum', x, axis)
    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x._accumulate(np.broadcast_to(g, x.shape))
    return _result(np.sum(x.data, axis=axis, keepdims=keepdims), (x,), 'sum', _backward)

def mean(x: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    if axis is None:
        count = x.size
    else:
        axis = _norm_axis('mean', x, axis)
        count = x.shape[axis]
    if count == 0:
        raise ShapeError('mean', [x.shape], 'empty reduction')
    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x._accumulate(np.broadcast_to(g / count, x.shape))
    return _result(np.mean(x.data, axis=axis, keepdims=keepdims), (x,), 'mean', _backward)

def _extreme_over_axis(op: str, picker, x: ArrayLike, axis: int) -> Tensor:
    x = _as_tensor(x)
    axis = _norm_axis(op, x, axis)
    if x.shape[axis] == 0:
        raise ShapeError(op, [x.shape], 'empty reduction')
    # ties go to the lowest index
    pick = np.expand_dims(picker(x.data, axis=axis), axis)
    out = np.take_along_axis(x.data, pick, axis=axis).squeeze(axis)
    def _backward(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, pick, np.expand_dims(g, axis), axis=axis)
        x._accumulate(gx)
    return _result(out, (x,), op, _backward)

def max_over_axis(x: ArrayLike, axis: int) -> Tensor:
    '''Maximum along one axis; the gradient routes to the argmax element'''
    return _extreme_over_axis('max_over_axis', np.argmax, x, axis)

def min_over_axis(x: ArrayLike, axis: int) -> Tensor:
    '''Minimum along one axis; the gradient routes to the argmin element'''
    return _extreme_over_axis('min_over_axis', np.argmin, x, axis)

#### Softmax family ####

def _softmax_backward(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    return w * (g - np.sum(g * w, axis=-1, keepdims=True))

def softmax(x: ArrayLike) -> Tensor:
    '''Softmax over the last axis'''
    x = _as_tensor(x)
    if x.ndim == 0:
        raise ShapeError('softmax', [x.shape], 'needs at least one axis')
    z = x.data - np.max(x.data, axis=-1, keepdims=True)
    e = np.exp(z)
    w = e / np.sum(e, axis=-1, keepdims=True)
    def _backward(g):
        x._accumulate(_softmax_backward(w, g))
    return _result(w, (x,), 'softmax', _backward)

def softmax_neg_sq_dist(sq: ArrayLike, t: ArrayLike) -> Tensor:
    '''softmax(-sq / t**2) over the last axis

    sq holds squared distances (..., k) and t is a single element temperature.
    The maximum exponent is subtracted per row before exponentiating.
    '''
    sq, t = _as_tensor(sq), _as_tensor(t)
    if sq.ndim == 0 or t.size != 1:
        raise ShapeError('softmax_neg_sq_dist', [sq.shape, t.shape])
    tv = float(t.data.reshape(-1)[0])
    z = -sq.data / (tv * tv)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    w = e / np.sum(e, axis=-1, keepdims=True)
    def _backward(g):
        gz = _softmax_backward(w, g)
        if sq.requires_grad:
            sq._accumulate(-gz / (tv * tv))
        if t.requires_grad:
            t._accumulate(np.full(t.shape, np.sum(gz * 2.0 * sq.data) / (tv ** 3)))
    return _result(w, (sq, t), 'softmax_neg_sq_dist', _backward)

#### Linear algebra ####

def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    '''numpy.matmul semantics, including 1-D operands and batch broadcasting'''
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim == 0 or b.ndim == 0:
        raise ShapeError('matmul', [a.shape, b.shape], 'scalar operand')
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError('matmul', [a.shape, b.shape])
    def _backward(g):
        if a.ndim == 1 and b.ndim == 1:
            a._accumulate(g * b.data)
            b._accumulate(g * a.data)
            return
        ad = a.data[None, :] if a.ndim == 1 else a.data
        bd = b.data[:, None] if b.ndim == 1 else b.data
        gg = g
        if a.ndim == 1:
            gg = np.expand_dims(gg, -2)
        if b.ndim == 1:
            gg = np.expand_dims(gg, -1)
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(gg, np.swapaxes(bd, -1, -2)), ad.shape)
            a._accumulate(ga.reshape(a.shape))
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(ad, -1, -2), gg), bd.shape)
            b._accumulate(gb.reshape(b.shape))
    return _result(out, (a, b), 'matmul', _backward)

def affine(x: ArrayLike, scale: ArrayLike, shift: ArrayLike) -> Tensor:
    '''Per-feature x * scale + shift over the last axis'''
    x, scale, shift = _as_tensor(x), _as_tensor(scale), _as_tensor(shift)
    if x.ndim == 0 or scale.shape != (x.shape[-1],) or shift.shape != (x.shape[-1],):
        raise ShapeError('affine', [x.shape, scale.shape, shift.shape])
    def _backward(g):
        if x.requires_grad:
            x._accumulate(g * scale.data)
        flat_g = g.reshape(-1, x.shape[-1])
        if scale.requires_grad:
            scale._accumulate(np.sum(flat_g * x.data.reshape(-1, x.shape[-1]), axis=0))
        if shift.requires_grad:
            shift._accumulate(np.sum(flat_g, axis=0))
    return _result(x.data * scale.data + shift.data, (x, scale, shift), 'affine', _backward)

batch_norm_eval_free_variant = affine

def pairwise_sq_dist(x: ArrayLike, y: ArrayLike) -> Tensor:
    '''Squared distances between the rows of x (..., N, D) and y (..., M, D)

    Returns (..., N, M).
    '''
    x, y = _as_tensor(x), _as_tensor(y)
    if x.ndim < 2 or y.ndim < 2 or x.shape[-1] != y.shape[-1]:
        raise ShapeError('pairwise_sq_dist', [x.shape, y.shape])
    try:
        np.broadcast_shapes(x.shape[:-2], y.shape[:-2])
    except ValueError:
        raise ShapeError('pairwise_sq_dist', [x.shape, y.shape], 'batch dimensions differ')
    out = None
    for c in range(x.shape[-1]):
        d = x.data[..., :, None, c] - y.data[..., None, :, c]
        out = d * d if out is None else out + d * d
    def _backward(g):
        if x.requires_grad:
            gx = 2.0 * (x.data * np.sum(g, axis=-1)[..., None] - np.matmul(g, y.data))
            x._accumulate(_unbroadcast(gx, x.shape))
        if y.requires_grad:
            gy = 2.0 * (y.data * np.sum(g, axis=-2)[..., None] - np.matmul(np.swapaxes(g, -1, -2), x.data))
            y._accumulate(_unbroadcast(gy, y.shape))
    return _result(out, (x, y), 'pairwise_sq_dist', _backward)

#### Indexing and shape ops ####

def gather(x: ArrayLike, index: np.ndarray) -> Tensor:
    '''Pick rows of x by integer index

    x is (N, C) with any-shaped index giving (..., C), or batched (B, N, C)
    with index (B, ...) giving (B, ..., C).
    '''
    x = _as_tensor(x)
    index = np.asarray(index)
    if not np.issubdtype(index.dtype, np.integer):
        raise ShapeError('gather', [x.shape, index.shape], 'index must be integer')
    if x.ndim == 2:
        key = (index,)
    elif x.ndim == 3 and index.ndim >= 1 and index.shape[0] == x.shape[0]:
        key = (np.arange(x.shape[0]).reshape((-1,) + (1,) * (index.ndim - 1)), index)
    else:
        raise ShapeError('gather', [x.shape, index.shape])
    if index.size > 0 and (index.min() < 0 or index.max() >= x.shape[-2]):
        raise ShapeError('gather', [x.shape, index.shape], 'index out of range')
    def _backward(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, key, g)
        x._accumulate(gx)
    return _result(x.data[key], (x,), 'gather', _backward)

def take(x: ArrayLike, key) -> Tensor:
    '''x[key] for basic or integer array indexing'''
    x = _as_tensor(x)
    try:
        out = x.data[key]
    except IndexError as err:
        raise ShapeError('take', [x.shape], str(err))
    parts = key if isinstance(key, tuple) else (key,)
    basic = all([isinstance(k, (int, np.integer, slice)) or k is Ellipsis or k is None for k in parts])
    def _backward(g):
        gx = np.zeros_like(x.data)
        if basic:
            gx[key] += g
        else:
            np.add.at(gx, key, g)
        x._accumulate(gx)
    return _result(out, (x,), 'take', _backward)

def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    if len(ts) == 0:
        raise ShapeError('concat', [], 'nothing to concatenate')
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as err:
        raise ShapeError('concat', [t.shape for t in ts], str(err))
    splits = np.cumsum([t.shape[axis] for t in ts])[:-1]
    def _backward(g):
        for t, part in zip(ts, np.split(g, splits, axis=axis)):
            t._accumulate(part)
    return _result(out, ts, 'concat', _backward)

def reshape(x: ArrayLike, shape: Sequence[int]) -> Tensor:
    x = _as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError('reshape', [x.shape, tuple(shape)])
    def _backward(g):
        x._accumulate(g.reshape(x.shape))
    return _result(out, (x,), 'reshape', _backward)

def transpose(x: ArrayLike, axes: Optional[Sequence[int]] = None) -> Tensor:
    '''Permute axes; by default swap the last two'''
    x = _as_tensor(x)
    if axes is None:
        if x.ndim < 2:
            raise ShapeError('transpose', [x.shape], 'needs two axes')
        axes = list(range(x.ndim - 2)) + [x.ndim - 1, x.ndim - 2]
    axes = list(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError('transpose', [x.shape], 'bad axes %r'%(axes,))
    inverse = np.argsort(axes)
    def _backward(g):
        x._accumulate(np.transpose(g, inverse))
    return _result(np.transpose(x.data, axes), (x,), 'transpose', _backward)

OPS: Dict[str, Callable[..., Tensor]] = {
    'add': add,
    'sub': sub,
    'mul': mul,
    'div': div,
    'neg': neg,
    'matmul': matmul,
    'relu': relu,
    'exp': exp,
    'log': log,
    'square': square,
    'sqrt': sqrt,
    'sum': sum,
    'mean': mean,
    'max_over_axis': max_over_axis,
    'min_over_axis': min_over_axis,
    'softmax': softmax,
    'softmax_neg_sq_dist': softmax_neg_sq_dist,
    'gather': gather,
    'take': take,
    'concat': concat,
    'reshape': reshape,
    'transpose': transpose,
    'affine': affine,
    'batch_norm_eval_free_variant': affine,
    'clip_min': clip_min,
    'pairwise_sq_dist': pairwise_sq_dist,
}

def forward_op(name: str, *inputs, **params) -> Tensor:
    '''Apply the op registered as _name_ to the inputs'''
    if name not in OPS:
        raise GraphError('unknown op %r'%name)
    return OPS[name](*inputs, **params)

#### Optimizer ####

@dataclass
class AdamState:
    '''First and second moments for a list of parameters'''
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def forParams(cls, params: Sequence[Tensor]) -> 'AdamState':
        return cls(m=[np.zeros_like(p.data) for p in params], v=[np.zeros_like(p.data) for p in params])

def sgd_adam_step(params: Sequence[Tensor], state: AdamState, lr: float, betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
    '''Apply one Adam update in place'''
    if len(state.m) != len(params) or len(state.v) != len(params):
        raise ShapeError('adam', [(len(params),), (len(state.m),), (len(state.v),)], 'state does not match parameters')
    for i, p in enumerate(params):
        if p.grad is None:
            raise GraphError('parameter %i has no gradient, run backward() first'%i)
        if state.m[i].shape != p.shape or state.v[i].shape != p.shape:
            raise ShapeError('adam', [p.shape, state.m[i].shape, state.v[i].shape])
    beta1, beta2 = betas
    state.step += 1
    c1 = 1.0 - beta1 ** state.step
    c2 = 1.0 - beta2 ** state.step
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)

class Adam(object):
    '''
    Adam optimizer
    --------------

    Learning rate is multiplied by _decay_ every _decay_every_ epochs.
    '''
    def __init__(self, params: Iterable[Tensor], lr: float, betas: Tuple[float, float] = (0.9, 0.999), decay: float = 0.7, decay_every: int = 60):
        self.__params = list(params)
        self.__base_lr = lr
        self.__lr = lr
        self.__betas = betas
        self.__decay = decay
        self.__decay_every = decay_every
        self.__state = AdamState.forParams(self.__params)

    def params(self) -> List[Tensor]:
        return self.__params

    def lr(self) -> float:
        return self.__lr

    def setEpoch(self, epoch: int):
        '''Set the learning rate for the given epoch from the decay schedule'''
        steps = 0
        if self.__decay_every > 0:
            steps = epoch // self.__decay_every
        self.__lr = self.__base_lr * (self.__decay ** steps)

    def zeroGrad(self):
        for p in self.__params:
            p.zeroGrad()

    def step(self):
        sgd_adam_step(self.__params, self.__state, self.__lr, self.__betas)

#### Checkpoints ####

CHECKPOINT_VERSION = 1

__header_re = regex.compile(r'^rt-samplenet-checkpoint (?P<version>\d+)$')
__meta_re = regex.compile(r'^meta (?P<key>[A-Za-z_][A-Za-z0-9_.]*) (?P<value>.*)$')
__param_re = regex.compile(r'^param (?P<name>\S+) (?P<dims>scalar|\d+(?:x\d+)*)$')

def save_checkpoint(path: str, params: Dict[str, np.ndarray], meta: Optional[Dict[str, str]] = None):
    '''Write named parameters as a flat text listing

    rt-samplenet-checkpoint 1
    meta <key> <value>
    param <name> <d1>x<d2>...   (or "scalar")
    <row-major values, space separated>
    end
    '''
    lines = ['rt-samplenet-checkpoint %i'%CHECKPOINT_VERSION]
    if meta is not None:
        for key in sorted(meta.keys()):
            lines += ['meta %s %s'%(key, meta[key])]
    for name, value in params.items():
        value = np.asarray(value, dtype=np.float64)
        dims = 'scalar' if value.ndim == 0 else 'x'.join([str(d) for d in value.shape])
        lines += ['param %s %s'%(name, dims)]
        lines += [' '.join([repr(float(v)) for v in value.reshape(-1)])]
    lines += ['end']
    with open(path, 'w') as out:
        out.write('\n'.join(lines) + '\n')
    _log.debug('Wrote checkpoint %s with %i parameters', path, len(params))

def load_checkpoint(path: str) -> Tuple[Dict[str, str], Dict[str, np.ndarray]]:
    '''Read a checkpoint written by save_checkpoint()

    Returns (meta, params).
    '''
    try:
        with open(path, 'r') as fin:
            lines = fin.read().split('\n')
    except OSError as err:
        raise CheckpointError('cannot read checkpoint: %s'%err.strerror, path)
    if len(lines) > 0 and lines[-1] == '':
        lines = lines[:-1]
    if len(lines) == 0:
        raise CheckpointError('empty checkpoint', path, 1)
    match = __header_re.match(lines[0])
    if match is None:
        raise CheckpointError('not an rt-samplenet checkpoint', path, 1)
    if int(match.group('version')) != CHECKPOINT_VERSION:
        raise CheckpointError('unsupported checkpoint version %s'%match.group('version'), path, 1)
    meta = {}
    params = {}
    lineno = 1
    ended = False
    while lineno < len(lines):
        line = lines[lineno]
        lineno += 1
        if ended:
            raise CheckpointError('content after end marker', path, lineno)
        if line == 'end':
            ended = True
            continue
        match = __meta_re.match(line)
        if match is not None:
            meta[match.group('key')] = match.group('value')
            continue
        match = __param_re.match(line)
        if match is None:
            raise CheckpointError('unrecognised line', path, lineno)
        name = match.group('name')
        if name in params:
            raise CheckpointError('duplicate parameter %s'%name, path, lineno)
        dims = () if match.group('dims') == 'scalar' else tuple([int(d) for d in match.group('dims').split('x')])
        if lineno >= len(lines):
            raise CheckpointError('missing values for parameter %s'%name, path, lineno)
        values_line = lines[lineno]
        lineno += 1
        tokens = values_line.split()
        expected = int(np.prod(dims, dtype=np.int64))
        if len(tokens) != expected:
            raise CheckpointError('parameter %s needs %i values, found %i'%(name, expected, len(tokens)), path, lineno)
        try:
            values = np.array([float(tok) for tok in tokens], dtype=np.float64)
        except ValueError:
            raise CheckpointError('non-numeric value for parameter %s'%name, path, lineno)
        params[name] = values.reshape(dims)
    if not ended:
        raise CheckpointError('missing end marker, file truncated?', path, lineno)
    return meta, params
