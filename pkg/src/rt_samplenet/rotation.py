#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: rotation.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet rotations module.
#
'''
Rotations
=========

Unit quaternions (w, x, y, z), Hamilton product convention. Euler angles are
intrinsic Z-Y-X: R = Rz(z) @ Ry(y) @ Rx(x).

Points are rows, so rotating a cloud is points @ R.T.
'''

import math

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import GeometryError

__all__ = ['Rotation', 'quaternion_multiply', 'quaternion_to_matrix', 'rotation_error', 'rotation_matrix_loss']

def quaternion_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    '''Hamilton product a * b'''
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        ])

def _matrix_entries(w, x, y, z):
    return [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]

@dataclass(frozen=True)
class Rotation:
    '''A 3D rotation held as a unit quaternion (w, x, y, z)'''
    quaternion: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quaternion, dtype=np.float64).reshape(-1)
        if q.shape != (4,) or not np.all(np.isfinite(q)):
            raise GeometryError('a rotation quaternion needs 4 finite values, got %r'%(q,))
        norm = np.linalg.norm(q)
        if norm == 0.0:
            raise GeometryError('zero quaternion is not a rotation')
        object.__setattr__(self, 'quaternion', q / norm)

    @classmethod
    def identity(cls) -> 'Rotation':
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def fromAxisAngle(cls, axis, degrees: float) -> 'Rotation':
        axis = np.asarray(axis, dtype=np.float64)
        half = math.radians(degrees) / 2.0
        return cls(np.concatenate([[math.cos(half)], math.sin(half) * axis / np.linalg.norm(axis)]))

    @classmethod
    def fromEuler(cls, z: float, y: float, x: float) -> 'Rotation':
        '''Intrinsic Z-Y-X angles in degrees'''
        qz = cls.fromAxisAngle([0.0, 0.0, 1.0], z).quaternion
        qy = cls.fromAxisAngle([0.0, 1.0, 0.0], y).quaternion
        qx = cls.fromAxisAngle([1.0, 0.0, 0.0], x).quaternion
        return cls(quaternion_multiply(quaternion_multiply(qz, qy), qx))

    def matrix(self) -> np.ndarray:
        return np.array(_matrix_entries(*self.quaternion))

    def inverse(self) -> 'Rotation':
        w, x, y, z = self.quaternion
        return Rotation(np.array([w, -x, -y, -z]))

    def compose(self, other: 'Rotation') -> 'Rotation':
        '''self after other'''
        return Rotation(quaternion_multiply(self.quaternion, other.quaternion))

    def apply(self, points: np.ndarray) -> np.ndarray:
        '''Rotate row points'''
        return np.asarray(points, dtype=np.float64) @ self.matrix().T

def quaternion_to_matrix(q: Union[Tensor, np.ndarray]) -> Tensor:
    '''Differentiable (..., 4) unit quaternions to (..., 3, 3) matrices'''
    q = q if isinstance(q, Tensor) else Tensor(q)
    if q.ndim < 1 or q.shape[-1] != 4:
        raise GeometryError('quaternions must have 4 components, got shape %r'%(q.shape,))
    lead = q.shape[:-1]
    w, x, y, z = [q[..., i] for i in range(4)]
    entries = [e for row in _matrix_entries(w, x, y, z) for e in row]
    flat = ad.concat([ad.reshape(e if isinstance(e, Tensor) else Tensor(np.broadcast_to(e, lead)), lead + (1,)) for e in entries], axis=-1)
    return ad.reshape(flat, lead + (3, 3))

def rotation_matrix_loss(R_pred: Tensor, R_gt: Union[Tensor, np.ndarray]) -> Tensor:
    '''Squared Frobenius norm of R_pred^-1 @ R_gt - I

    Batched input gives one value per pair.
    '''
    R_gt = R_gt if isinstance(R_gt, Tensor) else Tensor(R_gt)
    diff = ad.matmul(ad.transpose(R_pred), R_gt) - np.eye(3)
    return ad.sum(ad.sum(ad.square(diff), axis=-1), axis=-1)

def rotation_error(q_pred: Rotation, q_gt: Rotation) -> float:
    '''2 * acos(2 <q_pred, q_gt>**2 - 1) in degrees

    The acos argument is clamped to [-1, 1]. This measures twice the
    geodesic angle between the rotations.
    '''
    dot = float(np.dot(q_pred.quaternion, q_gt.quaternion))
    arg = min(1.0, max(-1.0, 2.0 * dot * dot - 1.0))
    return math.degrees(2.0 * math.acos(arg))
