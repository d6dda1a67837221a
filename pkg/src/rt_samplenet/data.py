#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: data.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet synthetic data and point cloud file module.
#
'''
Synthetic shapes and point cloud files
======================================

Clouds are sampled uniformly on the surface of one of eight primitives,
jittered, scaled per axis and normalised to zero centroid and unit maximum
radius. Each cloud draws from its own random stream so datasets can be
generated in any order, or in parallel, and come out bit-identical.

Files are ASCII XYZ (one "x y z" per line) or ASCII PLY. A generated dataset
directory holds the clouds as XYZ files and a manifest.csv of
(path, class_id, split).
'''

import csv
import logging
import math
import os
import os.path

from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import regex

from .exceptions import DataError, DataFormatError, GeometryError
from .geometry import as_point_cloud
from .rotation import Rotation
from .utils import CsvLog, list_join, provenance

__all__ = ['CLASS_NAMES', 'ShapeSpec', 'generate_cloud', 'normalize',
           'make_registration_pair', 'read_cloud', 'write_cloud',
           'DatasetSplit', 'make_split', 'Dataset', 'build_dataset',
           'generate_dataset', 'load_dataset', 'CloudBatch', 'ShapeDataset',
           'RegistrationDataset']

_log = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, Sequence[int]]

#### Primitive surfaces ####

def _unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)

def _generate_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    # antipodal pairs (plus one balanced triple for odd n) keep the centroid at the centre
    parts = []
    pairs = n // 2
    if n % 2 == 1:
        pairs -= 1
        a, b = _unit_vectors(rng, 2)
        b = b - np.dot(a, b) * a
        b = b / np.linalg.norm(b)
        angles = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])
        parts += [np.outer(np.cos(angles), a) + np.outer(np.sin(angles), b)]
    v = _unit_vectors(rng, pairs)
    parts = [v, -v] + parts
    return np.concatenate(parts, axis=0)

BOX_HALF_EXTENTS = np.array([1.0, 0.7, 0.4])

def box_face_areas() -> np.ndarray:
    '''Areas of the box faces in the order -x, +x, -y, +y, -z, +z'''
    h = BOX_HALF_EXTENTS
    areas = []
    for axis in range(3):
        u, v = [a for a in range(3) if a != axis]
        areas += [4.0 * h[u] * h[v]] * 2
    return np.array(areas)

def _generate_box(rng: np.random.Generator, n: int) -> np.ndarray:
    h = BOX_HALF_EXTENTS
    areas = box_face_areas()
    faces = rng.choice(6, size=n, p=areas / np.sum(areas))
    P = rng.uniform(-1.0, 1.0, size=(n, 3)) * h
    axis = faces // 2
    sign = np.where(faces % 2 == 0, -1.0, 1.0)
    P[np.arange(n), axis] = sign * h[axis]
    return P

def _disk(rng: np.random.Generator, count: int, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    r = radius * np.sqrt(rng.uniform(size=count))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return r * np.cos(theta), r * np.sin(theta)

def _generate_cylinder(rng: np.random.Generator, n: int) -> np.ndarray:
    radius, half_height = 0.5, 1.0
    areas = np.array([2.0 * math.pi * radius * 2.0 * half_height, math.pi * radius ** 2, math.pi * radius ** 2])
    part = rng.choice(3, size=n, p=areas / np.sum(areas))
    P = np.zeros((n, 3))
    side = part == 0
    theta = rng.uniform(0.0, 2.0 * math.pi, size=int(np.sum(side)))
    P[side] = np.stack([radius * np.cos(theta), radius * np.sin(theta), rng.uniform(-half_height, half_height, size=theta.shape[0])], axis=1)
    for which, z in ((1, -half_height), (2, half_height)):
        sel = part == which
        x, y = _disk(rng, int(np.sum(sel)), radius)
        P[sel] = np.stack([x, y, np.full(x.shape, z)], axis=1)
    return P

def _generate_cone(rng: np.random.Generator, n: int) -> np.ndarray:
    radius, height = 0.6, 1.5
    slant = math.hypot(radius, height)
    areas = np.array([math.pi * radius * slant, math.pi * radius ** 2])
    part = rng.choice(2, size=n, p=areas / np.sum(areas))
    P = np.zeros((n, 3))
    side = part == 0
    count = int(np.sum(side))
    # distance from the apex has density proportional to itself
    s = np.sqrt(rng.uniform(size=count))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=count)
    P[side] = np.stack([radius * s * np.cos(theta), radius * s * np.sin(theta), height / 2.0 - height * s], axis=1)
    base = part == 1
    x, y = _disk(rng, int(np.sum(base)), radius)
    P[base] = np.stack([x, y, np.full(x.shape, -height / 2.0)], axis=1)
    return P

def _generate_torus(rng: np.random.Generator, n: int) -> np.ndarray:
    major, minor = 0.7, 0.25
    found = []
    total = 0
    while total < n:
        theta = rng.uniform(0.0, 2.0 * math.pi, size=2 * n)
        phi = rng.uniform(0.0, 2.0 * math.pi, size=2 * n)
        keep = rng.uniform(size=2 * n) < (major + minor * np.cos(phi)) / (major + minor)
        theta, phi = theta[keep], phi[keep]
        ring = major + minor * np.cos(phi)
        found += [np.stack([ring * np.cos(theta), ring * np.sin(theta), minor * np.sin(phi)], axis=1)]
        total += theta.shape[0]
    return np.concatenate(found, axis=0)[:n]

def _generate_plane_cross(rng: np.random.Generator, n: int) -> np.ndarray:
    '''Two perpendicular squares crossing along the z axis'''
    a = rng.uniform(-1.0, 1.0, size=n)
    z = rng.uniform(-1.0, 1.0, size=n)
    on_xz = rng.uniform(size=n) < 0.5
    return np.stack([np.where(on_xz, a, 0.0), np.where(on_xz, 0.0, a), z], axis=1)

def _generate_helix(rng: np.random.Generator, n: int) -> np.ndarray:
    '''A thin tube wound twice around the z axis'''
    coil, tube, turns = 0.6, 0.08, 2.0
    rise = 2.0 / (2.0 * math.pi * turns)
    s = rng.uniform(0.0, 2.0 * math.pi * turns, size=n)
    psi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    centre = np.stack([coil * np.cos(s), coil * np.sin(s), rise * s - 1.0], axis=1)
    tangent = np.stack([-coil * np.sin(s), coil * np.cos(s), np.full(n, rise)], axis=1)
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    normal = np.stack([-np.cos(s), -np.sin(s), np.zeros(n)], axis=1)
    binormal = np.cross(tangent, normal)
    return centre + tube * (np.cos(psi)[:, None] * normal + np.sin(psi)[:, None] * binormal)

def _generate_two_spheres(rng: np.random.Generator, n: int) -> np.ndarray:
    radius, offset = 0.5, 0.7
    left = rng.uniform(size=n) < 0.5
    P = radius * _unit_vectors(rng, n)
    P[:, 0] += np.where(left, -offset, offset)
    return P

_PRIMITIVES: Dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    'sphere': _generate_sphere,
    'box': _generate_box,
    'cylinder': _generate_cylinder,
    'cone': _generate_cone,
    'torus': _generate_torus,
    'plane_cross': _generate_plane_cross,
    'helix': _generate_helix,
    'two_spheres': _generate_two_spheres,
}

# class ids are positions in this list
CLASS_NAMES: List[str] = list(_PRIMITIVES.keys())

# primitives which only take a uniform scale, so they keep their shape
_ISOTROPIC = {'sphere'}

@dataclass
class ShapeSpec:
    '''
    What to sample

    primitive: one of CLASS_NAMES
    jitter: standard deviation of the Gaussian noise added to each coordinate
    scale_range: per-axis scale factors are drawn uniformly from this range
    seed: seed of the cloud's own random stream
    '''
    primitive: str
    class_id: Optional[int] = None
    jitter: float = 0.01
    scale_range: Tuple[float, float] = (0.8, 1.2)
    seed: SeedLike = 0

    def __post_init__(self):
        if self.class_id is None and self.primitive in _PRIMITIVES:
            self.class_id = CLASS_NAMES.index(self.primitive)

def normalize(P) -> np.ndarray:
    '''Translate to zero centroid and scale to unit maximum radius'''
    P = as_point_cloud(P)
    centred = P - np.mean(P, axis=0)
    radius = float(np.max(np.linalg.norm(centred, axis=1)))
    if radius <= 1e-12 * max(1.0, float(np.max(np.abs(P)))):
        raise GeometryError('cannot normalise a cloud whose points are all identical')
    return centred / radius

def generate_cloud(spec: ShapeSpec, n: int) -> np.ndarray:
    '''Sample _n_ points of the primitive described by _spec_'''
    if spec.primitive not in _PRIMITIVES:
        raise DataError('unknown primitive %r, use one of: %s'%(spec.primitive, list_join(CLASS_NAMES, ', ', ' or ')))
    if n < 8:
        raise DataError('a cloud needs at least 8 points, asked for %i'%n)
    lo, hi = spec.scale_range
    if lo <= 0.0 or hi < lo:
        raise DataError('invalid scale range %r'%(spec.scale_range,))
    if spec.jitter < 0.0:
        raise DataError('jitter must not be negative')
    rng = np.random.default_rng(spec.seed)
    P = _PRIMITIVES[spec.primitive](rng, n)
    if spec.jitter > 0.0:
        P = P + rng.normal(0.0, spec.jitter, size=P.shape)
    if spec.primitive in _ISOTROPIC:
        scale = np.full(3, rng.uniform(lo, hi))
    else:
        scale = rng.uniform(lo, hi, size=3)
    return normalize(P * scale)

def make_registration_pair(T, angle_range: float, seed: SeedLike) -> Tuple[np.ndarray, Rotation]:
    '''Rotate template T by random intrinsic Z-Y-X Euler angles drawn
    uniformly from [-angle_range, angle_range] degrees.

    Returns (S, R_gt) with S = T @ R_gt.T.
    '''
    if angle_range < 0.0 or angle_range > 180.0:
        raise DataError('angle range must be within 0..180 degrees, got %r'%angle_range)
    T = as_point_cloud(T, 'template')
    rng = np.random.default_rng(seed)
    z, y, x = rng.uniform(-angle_range, angle_range, size=3)
    R_gt = Rotation.fromEuler(z, y, x)
    return R_gt.apply(T), R_gt

#### Files ####

__float_re = regex.compile(r'^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$|^[-+]?(?:inf|nan)$', regex.IGNORECASE)
__element_re = regex.compile(r'^element\s+(?P<name>\S+)\s+(?P<count>\d+)$')
__property_re = regex.compile(r'^property\s+(?P<type>\S+)\s+(?P<name>\S+)$')
__format_re = regex.compile(r'^format\s+(?P<format>\S+)\s+(?P<version>\S+)$')

_PLY_FLOAT_TYPES = ('float', 'double', 'float32', 'float64')

def _parse_floats(tokens: List[str], path: str, lineno: int) -> List[float]:
    for tok in tokens:
        if __float_re.match(tok) is None:
            raise DataFormatError('not a number: %r'%tok, path, lineno)
    return [float(tok) for tok in tokens]

def _read_xyz(path: str, lines: List[str]) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if len(line) == 0 or line[0] == '#':
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise DataFormatError('expected 3 coordinates, found %i'%len(tokens), path, lineno)
        rows += [_parse_floats(tokens, path, lineno)]
    return np.array(rows, dtype=np.float64).reshape(-1, 3)

def _read_ply(path: str, lines: List[str]) -> np.ndarray:
    if len(lines) == 0 or lines[0].strip() != 'ply':
        raise DataFormatError('missing "ply" magic line', path, 1)
    elements = []
    lineno = 1
    header_done = False
    while lineno < len(lines):
        line = lines[lineno].strip()
        lineno += 1
        if line == 'end_header':
            header_done = True
            break
        if len(line) == 0 or line.startswith('comment') or line.startswith('obj_info'):
            continue
        match = __format_re.match(line)
        if match is not None:
            if match.group('format') != 'ascii':
                raise DataFormatError('only ASCII PLY is supported, found %s'%match.group('format'), path, lineno)
            continue
        match = __element_re.match(line)
        if match is not None:
            elements += [(match.group('name'), int(match.group('count')), [])]
            continue
        match = __property_re.match(line)
        if match is not None:
            if len(elements) == 0:
                raise DataFormatError('property before any element', path, lineno)
            elements[-1][2].append((match.group('type'), match.group('name')))
            continue
        if line.startswith('property list'):
            if len(elements) == 0:
                raise DataFormatError('property before any element', path, lineno)
            elements[-1][2].append(('list', line.split()[-1]))
            continue
        raise DataFormatError('unrecognised header line', path, lineno)
    if not header_done:
        raise DataFormatError('missing end_header', path, lineno)
    vertex = [e for e in elements if e[0] == 'vertex']
    if len(vertex) != 1:
        raise DataFormatError('header must declare exactly one vertex element', path, lineno)
    if elements[0][0] != 'vertex':
        raise DataFormatError('vertex element must come first', path, lineno)
    _, count, props = vertex[0]
    names = [name for _, name in props]
    try:
        columns = [names.index(axis) for axis in ('x', 'y', 'z')]
    except ValueError:
        raise DataFormatError('vertex element needs x, y and z properties', path, lineno)
    for c in columns:
        if props[c][0] not in _PLY_FLOAT_TYPES:
            raise DataFormatError('vertex property %s must be a float type, found %s'%(props[c][1], props[c][0]), path, lineno)
    body = [(i + lineno + 1, l.strip()) for i, l in enumerate(lines[lineno:]) if len(l.strip()) > 0]
    if len(body) < count or (len(elements) == 1 and len(body) != count):
        raise DataFormatError('header declares %i vertices, body has %i lines'%(count, len(body)), path, body[-1][0] if len(body) > 0 else lineno)
    rows = []
    for body_lineno, line in body[:count]:
        tokens = line.split()
        if len(tokens) != len(props):
            raise DataFormatError('expected %i values, found %i'%(len(props), len(tokens)), path, body_lineno)
        values = _parse_floats(tokens, path, body_lineno)
        rows += [[values[c] for c in columns]]
    return np.array(rows, dtype=np.float64).reshape(-1, 3)

def _cloud_format(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext not in ('.xyz', '.ply'):
        raise DataFormatError('unsupported file extension %r, use .xyz or .ply'%ext, path)
    return ext[1:]

def read_cloud(path: str) -> np.ndarray:
    '''Read an ASCII XYZ or PLY point cloud'''
    fmt = _cloud_format(path)
    try:
        with open(path, 'r') as fin:
            lines = fin.read().split('\n')
    except OSError as err:
        raise DataFormatError('cannot read file: %s'%err.strerror, path)
    if fmt == 'xyz':
        return _read_xyz(path, lines)
    return _read_ply(path, lines)

def write_cloud(path: str, P) -> None:
    '''Write an ASCII XYZ or PLY point cloud, values written losslessly'''
    fmt = _cloud_format(path)
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 3:
        raise DataError('a point cloud must be (n, 3), got %r'%(P.shape,))
    body = [' '.join([repr(float(v)) for v in row]) for row in P]
    if fmt == 'ply':
        header = ['ply', 'format ascii 1.0', 'element vertex %i'%P.shape[0],
                  'property double x', 'property double y', 'property double z', 'end_header']
        body = header + body
    with open(path, 'w') as out:
        out.write('\n'.join(body) + '\n')

#### Datasets ####

SPLIT_NAMES = ('train', 'validation', 'test')

@dataclass
class DatasetSplit:
    '''Index lists into a dataset; disjoint and covering'''
    train: List[int]
    validation: List[int]
    test: List[int]
    fractions: Tuple[float, float, float] = (0.80, 0.04, 0.16)

    def indices(self, name: str) -> List[int]:
        if name not in SPLIT_NAMES:
            raise DataError('unknown split %r, use one of: %s'%(name, list_join(SPLIT_NAMES, ', ', ' or ')))
        return getattr(self, name)

    def splitOf(self) -> Dict[int, str]:
        return dict([(i, name) for name in SPLIT_NAMES for i in self.indices(name)])

def make_split(labels: Sequence[int], fractions: Tuple[float, float, float] = (0.80, 0.04, 0.16), seed: SeedLike = 0) -> DatasetSplit:
    '''Split each class separately by _fractions_ (train, validation, test)'''
    if len(fractions) != 3 or min(fractions) < 0.0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError('split fractions must be three non-negative values summing to 1, got %r'%(fractions,))
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, validation, test = [], [], []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        members = members[rng.permutation(members.shape[0])]
        n_train = int(round(fractions[0] * members.shape[0]))
        n_val = min(int(round(fractions[1] * members.shape[0])), members.shape[0] - n_train)
        train += members[:n_train].tolist()
        validation += members[n_train:n_train + n_val].tolist()
        test += members[n_train + n_val:].tolist()
    return DatasetSplit(sorted(train), sorted(validation), sorted(test), tuple(fractions))

@dataclass
class Dataset:
    '''Clouds (N, n, 3) with their class ids and split'''
    clouds: np.ndarray
    labels: np.ndarray
    split: DatasetSplit
    class_names: List[str]
    paths: List[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.clouds.shape[1]

    def subset(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        idx = np.array(self.split.indices(name), dtype=np.int64)
        return self.clouds[idx], self.labels[idx]

def _dataset_specs(size: int, class_names: Sequence[str], seed: int, jitter: float, scale_range: Tuple[float, float]) -> List[ShapeSpec]:
    for name in class_names:
        if name not in _PRIMITIVES:
            raise DataError('unknown primitive %r, use one of: %s'%(name, list_join(CLASS_NAMES, ', ', ' or ')))
    return [ShapeSpec(primitive=class_names[i % len(class_names)], class_id=i % len(class_names), jitter=jitter,
                      scale_range=scale_range, seed=np.random.SeedSequence([seed, i]))
            for i in range(size)]

def build_dataset(size: int, n: int = 256, class_names: Optional[Sequence[str]] = None, seed: int = 0,
                  jitter: float = 0.01, scale_range: Tuple[float, float] = (0.8, 1.2),
                  fractions: Tuple[float, float, float] = (0.80, 0.04, 0.16),
                  executor: Optional[Executor] = None) -> Dataset:
    '''Generate a class balanced dataset in memory

    Cloud i belongs to class i mod len(class_names) and is sampled from
    SeedSequence([seed, i]).
    '''
    class_names = list(class_names) if class_names is not None else list(CLASS_NAMES)
    if size < len(class_names):
        raise DataError('dataset of %i clouds cannot cover %i classes'%(size, len(class_names)))
    specs = _dataset_specs(size, class_names, seed, jitter, scale_range)
    mapper = executor.map if executor is not None else map
    clouds = np.stack(list(mapper(lambda spec: generate_cloud(spec, n), specs)))
    labels = np.array([spec.class_id for spec in specs], dtype=np.int64)
    split = make_split(labels, fractions, seed=np.random.SeedSequence([seed, size, n]))
    _log.debug('Generated %i clouds of %i points over %i classes', size, n, len(class_names))
    return Dataset(clouds, labels, split, class_names)

MANIFEST = 'manifest.csv'

def generate_dataset(out_dir: str, size: int, n: int = 256, class_names: Optional[Sequence[str]] = None,
                     seed: int = 0, jitter: float = 0.01, scale_range: Tuple[float, float] = (0.8, 1.2),
                     fractions: Tuple[float, float, float] = (0.80, 0.04, 0.16),
                     executor: Optional[Executor] = None,
                     prov: Optional[Dict[str, Any]] = None) -> Dataset:
    '''Generate a dataset and write it under _out_dir_ as XYZ files plus
    manifest.csv, whose rows carry the provenance columns in _prov_.
    '''
    dataset = build_dataset(size, n, class_names, seed, jitter, scale_range, fractions, executor)
    cloud_dir = os.path.join(out_dir, 'clouds')
    os.makedirs(cloud_dir, exist_ok=True)
    split_of = dataset.split.splitOf()
    paths = []
    if prov is None:
        prov = provenance(seed=seed)
    with CsvLog(os.path.join(out_dir, MANIFEST), ['path', 'class_id', 'split'], prov) as manifest:
        for i, cloud in enumerate(dataset.clouds):
            rel = os.path.join('clouds', '%05i_%s.xyz'%(i, dataset.class_names[dataset.labels[i]]))
            write_cloud(os.path.join(out_dir, rel), cloud)
            manifest.append({'path': rel, 'class_id': int(dataset.labels[i]), 'split': split_of[i]})
            paths += [rel]
    dataset.paths = paths
    _log.info('Wrote %i clouds to %s', size, out_dir)
    return dataset

def load_dataset(data_dir: str, class_names: Optional[Sequence[str]] = None) -> Dataset:
    '''Read a dataset written by generate_dataset()'''
    manifest = os.path.join(data_dir, MANIFEST)
    if not os.path.isfile(manifest):
        raise DataError('no %s in %s, run gen-data first'%(MANIFEST, data_dir))
    clouds, labels, paths = [], [], []
    splits = dict([(name, []) for name in SPLIT_NAMES])
    with open(manifest, 'r', newline='') as fin:
        reader = csv.DictReader(fin)
        if reader.fieldnames is None or set(['path', 'class_id', 'split']) - set(reader.fieldnames):
            raise DataFormatError('manifest needs path, class_id and split columns', manifest, 1)
        for row in reader:
            lineno = reader.line_num
            if row['split'] not in splits:
                raise DataFormatError('unknown split %r'%row['split'], manifest, lineno)
            try:
                label = int(row['class_id'])
            except ValueError:
                raise DataFormatError('class_id must be an integer', manifest, lineno)
            splits[row['split']] += [len(clouds)]
            clouds += [read_cloud(os.path.join(data_dir, row['path']))]
            labels += [label]
            paths += [row['path']]
    if len(clouds) == 0:
        raise DataError('dataset %s is empty'%data_dir)
    sizes = set([c.shape[0] for c in clouds])
    if len(sizes) != 1:
        raise DataError('dataset %s mixes cloud sizes %r'%(data_dir, sorted(sizes)))
    names = list(class_names) if class_names is not None else list(CLASS_NAMES)
    return Dataset(np.stack(clouds), np.array(labels, dtype=np.int64),
                   DatasetSplit(splits['train'], splits['validation'], splits['test']), names, paths)

#### Batches ####

@dataclass
class CloudBatch:
    '''
    A mini-batch

    clouds: (B, n, 3) inputs, the templates for registration
    labels: (B,) class ids
    sources: (B, n, 3) rotated templates with shuffled rows (registration)
    rotations: (B, 3, 3) ground truth rotation matrices (registration)
    quaternions: (B, 4) ground truth rotations as quaternions (registration)
    '''
    clouds: np.ndarray
    labels: np.ndarray
    sources: Optional[np.ndarray] = None
    rotations: Optional[np.ndarray] = None
    quaternions: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.clouds.shape[0]

    def select(self, idx) -> 'CloudBatch':
        idx = np.asarray(idx)
        def pick(a):
            return None if a is None else a[idx]
        return replace(self, clouds=self.clouds[idx], labels=self.labels[idx], sources=pick(self.sources),
                       rotations=pick(self.rotations), quaternions=pick(self.quaternions))

class ShapeDataset(object):
    '''
    ShapeDataset class
    ------------------

    Seeded mini-batches of labelled clouds.
    '''
    def __init__(self, clouds: np.ndarray, labels: np.ndarray, batch_size: int, seed: int = 0):
        if batch_size < 1:
            raise DataError('batch size must be positive')
        if clouds.shape[0] != labels.shape[0]:
            raise DataError('%i clouds but %i labels'%(clouds.shape[0], labels.shape[0]))
        self.batch_size = batch_size
        self.__seed = seed
        self.__all = self._makeBatch(clouds, labels)

    def _makeBatch(self, clouds: np.ndarray, labels: np.ndarray) -> CloudBatch:
        return CloudBatch(np.asarray(clouds, dtype=np.float64), np.asarray(labels, dtype=np.int64))

    def __len__(self):
        return self.__all.size

    def all(self) -> CloudBatch:
        return self.__all

    def batches(self, epoch: int = 0, shuffle: bool = True) -> Iterator[CloudBatch]:
        '''Mini-batches for _epoch_; the order depends only on (seed, epoch)'''
        order = np.arange(len(self))
        if shuffle:
            order = np.random.default_rng([self.__seed, epoch]).permutation(len(self))
        for start in range(0, len(self), self.batch_size):
            yield self.__all.select(order[start:start + self.batch_size])

class RegistrationDataset(ShapeDataset):
    '''
    RegistrationDataset class
    -------------------------

    Each template T_i is paired with a source S_i = T_i @ R_i.T whose rows are
    then shuffled, so corresponding points do not share an index.
    '''
    def __init__(self, templates: np.ndarray, batch_size: int, angle_range: float = 45.0, seed: int = 0):
        self.__angle_range = angle_range
        self.__pair_seed = seed
        super().__init__(templates, np.zeros(templates.shape[0], dtype=np.int64), batch_size, seed)

    def _makeBatch(self, clouds: np.ndarray, labels: np.ndarray) -> CloudBatch:
        sources, rotations, quaternions = [], [], []
        if clouds.shape[0] == 0:
            return CloudBatch(np.asarray(clouds, dtype=np.float64), labels, np.zeros(clouds.shape), np.zeros((0, 3, 3)), np.zeros((0, 4)))
        for i, T in enumerate(clouds):
            ss = np.random.SeedSequence([self.__pair_seed, i])
            pair_seed, shuffle_seed = ss.spawn(2)
            S, R_gt = make_registration_pair(T, self.__angle_range, pair_seed)
            sources += [S[np.random.default_rng(shuffle_seed).permutation(S.shape[0])]]
            rotations += [R_gt.matrix()]
            quaternions += [R_gt.quaternion]
        return CloudBatch(np.asarray(clouds, dtype=np.float64), labels, np.stack(sources),
                          np.stack(rotations), np.stack(quaternions))
