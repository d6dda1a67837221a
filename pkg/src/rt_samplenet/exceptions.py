#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: exceptions.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet exceptions module.
# This file contains definitions for app specific Exceptions.
#
'''
rt-samplenet: Exceptions
========================

The library errors all derive from SampleNetError so that the command line
front end can report any of them with a message and a non-zero exit code.

ProblemException is used by the sampling service to short-cut a handler with
an HTTP problem response.
'''
from typing import Optional, List, Sequence, TypedDict

class SampleNetError(RuntimeError):
    '''Base class for all rt-samplenet errors'''

class ShapeError(SampleNetError):
    '''Tensor shapes do not conform to an operation'''
    def __init__(self, op: str, shapes: Sequence[tuple], reason: Optional[str] = None):
        super().__init__(op, tuple(tuple(s) for s in shapes), reason)
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        self.reason = reason

    def __str__(self):
        ret = '%s: incompatible shapes %s'%(self.op, ', '.join([repr(s) for s in self.shapes]))
        if self.reason is not None:
            ret += ' (%s)'%self.reason
        return ret

class GraphError(SampleNetError):
    '''Invalid use of the differentiation graph'''

class GeometryError(SampleNetError):
    '''Bad point cloud or geometric query'''

class ProjectionError(SampleNetError):
    '''Bad projection state, temperature or schedule'''

class DataError(SampleNetError):
    '''Bad dataset parameters'''

class FileFormatError(SampleNetError):
    '''A file could not be parsed

    Carries the filename and the 1-based line number of the problem.
    '''
    def __init__(self, msg: str, filename: str, line: Optional[int] = None):
        super().__init__(msg, filename, line)

    def __str__(self):
        if self.args[2] is None:
            return '%s: %s'%(self.args[1], self.args[0])
        return '%s:%i: %s'%(self.args[1], self.args[2], self.args[0])

class DataFormatError(FileFormatError):
    '''Malformed point cloud file'''

class CheckpointError(FileFormatError):
    '''Malformed or mismatched checkpoint file'''

class DivergenceError(SampleNetError):
    '''Training produced a non-finite loss'''

class IncompatibleError(SampleNetError):
    '''Models, checkpoints or configurations do not fit together'''

class InvalidParamMandatory(TypedDict):
    param: str

class InvalidParam(InvalidParamMandatory, total=False):
    reason: str

class ProblemException(Exception):
    def __init__(self, status_code=500, title=None, detail=None, problem_type=None, instance=None, headers: Optional[dict] = None, invalid_params: Optional[List[InvalidParam]] = None):
        # defaults
        if title is None:
            title = 'Internal Server Error'
        if detail is None:
            detail = title
        if problem_type is None:
            problem_type = '/sampler/v1'
        if instance is not None and instance[:len(problem_type)] == problem_type:
            instance = instance[len(problem_type):]
        self.status_code = status_code
        self.title = title
        self.detail = detail
        self.problem_type = problem_type
        self.instance = instance
        self.headers = headers
        self.invalid_params = invalid_params
        # Create Problem object
        self.object = {'title': self.title, 'detail': self.detail, 'type': self.problem_type, 'status': self.status_code}
        if self.instance is not None:
            self.object['instance'] = self.instance
        if self.invalid_params is not None and len(self.invalid_params) > 0:
            self.object['invalidParams'] = self.invalid_params

    def __str__(self):
        return '[%i] %s'%(self.status_code,self.detail)

