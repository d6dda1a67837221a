#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: server.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This provides the sampling service request handlers

import asyncio
import os.path

from typing import Dict, List, Optional, Tuple

import numpy as np

from .context import Context
from .exceptions import ProblemException, SampleNetError
from .evaluation import sample_cloud
from .harness import load_sampler
from .sampler import SamplerModel
from .utils import package_version

class SamplingServer:
    '''
    Sampling service handling methods

    This class contains the methods called by the API router in api.py.
    '''
    def __init__(self):
        '''
        Constructor
        '''
        self.__context = None
        self.__samplers: Dict[int, SamplerModel] = {}
        self.__progressive: Optional[SamplerModel] = None
        self.__n = 0

    def setContext(self, context: Context):
        '''
        Register an application context and load the samplers it names
        '''
        self.__context = context
        self.reload()

    def reload(self) -> bool:
        '''(Re)load the configured sampler checkpoints

        Returns True if at least one sampler is available.
        '''
        cfg = self.__context.experimentConfig()
        log = self.__context.appLog()
        paths = cfg.samplerCheckpoints()
        if len(paths) == 0:
            paths = [p for p in sorted(set([cfg.samplerCheckpointPath(r) for r in cfg.ratios])) if os.path.isfile(p)]
        samplers = {}
        progressive = None
        for path in paths:
            sampler = load_sampler(path)
            if sampler.config.n != cfg.n:
                raise SampleNetError('sampler %s takes %i points, the service is configured for n=%i'%(path, sampler.config.n, cfg.n))
            if sampler.config.progressive:
                progressive = sampler
            else:
                samplers[cfg.n // sampler.config.m] = sampler
            if log is not None:
                log.info('Loaded sampler %s (m=%i%s)', path, sampler.config.m, ', progressive' if sampler.config.progressive else '')
        self.__samplers = samplers
        self.__progressive = progressive
        self.__n = cfg.n
        if log is not None and progressive is None and len(samplers) == 0:
            log.warning('No sampler checkpoints loaded, only fps and random sampling available')
        return progressive is not None or len(samplers) > 0

    def samplerRatios(self) -> List[int]:
        '''Ratios the samplenet strategy can serve'''
        if self.__progressive is not None:
            return [r for r in range(1, self.__n + 1) if self.__n % r == 0]
        return sorted(self.__samplers.keys())

    def __checkReady(self, request):
        if self.__context is None:
            raise ProblemException(status_code=500, title='Server not finished initialisation', instance=request.url.path)

    def __cloud(self, points: List[List[float]], request) -> np.ndarray:
        max_points = int(self.__context.getConfigVar('service', 'max_points', '100000'))
        if len(points) > max_points:
            raise ProblemException(status_code=400, title='Too many points', detail='%i points posted, the limit is %i'%(len(points), max_points),
                                   instance=request.url.path, invalid_params=[{'param': 'points', 'reason': 'more than %i points'%max_points}])
        if len(points) != self.__n:
            raise ProblemException(status_code=400, title='Wrong point count', detail='expected %i points, got %i'%(self.__n, len(points)),
                                   instance=request.url.path, invalid_params=[{'param': 'points', 'reason': 'must hold %i points'%self.__n}])
        for i, p in enumerate(points):
            if len(p) != 3:
                raise ProblemException(status_code=400, title='Bad point', detail='point %i has %i coordinates'%(i, len(p)),
                                       instance=request.url.path, invalid_params=[{'param': 'points', 'reason': 'points are [x, y, z]'}])
        P = np.array(points, dtype=np.float64)
        if not np.all(np.isfinite(P)):
            raise ProblemException(status_code=400, title='Bad point', detail='coordinates must be finite',
                                   instance=request.url.path, invalid_params=[{'param': 'points', 'reason': 'non-finite coordinate'}])
        return P

    async def sample(self, points: List[List[float]], ratio: int, strategy: str, request=None) -> Tuple[List[int], List[List[float]]]:
        '''Handler for "POST /sampler/v1/sample"

        Content-Type: application/json
        Expects {"points": [[x, y, z], ...], "ratio": r, "strategy": s}.

        Responds with the indices of the chosen points and the points
        themselves, taken unchanged from the request.
        '''
        self.__checkReady(request)
        P = self.__cloud(points, request)
        if ratio < 1 or self.__n % ratio != 0:
            raise ProblemException(status_code=400, title='Bad sampling ratio', detail='ratio %i does not divide n=%i'%(ratio, self.__n),
                                   instance=request.url.path, invalid_params=[{'param': 'ratio', 'reason': 'must divide %i'%self.__n}])
        sampler = None
        if strategy == 'samplenet':
            sampler = self.__samplers.get(ratio, self.__progressive)
            if sampler is None:
                raise ProblemException(status_code=503, title='Sampler unavailable', detail='no trained sampler for ratio %i'%ratio,
                                       instance=request.url.path)
        m = self.__n // ratio
        cfg = self.__context.experimentConfig()
        log = self.__context.appLog()
        if log is not None:
            log.debug('Sampling %i of %i points with %s', m, self.__n, strategy)
        def work():
            return sample_cloud(strategy, P, m, sampler, (cfg.random_seed, ratio))
        try:
            _, indices = await asyncio.get_running_loop().run_in_executor(None, work)
        except SampleNetError as err:
            raise ProblemException(status_code=500, title='Sampling failed', detail=str(err), instance=request.url.path)
        return indices, [points[i] for i in indices]

    async def status(self, request=None) -> dict:
        '''Handler for "GET /sampler/v1/status"'''
        self.__checkReady(request)
        cfg = self.__context.experimentConfig()
        return {'n': self.__n, 'k': cfg.k, 'task': cfg.task, 'ratios': self.samplerRatios(), 'version': package_version()}

server = SamplingServer()
