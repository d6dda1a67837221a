#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: api.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the sampling service API: request/response models and the router
# which hands requests to the SamplingServer in server.py.
#

from typing import List, Literal

from fastapi import APIRouter, Body, Request
from pydantic import BaseModel, Field

from .server import server

class SampleRequest(BaseModel):
    points: List[List[float]] = Field(..., description='The point cloud as [x, y, z] triples')
    ratio: int = Field(..., description='Sampling ratio n/m')
    strategy: Literal['samplenet', 'fps', 'random'] = Field('samplenet', description='Sampling strategy')

class SampleResponse(BaseModel):
    indices: List[int] = Field(..., description='Indices of the sampled points in the request')
    points: List[List[float]] = Field(..., description='The sampled points')

class ServiceStatus(BaseModel):
    n: int
    k: int
    task: str
    ratios: List[int] = Field(..., description='Ratios served by the samplenet strategy')
    version: str

class ProblemDetail(BaseModel):
    type: str = 'about:blank'
    title: str = ''
    status: int = 500
    detail: str = ''
    instance: str = ''

router = APIRouter()

@router.post(
    '/sample',
    responses={
        200: {'model': SampleResponse, 'description': 'Sampled points'},
        400: {'model': ProblemDetail, 'description': 'Bad request'},
        422: {'model': ProblemDetail, 'description': 'Unprocessable request'},
        503: {'model': ProblemDetail, 'description': 'No trained sampler for the ratio'},
    },
    tags=['sampler'],
    summary='Sample a point cloud',
    response_model=SampleResponse,
)
async def sample(request: Request, body: SampleRequest = Body(...)) -> SampleResponse:
    indices, points = await server.sample(body.points, body.ratio, body.strategy, request=request)
    return SampleResponse(indices=indices, points=points)

@router.get(
    '/status',
    responses={
        200: {'model': ServiceStatus, 'description': 'Service status'},
    },
    tags=['sampler'],
    summary='Sampling service status',
    response_model=ServiceStatus,
)
async def status(request: Request) -> ServiceStatus:
    return ServiceStatus(**(await server.status(request=request)))
