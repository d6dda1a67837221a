#!/usr/bin/python3
#
# rt-samplenet: Sampling service client testing app
# =================================================
#
# File: test_sampler_client/__init__.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This module provides a sampling service API Client interface.
#
'''Test sampling service API Client module

This module provides a sampling service API Client interface which can be
used to communicate with an rt-samplenet sampling service.

The module provides the SamplerClient class.
'''

from .client import SamplerClient, SamplerException, SamplerClientException, SamplerServerException, ProblemDetail

__all__ = [
        'SamplerClient',
        'SamplerException',
        'SamplerClientException',
        'SamplerServerException',
        'ProblemDetail',
        ]
