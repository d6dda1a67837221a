#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: __init__.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet application module.
#
