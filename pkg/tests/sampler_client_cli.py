#!/usr/bin/python3
#
# rt-samplenet: Sampling service client testing app
# =================================================
#
# File: sampler_client_cli.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# The provides a command which will exercise the sampling service as a client.
#
'''
rt-samplenet: Sampling service client testing app
=================================================

This application will connect to an rt-samplenet sampling service, issue a
client request and display the response.

Usage:
    sampler_client_cli.py -h | --help
    sampler_client_cli.py -s | --status <connect>
    sampler_client_cli.py <connect> <cloud-file> <ratio> [<strategy>] [-o <out-file>]

Parameters:
    connect     Hostname:Port of the sampling service.
    cloud-file  XYZ or PLY point cloud to sample.
    ratio       Sampling ratio, must divide the number of points.
    strategy    samplenet (default), fps or random.

Options:
    -h --help                 Display the command help
    -v --version              Display command version
    -s --status               Display the service status
    -o --output <out-file>    Write the sampled points to this XYZ or PLY file
'''

import asyncio
from docopt import docopt
import sys

import numpy as np

from rt_samplenet.data import write_cloud
from test_sampler_client import SamplerClient, SamplerClientException, SamplerServerException

def status_result(result: dict) -> int:
    print('Sampling service %s: n=%i, k=%i, task %s'%(result['version'], result['n'], result['k'], result['task']))
    print('Sampler ratios: '+', '.join([str(r) for r in result['ratios']]))
    return 0

async def run_sample(client: SamplerClient, cloud_file: str, ratio: int, strategy: str, out_file) -> int:
    indices, points = await client.sampleFile(cloud_file, ratio, strategy)
    if out_file is not None:
        write_cloud(out_file, np.array(points, dtype=np.float64))
        print('Wrote %i points to %s'%(len(points), out_file))
    else:
        print('Sampled indices:\n   '+' '.join([str(i) for i in indices]))
    return 0

async def run_status(client: SamplerClient) -> int:
    return status_result(await client.status())

def main():
    args = docopt(__doc__, version='1.0.0')

    (server_host, server_port) = args['<connect>'].split(':')
    host_address = (server_host, int(server_port))

    client = SamplerClient(host_address)

    try:
        if args['--status']:
            return asyncio.run(run_status(client))
        strategy = args['<strategy>'] if args['<strategy>'] is not None else 'samplenet'
        return asyncio.run(run_sample(client, args['<cloud-file>'], int(args['<ratio>']), strategy, args['--output']))
    except SamplerClientException as err:
        print("There was a problem with the request: %s"%str(err))
        return 1
    except SamplerServerException as err:
        print("There was a problem with the server: %s"%str(err))
        return 2

if __name__ == "__main__":
    sys.exit(main())
