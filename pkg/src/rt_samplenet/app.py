#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: app.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet main entry module.
# This file handles the command line parsing, creates the application context
# from the configuration file and runs the requested experiment step or the
# sampling service.
#
'''
rt-samplenet: Task-aware point cloud sampling
=============================================

Trains samplers that pick the points of a cloud a downstream task network
needs, compares them with classic sampling and serves trained samplers over
HTTP.
'''
import logging

logging.basicConfig(level=logging.INFO)

import argparse
import asyncio
import hypercorn
import hypercorn.asyncio
import signal
import sys

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .api import router as sampler_router
from .context import Context
from .exceptions import ProblemException, SampleNetError
from .harness import cmd_ablate, cmd_eval, cmd_gen_data, cmd_profile, cmd_train_sampler, cmd_train_task
from .server import server
from .utils import async_create_task, package_version

_app_server_hdr = 'rt-samplenet/' + package_version()

COMMANDS = {
    'gen-data': cmd_gen_data,
    'train-task': cmd_train_task,
    'train-sampler': cmd_train_sampler,
    'eval': cmd_eval,
    'ablate': cmd_ablate,
    'profile': cmd_profile,
    }

def get_arg_parser():
    '''
    Create the ArgumentParser object for this application

    Syntax:
      samplenet -h
      samplenet -v
      samplenet <command> [-c <experiment-file>] [--seed SEED] [--out DIR]
                [--ratios R,...] [--strategy S,...] [--profile-kind KIND,...]
                [--progressive]

    Commands:
      gen-data       Generate the synthetic dataset
      train-task     Train the task network on complete clouds
      train-sampler  Train samplers against the frozen task network
      eval           Evaluate sampling strategies, writes report.csv
      ablate         Sweep temperature profiles, k values and weight losses
      profile        MAC and memory accounting
      serve          Run the sampling service
    '''
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-c', '--config', nargs=1, required=False, metavar='CONFIG', help='The experiment configuration file')
    common.add_argument('--seed', metavar='SEED', help='Experiment seed')
    common.add_argument('--out', metavar='DIR', help='Output directory')
    common.add_argument('--ratios', metavar='R,...', help='Sampling ratios')
    common.add_argument('--strategy', metavar='S,...', help='Sampling strategies to evaluate')
    common.add_argument('--profile-kind', metavar='KIND,...', help='Temperature profile (profiles to sweep for ablate)')
    common.add_argument('--progressive', action='store_true', help='Train or use a progressive sampler')
    common.add_argument('--task', metavar='TASK', help='Task network kind')

    parser = argparse.ArgumentParser(prog='samplenet')
    parser.add_argument('-v', '--version', action='store_true', help='Display the version information')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    for name, help_text in (('gen-data', 'Generate the synthetic dataset'),
                            ('train-task', 'Train the task network on complete clouds'),
                            ('train-sampler', 'Train samplers against the frozen task network'),
                            ('eval', 'Evaluate sampling strategies'),
                            ('ablate', 'Sweep temperature profiles, k values and weight losses'),
                            ('profile', 'MAC and memory accounting'),
                            ('serve', 'Run the sampling service')):
        commands.add_parser(name, parents=[common], help=help_text)
    return parser

def config_overrides(args) -> dict:
    '''Configuration keys set by command line flags'''
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out is not None:
        overrides['out_dir'] = args.out
    if args.ratios is not None:
        overrides['ratios'] = args.ratios
    if args.strategy is not None:
        overrides['strategies'] = args.strategy
    if args.profile_kind is not None:
        if args.command == 'ablate':
            overrides['profile_kinds'] = args.profile_kind
        else:
            overrides['temperature_profile'] = args.profile_kind
    if args.progressive:
        overrides['progressive'] = 'true'
    if args.task is not None:
        overrides['task'] = args.task
    return overrides

def sighup_handler(sig, context):
    '''Signal Handler for reloading the configuration

    Causes the configuration file to be re-read and the sampler checkpoints
    to be loaded again.
    '''
    context.appLog().info("Reloading configuration...")
    context.reload()
    try:
        server.reload()
    except (SampleNetError, Context.ValueError) as err:
        context.appLog().error("Reload failed, keeping the previous samplers: %s", err)

def exit_handler(sig, context):
    '''Signal handler for INT/QUIT signals

    This will cause the application to exit by setting an exit code of 0 in
    the app_exit Future.
    '''
    context.appLog().info("Signal %r received, exiting...", sig)
    context.exitWithReturnCode(0)

class AppJSONResponse(JSONResponse):
    def __init__(self, *args, status_code=200, **kwargs):
        super().__init__(*args, status_code=status_code, **kwargs)
        self.headers['Server'] = _app_server_hdr

def create_service_app(context: Context) -> FastAPI:
    '''The sampling service ASGI application'''
    server.setContext(context)

    sampler_app = FastAPI(title='rt-samplenet sampler', description='Point cloud sampling service', version=package_version(),
                          debug=False, default_response_class=AppJSONResponse)

    @sampler_app.exception_handler(ProblemException)
    async def problem_exception_handler(request, exc):
        return AppJSONResponse(status_code=exc.status_code, content=exc.object, headers=exc.headers, media_type='application/problem+json')

    @sampler_app.exception_handler(RequestValidationError)
    async def validation_exception_handler(request, exc):
        invalid = [{'param': '.'.join([str(l) for l in err.get('loc', ()) if l != 'body']), 'reason': err.get('msg', '')} for err in exc.errors()]
        problem = ProblemException(status_code=422, title='Unprocessable Entity', detail='request body failed validation',
                                   instance=request.url.path, invalid_params=invalid)
        return AppJSONResponse(status_code=422, content=problem.object, media_type='application/problem+json')

    sampler_app.include_router(sampler_router, prefix='/sampler/v1')
    return sampler_app

async def __serve(context):
    '''Asynchronous service entry point

    Runs the sampling service until a signal asks for exit.
    '''
    # Get our running loop
    loop = asyncio.get_running_loop()

    # Create a Future to be used for app exit, result is the exit code to use
    app_exit = loop.create_future()
    context.setAppExitFuture(app_exit)

    # Add signal handlers for HUP (Reload) and INT/QUIT for app exit
    loop.add_signal_handler(signal.SIGHUP, sighup_handler, signal.SIGHUP, context)
    loop.add_signal_handler(signal.SIGINT, exit_handler, signal.SIGINT, context)
    loop.add_signal_handler(signal.SIGQUIT, exit_handler, signal.SIGQUIT, context)

    sampler_app = create_service_app(context)

    bind = context.getConfigVar('service', 'listen') + ':' + context.getConfigVar('service', 'port')
    serve_config = hypercorn.Config.from_mapping(include_server_header=False, bind=bind, accesslog='-', errorlog='-')
    serve_task = async_create_task(hypercorn.asyncio.serve(sampler_app, serve_config), name='Sampler-server')
    context.appLog().info("Sampling service listening on %s", bind)

    # Main application loop
    while not app_exit.done():
        await asyncio.wait([app_exit, serve_task], return_when=asyncio.FIRST_COMPLETED)
        if serve_task.done() and not app_exit.done():
            context.appLog().error("Sampling service finished, exiting")
            app_exit.set_result(1)

    # We are exiting, tidy up
    if not serve_task.done():
        serve_task.cancel()
        try:
            await serve_task
        except asyncio.exceptions.CancelledError:
            pass

    # Return the exit code
    return app_exit.result()

def main(argv=None):
    '''
    Application entry point
    '''
    # Set default logging level
    logging.basicConfig(level=logging.INFO)

    # Parse command line options
    parser = get_arg_parser()
    args = parser.parse_args(argv)

    if args.version:
        print(f'rt-samplenet version {package_version()}')
        return 0

    if args.command is None:
        parser.print_usage()
        return 1

    # Create a logger instance
    log = logging.getLogger("rt-samplenet")

    # Get the experiment configuration file name
    config = args.config
    if config is not None:
        config = config[0]

    try:
        # Create the application context
        context = Context(config, config_overrides(args))
        context.setAppLog(log)
        logging.getLogger().setLevel(context.logLevel())

        if args.command == 'serve':
            return asyncio.run(__serve(context))

        COMMANDS[args.command](context)
    except (SampleNetError, Context.ConfigError, Context.ValueError) as err:
        log.error("%s failed: %s", args.command, err)
        return 1
    return 0

if __name__ == "__main__":
    sys.exit(main())
