#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: context.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet application context module.
# This file handles the class which will hold the current run-time context:
# the resolved experiment configuration, the application logger and, for the
# sampling service, the exit future.
#
'''
rt_samplenet.context module
===========================

This module provides a single Context class which holds the configuration of
an experiment or of the sampling service.

Configuration values are resolved, highest priority first, from:
  1. command line overrides
  2. the flat "key = value" experiment file given with --config
  3. the section of DEFAULT_CONFIG for the configured task
  4. the [DEFAULT] section of DEFAULT_CONFIG
'''

import configparser
import logging
import os
import os.path
import sys

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .evaluation import STRATEGIES
from .projection import TemperatureKind, TemperatureProfile
from .sampler import SamplerConfig
from .task_factory import TaskConfig
from .utils import list_join, parse_int_list, parse_str_list, provenance, text_sha256

DEFAULT_CONFIG = '''[DEFAULT]
log_level = info
task = classifier
out_dir = samplenet-out
data_dir =
task_checkpoint =
sampler_checkpoint =
seed = 0

n = 256
dataset_size = 2000
classes = sphere,box,cylinder,cone,torus,plane_cross,helix,two_spheres
registration_class = helix
jitter = 0.01
scale_min = 0.8
scale_max = 1.2
train_fraction = 0.80
validation_fraction = 0.04
test_fraction = 0.16
angle_range = 45

task_conv_filters = 32,64,128
task_fc_widths = 64
latent = 64
n_out =
decoder_widths = 128,256
head_widths = 128,64
task_epochs = 30
task_lr = 0.001

sampler_conv_filters = 16,32,64
sampler_fc_widths = 128
k = 7
alpha = 30
beta = 1
gamma = 1
delta = 0
lam = 1
lr = 0.01
t_floor = 0.01
progressive_gamma =
progressive_delta =
temperature_profile = learned
t0_sq = 1.0
aux_loss = none
eta = 0.1
progressive = false
control_sizes =
simplify_only = false
sampler_epochs = 50
batch_size = 32
lr_decay = 0.7
lr_decay_every = 60

ratios = 2,4,8,16
strategies = random,fps,samplenet,samplenet-soft,samplenet-simplified,simplified-matched
random_seed = 1234
eval_workers = 4

profile_kinds = learned,constant,linear_rectified,exponential
ks =
aux_losses =

mac_preset = full
mac_classes = 40

listen = localhost
port = 7878
max_points = 100000

[classifier]
k = 7
alpha = 30
beta = 1
gamma = 1
delta = 0
lam = 1
lr = 0.01
t_floor = 0.01
progressive_gamma = 0.5
progressive_delta = 0.0333333333333333

[autoencoder]
k = 16
alpha = 0.01
beta = 1
gamma = 0
delta = 0.015625
lam = 0.0001
lr = 0.0005
t_floor = 0.01

[registration]
k = 8
alpha = 0.01
beta = 1
gamma = 1
delta = 0
lam = 0.01
lr = 0.001
t_floor = 0.1

[service]
'''

TASK_KINDS = ('classifier', 'autoencoder', 'registration')
AUX_LOSSES = ('none', 'cross_entropy', 'entropy')

# settings which cannot change an experiment's results
UNHASHED_KEYS = ('out_dir', 'data_dir', 'task_checkpoint', 'sampler_checkpoint', 'log_level',
                 'eval_workers', 'listen', 'port', 'max_points')

LOGGING_LEVELS = {
        'debug': logging.DEBUG,
        'info': logging.INFO,
        'warn': logging.WARNING,
        'error': logging.ERROR,
        'fatal': logging.FATAL,
        }

@dataclass
class ExperimentConfig:
    '''A fully resolved and validated experiment'''
    task: str
    out_dir: str
    data_dir: str
    task_checkpoint: str
    sampler_checkpoint: str
    seed: int
    n: int
    dataset_size: int
    classes: List[str]
    registration_class: str
    jitter: float
    scale_range: Tuple[float, float]
    fractions: Tuple[float, float, float]
    angle_range: float
    task_config: TaskConfig
    task_epochs: int
    task_lr: float
    sampler_conv_filters: Tuple[int, ...]
    sampler_fc_widths: Tuple[int, ...]
    k: int
    alpha: float
    beta: float
    gamma: float
    delta: float
    lam: float
    lr: float
    t_floor: float
    temperature: TemperatureProfile
    aux_loss: str
    eta: float
    progressive: bool
    control_sizes: Optional[List[int]]
    simplify_only: bool
    sampler_epochs: int
    batch_size: int
    lr_decay: float
    lr_decay_every: int
    ratios: List[int]
    strategies: List[str]
    random_seed: int
    eval_workers: int
    profile_kinds: List[str]
    ks: List[int]
    aux_losses: List[str]
    mac_preset: str
    mac_classes: int
    config_hash: str = ''
    resolved: Dict[str, str] = field(default_factory=dict)

    def sampleSize(self, ratio: int) -> int:
        return self.n // ratio

    def csvProvenance(self) -> Dict[str, Any]:
        '''build_id, config_hash and seed columns for the CSV files of this run'''
        return provenance(self.config_hash, self.seed)

    def samplerConfig(self, m: int) -> SamplerConfig:
        '''Sampler for _m_ output points (all n for a progressive sampler)'''
        return SamplerConfig(n=self.n, m=m, k=self.k, conv_filters=self.sampler_conv_filters,
                             fc_widths=self.sampler_fc_widths, alpha=self.alpha, beta=self.beta,
                             gamma=self.gamma, delta=self.delta, lam=self.lam, t_floor=self.t_floor,
                             progressive=self.progressive, control_sizes=self.control_sizes)

    def taskCheckpointPath(self) -> str:
        if len(self.task_checkpoint) > 0:
            return self.task_checkpoint
        return os.path.join(self.out_dir, 'task.ckpt')

    def samplerCheckpoints(self) -> List[str]:
        '''Sampler checkpoints named by the sampler_checkpoint key'''
        return parse_str_list(self.sampler_checkpoint)

    def samplerCheckpointPath(self, ratio: Optional[int] = None) -> str:
        '''Where train-sampler writes the sampler for _ratio_'''
        if self.progressive:
            return os.path.join(self.out_dir, 'sampler-progressive.ckpt')
        return os.path.join(self.out_dir, 'sampler-r%i.ckpt'%ratio)

    def dataDir(self) -> str:
        if len(self.data_dir) > 0:
            return self.data_dir
        return os.path.join(self.out_dir, 'data')

class Context(object):
    '''
    Context class
    -------------

    Class to hold and manipulate the current context of an rt-samplenet run.
    '''

    def __init__(self, config_filename: Optional[str] = None, overrides: Optional[Dict[str, str]] = None):
        '''Constructor

        config_filename (str) - flat "key = value" experiment file, or None
        overrides (dict)      - command line values, these take precedence
        '''
        # Keep starting configuration for reload
        self.__config_filename = config_filename
        self.__overrides = dict(overrides) if overrides is not None else {}
        self.__config = None
        self.__experiment = {}
        self.__config_hash = None
        self.__app_log = None
        self.__app_exit_future = None
        self.__locked_dir = None
        # Load the configuration
        self.__loadConfiguration(force=True)

    def reload(self) -> bool:
        '''Reload the configuration file

        Returns True if the configuration has changed or False for no change.
        '''
        ret = self.__loadConfiguration()
        # update the logging level to match new configuration
        if self.__app_log is not None:
            self.__app_log.setLevel(self.__log_level)
        return ret

    def setAppLog(self, log: logging.Logger):
        '''Set the application Logger object'''
        self.__app_log = log
        log.setLevel(self.__log_level)

    def appLog(self) -> Optional[logging.Logger]:
        '''Get the application Logger object'''
        return self.__app_log

    def setAppExitFuture(self, future):
        '''Set the Future to use to signal application exit and return code'''
        self.__app_exit_future = future

    def logLevel(self) -> int:
        '''Get the configured log level'''
        return self.__log_level

    def exitWithReturnCode(self, returncode: int):
        '''Exit the application giving the return code provided

        If the application exit Future is set (i.e. the app is in its async
        event loop) then signal the return code to the Future and return.

        Otherwise this will immediately exit with the return code and this
        method will not exit.
        '''
        if self.__app_exit_future is not None:
            self.__app_exit_future.set_result(returncode)
            return None
        sys.exit(returncode)

    def task(self) -> str:
        return self.getConfigVar('DEFAULT', 'task')

    def getConfigVar(self, section: str, varname: str, default: Optional[str] = None) -> Optional[str]:
        '''Get a configuration variable

        Command line overrides and experiment file values take precedence over
        the _section_ of the defaults.

        Returns the value found or _default_ if the value cannot be found.
        '''
        if varname in self.__overrides:
            return self.__overrides[varname]
        if varname in self.__experiment:
            return self.__experiment[varname]
        if section == 'DEFAULT' or not self.__config.has_section(section):
            return self.__config.defaults().get(varname, default)
        return self.__config.get(section, varname, fallback=default)

    def resolvedConfig(self) -> Dict[str, str]:
        '''Every known key resolved for the configured task'''
        task = self.task()
        return dict([(key, self.getConfigVar(task, key, '')) for key in sorted(self.__knownKeys())])

    def resolvedConfigText(self) -> str:
        return ''.join(['%s = %s\n'%(key, value) for key, value in self.resolvedConfig().items()])

    def configHash(self) -> str:
        '''sha256 of the resolved configuration, leaving out file locations and
        other settings which do not change results
        '''
        return text_sha256(''.join(['%s = %s\n'%(key, value) for key, value in self.resolvedConfig().items() if key not in UNHASHED_KEYS]))

    def writeResolvedConfig(self, out_dir: str) -> str:
        '''Echo the resolved configuration into _out_dir_/config.resolved

        Returns the config hash.
        '''
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, 'config.resolved'), 'w') as out:
            out.write(self.resolvedConfigText())
        return self.configHash()

    def lockOutputDir(self, out_dir: str):
        '''Claim _out_dir_ for this experiment'''
        os.makedirs(out_dir, exist_ok=True)
        lock = os.path.join(out_dir, '.lock')
        try:
            with open(lock, 'x') as out:
                out.write('%i\n'%os.getpid())
        except FileExistsError:
            raise Context.ConfigError('output directory %s is in use by another experiment (remove %s if it is stale)'%(out_dir, lock))
        self.__locked_dir = out_dir
        self.__debug('Locked %s', out_dir)

    def unlockOutputDir(self):
        if self.__locked_dir is None:
            return
        try:
            os.remove(os.path.join(self.__locked_dir, '.lock'))
        except FileNotFoundError:
            pass
        self.__debug('Unlocked %s', self.__locked_dir)
        self.__locked_dir = None

    def experimentConfig(self) -> ExperimentConfig:
        '''Resolve and validate the experiment configuration

        Raises Context.ValueError naming the offending key.
        '''
        task = self.task()
        if task not in TASK_KINDS:
            raise Context.ValueError('unknown task %r, use one of: %s'%(task, list_join(TASK_KINDS, ', ', ' or ')), 'task')
        get = lambda key: self.getConfigVar(task, key, '')

        n = self.__int(get, 'n', minimum=8)
        ratios = self.__intList(get, 'ratios')
        for r in ratios:
            if r < 1 or n % r != 0:
                raise Context.ValueError('sampling ratio %i does not divide n=%i'%(r, n), 'ratios')
        classes = parse_str_list(get('classes'))
        if len(classes) < 1:
            raise Context.ValueError('at least one class is needed', 'classes')
        fractions = (self.__float(get, 'train_fraction', minimum=0.0),
                     self.__float(get, 'validation_fraction', minimum=0.0),
                     self.__float(get, 'test_fraction', minimum=0.0))
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise Context.ValueError('split fractions must sum to 1', 'train_fraction')
        scale_range = (self.__float(get, 'scale_min', positive=True), self.__float(get, 'scale_max', positive=True))
        if scale_range[1] < scale_range[0]:
            raise Context.ValueError('scale_max is below scale_min', 'scale_max')
        angle_range = self.__float(get, 'angle_range', minimum=0.0)
        if angle_range > 180.0:
            raise Context.ValueError('angle range above 180 degrees', 'angle_range')

        n_out = n if len(get('n_out')) == 0 else self.__int(get, 'n_out', minimum=1)
        task_config = TaskConfig(n=n, classes=len(classes), conv_filters=tuple(self.__intList(get, 'task_conv_filters')),
                                 fc_widths=tuple(self.__intList(get, 'task_fc_widths', allow_empty=True)),
                                 latent=self.__int(get, 'latent', minimum=1), n_out=n_out,
                                 decoder_widths=tuple(self.__intList(get, 'decoder_widths', allow_empty=True)),
                                 head_widths=tuple(self.__intList(get, 'head_widths', allow_empty=True)))

        progressive = self.__bool(get, 'progressive')
        gamma = self.__float(get, 'gamma', minimum=0.0)
        delta = self.__float(get, 'delta', minimum=0.0)
        if progressive and len(get('progressive_gamma')) > 0:
            gamma = self.__float(get, 'progressive_gamma', minimum=0.0)
        if progressive and len(get('progressive_delta')) > 0:
            delta = self.__float(get, 'progressive_delta', minimum=0.0)
        control_sizes = None
        if len(get('control_sizes')) > 0:
            control_sizes = self.__intList(get, 'control_sizes')
            for prev, cur in zip(control_sizes, control_sizes[1:]):
                if cur <= prev:
                    raise Context.ValueError('control sizes must be strictly increasing', 'control_sizes')
            if control_sizes[0] < 1 or control_sizes[-1] > n:
                raise Context.ValueError('control sizes must lie within 1..%i'%n, 'control_sizes')

        k = self.__int(get, 'k', minimum=1)
        if k > n:
            raise Context.ValueError('k=%i exceeds n=%i'%(k, n), 'k')

        t_floor = self.__float(get, 't_floor', positive=True)
        profile_kind = get('temperature_profile')
        try:
            temperature = TemperatureProfile(kind=TemperatureKind(profile_kind), t0_sq=self.__float(get, 't0_sq', positive=True), floor=t_floor)
        except ValueError:
            raise Context.ValueError('unknown temperature profile %r, use one of: %s'%(profile_kind, list_join([kind.value for kind in TemperatureKind], ', ', ' or ')), 'temperature_profile')

        aux_loss = get('aux_loss')
        if aux_loss not in AUX_LOSSES:
            raise Context.ValueError('unknown auxiliary loss %r, use one of: %s'%(aux_loss, list_join(AUX_LOSSES, ', ', ' or ')), 'aux_loss')
        strategies = parse_str_list(get('strategies'))
        for strategy in strategies:
            if strategy not in STRATEGIES:
                raise Context.ValueError('unknown strategy %r, use one of: %s'%(strategy, list_join(STRATEGIES, ', ', ' or ')), 'strategies')
        profile_kinds = parse_str_list(get('profile_kinds'))
        for kind in profile_kinds:
            if kind not in [tk.value for tk in TemperatureKind]:
                raise Context.ValueError('unknown temperature profile %r'%kind, 'profile_kinds')
        aux_losses = parse_str_list(get('aux_losses'))
        for aux in aux_losses:
            if aux not in AUX_LOSSES:
                raise Context.ValueError('unknown auxiliary loss %r'%aux, 'aux_losses')
        ks = self.__intList(get, 'ks', allow_empty=True)
        for kv in ks:
            if kv < 1 or kv > n:
                raise Context.ValueError('k=%i outside 1..%i'%(kv, n), 'ks')
        mac_preset = get('mac_preset')
        if mac_preset not in ('full', 'desk'):
            raise Context.ValueError('unknown MAC preset %r, use full or desk'%mac_preset, 'mac_preset')
        registration_class = get('registration_class')
        if task == 'registration' and registration_class not in classes:
            raise Context.ValueError('registration class %r is not one of the classes'%registration_class, 'registration_class')

        resolved = self.resolvedConfig()
        return ExperimentConfig(
                task=task,
                out_dir=get('out_dir'),
                data_dir=get('data_dir'),
                task_checkpoint=get('task_checkpoint'),
                sampler_checkpoint=get('sampler_checkpoint'),
                seed=self.__int(get, 'seed'),
                n=n,
                dataset_size=self.__int(get, 'dataset_size', minimum=len(classes)),
                classes=classes,
                registration_class=registration_class,
                jitter=self.__float(get, 'jitter', minimum=0.0),
                scale_range=scale_range,
                fractions=fractions,
                angle_range=angle_range,
                task_config=task_config,
                task_epochs=self.__int(get, 'task_epochs', minimum=1),
                task_lr=self.__float(get, 'task_lr', positive=True),
                sampler_conv_filters=tuple(self.__intList(get, 'sampler_conv_filters')),
                sampler_fc_widths=tuple(self.__intList(get, 'sampler_fc_widths', allow_empty=True)),
                k=k,
                alpha=self.__float(get, 'alpha', minimum=0.0),
                beta=self.__float(get, 'beta', minimum=0.0),
                gamma=gamma,
                delta=delta,
                lam=self.__float(get, 'lam', minimum=0.0),
                lr=self.__float(get, 'lr', positive=True),
                t_floor=t_floor,
                temperature=temperature,
                aux_loss=aux_loss,
                eta=self.__float(get, 'eta', minimum=0.0),
                progressive=progressive,
                control_sizes=control_sizes,
                simplify_only=self.__bool(get, 'simplify_only'),
                sampler_epochs=self.__int(get, 'sampler_epochs', minimum=1),
                batch_size=self.__int(get, 'batch_size', minimum=1),
                lr_decay=self.__float(get, 'lr_decay', positive=True),
                lr_decay_every=self.__int(get, 'lr_decay_every', minimum=0),
                ratios=ratios,
                strategies=strategies,
                random_seed=self.__int(get, 'random_seed'),
                eval_workers=self.__int(get, 'eval_workers', minimum=1),
                profile_kinds=profile_kinds,
                ks=ks,
                aux_losses=aux_losses,
                mac_preset=mac_preset,
                mac_classes=self.__int(get, 'mac_classes', minimum=1),
                config_hash=self.configHash(),
                resolved=resolved,
                )

    #### Exceptions ####
    class ConfigError(RuntimeError):
        '''Configuration Error Exception from the rt-samplenet Context
        '''

    class ValueError(RuntimeError):
        '''Bad value passed in
        '''
        def __init__(self, msg: str, locn: str, *args, **kwargs):
            super().__init__(msg, locn, *args, **kwargs)

        def __str__(self):
            return f"ValueError for {self.args[1]}: {self.args[0]}"

        def __repr__(self):
            return f'{self.__class__.__name__}({", ".join([repr(s) for s in self.args])})'

    #### Private methods ####
    def __knownKeys(self) -> set:
        keys = set(self.__config.defaults().keys())
        for section in self.__config.sections():
            keys |= set(self.__config.options(section))
        return keys

    def __loadConfiguration(self, force: bool = False) -> bool:
        '''Load the configuration

        Loads and replaces the configuration if it is different from the
        previously loaded configuration. If _force_ is True, replace anyway.

        Returns True if the configuration was loaded, False if there was no
                change.
        '''
        config = configparser.ConfigParser(interpolation=None)
        config.read_string(DEFAULT_CONFIG)
        experiment = {}
        if self.__config_filename is not None:
            try:
                with open(self.__config_filename, 'r') as fin:
                    text = fin.read()
            except OSError as err:
                raise Context.ConfigError('cannot read configuration file %s: %s'%(self.__config_filename, err.strerror))
            user = configparser.ConfigParser(interpolation=None, default_section='rt-samplenet-unused')
            try:
                user.read_string('[experiment]\n' + text, source=self.__config_filename)
            except configparser.Error as err:
                raise Context.ConfigError('cannot parse configuration file %s: %s'%(self.__config_filename, err))
            experiment = dict(user.items('experiment'))
        self.__config = config
        known = self.__knownKeys()
        for key in list(experiment.keys()) + list(self.__overrides.keys()):
            if key not in known:
                raise Context.ValueError('unknown configuration key', key)
        # get logging level from the configuration
        self.__experiment = experiment
        log_level = self.getConfigVar('DEFAULT', 'log_level', 'info')
        self.__log_level = LOGGING_LEVELS.get(log_level, logging.INFO)
        # new config loaded, remember it
        chash = self.configHash()
        if force or chash != self.__config_hash:
            self.__config_hash = chash
            return True
        return False

    @staticmethod
    def __int(get, key: str, minimum: Optional[int] = None) -> int:
        try:
            value = int(get(key))
        except ValueError:
            raise Context.ValueError('%r is not an integer'%get(key), key)
        if minimum is not None and value < minimum:
            raise Context.ValueError('must be at least %i, got %i'%(minimum, value), key)
        return value

    @staticmethod
    def __float(get, key: str, minimum: Optional[float] = None, positive: bool = False) -> float:
        try:
            value = float(get(key))
        except ValueError:
            raise Context.ValueError('%r is not a number'%get(key), key)
        if value != value or value in (float('inf'), float('-inf')):
            raise Context.ValueError('must be finite', key)
        if positive and value <= 0.0:
            raise Context.ValueError('must be positive, got %r'%value, key)
        if minimum is not None and value < minimum:
            raise Context.ValueError('must be at least %r, got %r'%(minimum, value), key)
        return value

    @staticmethod
    def __bool(get, key: str) -> bool:
        value = get(key).strip().lower()
        if value in ('true', 'yes', 'on', '1'):
            return True
        if value in ('false', 'no', 'off', '0', ''):
            return False
        raise Context.ValueError('%r is not a boolean'%value, key)

    @staticmethod
    def __intList(get, key: str, allow_empty: bool = False) -> List[int]:
        try:
            values = parse_int_list(get(key))
        except ValueError:
            raise Context.ValueError('%r is not a comma separated list of integers'%get(key), key)
        if not allow_empty and len(values) == 0:
            raise Context.ValueError('at least one value is needed', key)
        for v in values:
            if v < 1:
                raise Context.ValueError('values must be positive', key)
        return values

    def __debug(self, *args, **kwargs):
        '''Log a debug message
        '''
        if self.__app_log is not None:
            self.__app_log.debug(*args, **kwargs)
