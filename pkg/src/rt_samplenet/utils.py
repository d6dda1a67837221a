#!/usr/bin/python3
#
# rt-samplenet: Task-aware point cloud sampling
# =============================================
#
# File: utils.py
# License: MIT License
# Copyright: (C) 2026 rt-samplenet developers
#
# For full license terms please see the LICENSE file distributed with this
# program.
#
# This is the rt-samplenet common utility functions.
#
# Functions:
# list_join(l, sep1, sep2) - Join the string forms of a list
# async_create_task(...)   - asyncio.create_task without unsupported kwargs
# build_id()               - git describe style identifier of this build
# text_sha256(text)        - hex sha256 of a string
# parse_int_list(text)     - "2,4,8" => [2, 4, 8]
# provenance(hash, seed)   - build_id, config_hash and seed columns of a CSV row
#
'''
General utility functions
'''

import asyncio
import csv
import hashlib
import os.path
import subprocess

from typing import Any, Dict, List, Optional, Sequence

__all__ = ['list_join', 'async_create_task', 'build_id', 'text_sha256',
           'parse_int_list', 'parse_str_list', 'package_version',
           'csv_value', 'CsvLog', 'write_csv', 'PROVENANCE_FIELDS', 'provenance']

PROVENANCE_FIELDS = ['build_id', 'config_hash', 'seed']

def list_join(l, sep1, sep2=None):
    '''
    Join a list to form a string using a choice of separators

    The str representations of the list l are joined together using sep1 to
    separate the items in the list except for the last two items which are
    separated by sep2. If sep2 is not provided then all items are separated by
    sep1.

    Examples
    list_join([1,2,3,4], ', ', ' or ') => '1, 2, 3 or 4'
    list_join([], ', ', ' or ') => ''
    list_join([1], ', ', ' or ') => '1'
    list_join([1,2], ', ', ' or ') => '1 or 2'
    '''
    if sep2 is None:
        sep2 = sep1
    lstr = [str(v) for v in l]
    return sep1.join(lstr[:-2]+[sep2.join(lstr[-2:])])

def async_create_task(*args, **kwargs):
    'Wrapper for asyncio.create_task to remove unimplemented kwargs'
    allowedkwargs = {key: value for key,value in kwargs.items() if key in asyncio.create_task.__kwdefaults__}
    return asyncio.create_task(*args, **allowedkwargs)

def package_version() -> str:
    '''Installed distribution version or "Devel"'''
    try:
        import importlib.metadata
        return importlib.metadata.version('rt-samplenet')
    except Exception:
        return 'Devel'

__build_id: Optional[str] = None

def build_id() -> str:
    '''Identify the running code

    "git describe --always --dirty" of the source tree when available,
    otherwise the package version.
    '''
    global __build_id
    if __build_id is None:
        ret = None
        try:
            ret = subprocess.run(['git', 'describe', '--always', '--dirty'], cwd=os.path.dirname(os.path.abspath(__file__)),
                                 stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, shell=False, timeout=10)
        except (OSError, subprocess.SubprocessError):
            pass
        if ret is not None and ret.returncode == 0 and len(ret.stdout.strip()) > 0:
            __build_id = ret.stdout.decode('utf-8').strip()
        else:
            __build_id = 'v' + package_version()
    return __build_id

def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode('utf-8')).hexdigest()

def parse_int_list(text: str) -> List[int]:
    '''Parse a comma separated list of integers, empty text gives []'''
    return [int(v.strip()) for v in text.split(',') if len(v.strip()) > 0]

def parse_str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(',') if len(v.strip()) > 0]

def csv_value(value: Any) -> str:
    '''CSV text for a value, floats written so they read back exactly'''
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float) or type(value).__name__ in ('float64', 'float32'):
        return repr(float(value))
    return str(value)

def provenance(config_hash: str = '', seed: Optional[int] = None) -> Dict[str, Any]:
    '''Provenance columns for the CSV rows of one run'''
    return {'build_id': build_id(), 'config_hash': config_hash, 'seed': seed}

def _with_provenance(fieldnames: Sequence[str], prov: Optional[Dict[str, Any]]) -> List[str]:
    if prov is None:
        return list(fieldnames)
    return list(fieldnames) + [key for key in PROVENANCE_FIELDS if key not in fieldnames]

def write_csv(path: str, fieldnames: Sequence[str], rows: Sequence[Dict[str, Any]],
              prov: Optional[Dict[str, Any]] = None):
    '''Write _rows_ to _path_ with a header line

    When _prov_ is given its columns are appended to every row.
    '''
    fieldnames = _with_provenance(fieldnames, prov)
    with open(path, 'w', newline='') as out:
        writer = csv.DictWriter(out, fieldnames=fieldnames, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            if prov is not None:
                row = dict(row, **prov)
            writer.writerow(dict([(key, csv_value(row.get(key))) for key in fieldnames]))

class CsvLog(object):
    '''
    CsvLog class
    ------------

    A CSV file written one row at a time, flushed after every row. The
    provenance columns in _prov_, when given, follow the other fields on
    every row.
    '''
    def __init__(self, path: Optional[str], fieldnames: Sequence[str], prov: Optional[Dict[str, Any]] = None):
        self.fieldnames = _with_provenance(fieldnames, prov)
        self.rows: List[Dict[str, Any]] = []
        self.__prov = dict(prov) if prov is not None else {}
        self.__out = None
        self.__writer = None
        if path is not None:
            self.__out = open(path, 'w', newline='')
            self.__writer = csv.DictWriter(self.__out, fieldnames=self.fieldnames, lineterminator='\n')
            self.__writer.writeheader()

    def append(self, row: Dict[str, Any]):
        row = dict(row, **self.__prov)
        self.rows += [row]
        if self.__writer is not None:
            self.__writer.writerow(dict([(key, csv_value(row.get(key))) for key in self.fieldnames]))
            self.__out.flush()

    def close(self):
        if self.__out is not None:
            self.__out.close()
            self.__out = None
            self.__writer = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
