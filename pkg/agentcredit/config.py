#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/config.py
    Run configuration, config files, seed derivation, and debug output.

    Config files are line-oriented sections of `key = value` pairs:

        [run]
        scenario = Foraging-15x15-3p-3f-det-max-food-sum
        policy = greedy
        seeds = 0, 1, 2

        [train]
        train_episodes = 20000

    Section names only group keys. A `.json` file is loaded with
    easysettings instead (flat, or one object per section).
    Every key can also be given as a CLI flag of the same name, with dashes
    instead of underscores (`train_episodes` -> `--train-episodes`).
    Precedence is: CLI flag > config file > default.

    The MIT License (MIT)
"""
import configparser
import hashlib
import os
from typing import (
    NamedTuple,
    Optional,
    Tuple,
)

import numpy as np
from easysettings import load_json_settings
from printdebug import DebugColrPrinter

from .base import ConfigError

__all__ = [
    'Config',
    'FIELDS',
    'build_config',
    'debug',
    'derive_rng',
    'derive_seed',
    'enable_debug',
    'load_config_file',
    'parse_field',
]

debugprinter = DebugColrPrinter()
debugprinter.disable()
debug = debugprinter.debug

MAX_SEED = 2 ** 64 - 1
# Section for keys that come before any [section] header.
TOP_SECTION = '__top__'


def enable_debug(enabled=True):
    """ Turn the package-wide debug printer on or off. """
    debugprinter.enable(enabled)


def tag_number(tag):
    """ Stable 32-bit number for a component tag. """
    digest = hashlib.blake2b(tag.encode('utf-8'), digest_size=4).digest()
    return int.from_bytes(digest, 'big')


def derive_seed(root, tag, index=0):
    """ Derive a 64-bit seed from (root seed, component tag, run index). """
    seq = np.random.SeedSequence(
        int(root),
        spawn_key=(tag_number(tag), int(index)),
    )
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def derive_rng(root, tag, index=0):
    return np.random.default_rng(derive_seed(root, tag, index))


def _parse_bool(s):
    if isinstance(s, bool):
        return s
    val = str(s).strip().lower()
    if val in ('1', 'true', 'yes', 'on'):
        return True
    if val in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('not a boolean: {!r}'.format(s))


def _parse_seed(s):
    val = int(s)
    if not (0 <= val <= MAX_SEED):
        raise ValueError('seeds must be unsigned 64-bit integers')
    return val


def _parse_seeds(s):
    if isinstance(s, (list, tuple)):
        return tuple(_parse_seed(v) for v in s)
    vals = tuple(_parse_seed(v) for v in str(s).replace(',', ' ').split())
    if not vals:
        raise ValueError('expecting at least one seed')
    return vals


def _parse_names(s):
    if isinstance(s, (list, tuple)):
        return tuple(str(v) for v in s)
    return tuple(v.strip() for v in str(s).split(',') if v.strip())


def _parse_nonneg_int(s):
    val = int(s)
    if val < 0:
        raise ValueError('expecting 0 or more')
    return val


def _parse_positive_int(s):
    val = int(s)
    if val < 1:
        raise ValueError('expecting 1 or more')
    return val


def _parse_optional_int(s):
    if s is None or str(s).strip().lower() in ('', 'none'):
        return None
    return _parse_positive_int(s)


def _parse_unit(s):
    val = float(s)
    if not (0.0 <= val <= 1.0):
        raise ValueError('expecting a value in [0, 1]')
    return val


def _parse_rate(s):
    val = float(s)
    if not (0.0 < val <= 1.0):
        raise ValueError('expecting a value in (0, 1]')
    return val


def _parse_nonneg_float(s):
    val = float(s)
    if not (val >= 0.0):
        raise ValueError('expecting 0 or more')
    return val


def _choice(*choices):
    def parser(s):
        val = str(s).strip().lower()
        if val not in choices:
            raise ValueError('expecting one of: {}'.format(', '.join(choices)))
        return val
    return parser


class Config(NamedTuple):
    """ Every setting for a run. Defaults follow the evaluation protocol:
        201 evaluation intervals of 32 episodes each.
    """
    scenario: str = 'Foraging-8x8-2p-2f'
    policy: str = 'greedy'
    seeds: Tuple[int, ...] = (0,)
    episodes: int = 32
    intervals: int = 201
    method: str = 'importance'
    proxy: str = 'noop'
    out: str = 'agentcredit_out'
    reward_rule: str = 'proportional'
    max_steps: Optional[int] = None
    tie_tolerance: float = 1e-9
    mc_samples: int = 1000
    sampler: str = 'permutation'
    shapley_cap: int = 20
    workers: int = 1
    resamples: int = 2000
    train_episodes: int = 20000
    learning_rate: float = 0.1
    discount: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    anneal_episodes: int = 10000
    eval_epsilon: float = 0.05
    view: int = 1
    bench_scenarios: Tuple[str, ...] = (
        'Foraging-5x5-2p-2f',
        'Foraging-10x10-4p-4f',
        'Foraging-15x15-10p-10f',
        'Foraging-20x20-20p-20f',
        'Foraging-25x25-50p-50f',
    )
    bench_methods: Tuple[str, ...] = ('baseline', 'importance', 'shapley')
    bench_reps: int = 3
    bench_steps: int = 100
    bench_shapley_cap: int = 10
    bench_parallel: bool = False

    @property
    def root_seed(self):
        return self.seeds[0]


# key -> parser for string values (config files and CLI flags).
FIELDS = {
    'scenario': str,
    'policy': str,
    'seeds': _parse_seeds,
    'episodes': _parse_nonneg_int,
    'intervals': _parse_positive_int,
    'method': _choice('importance', 'shapley', 'mc-shapley'),
    'proxy': _choice('noop', 'random', 'copy'),
    'out': str,
    'reward_rule': _choice('proportional', 'paper_literal', 'inverse_level'),
    'max_steps': _parse_optional_int,
    'tie_tolerance': _parse_nonneg_float,
    'mc_samples': _parse_positive_int,
    'sampler': _choice('permutation', 'uniform'),
    'shapley_cap': _parse_positive_int,
    'workers': _parse_positive_int,
    'resamples': _parse_nonneg_int,
    'train_episodes': _parse_nonneg_int,
    'learning_rate': _parse_rate,
    'discount': _parse_unit,
    'epsilon_start': _parse_unit,
    'epsilon_end': _parse_unit,
    'anneal_episodes': _parse_nonneg_int,
    'eval_epsilon': _parse_unit,
    'view': _parse_positive_int,
    'bench_scenarios': _parse_names,
    'bench_methods': _parse_names,
    'bench_reps': _parse_positive_int,
    'bench_steps': _parse_positive_int,
    'bench_shapley_cap': _parse_positive_int,
    'bench_parallel': _parse_bool,
}


def parse_field(key, value):
    """ Parse a single config value, raising ConfigError on failure. """
    try:
        parser = FIELDS[key]
    except KeyError:
        raise ConfigError(key, label='Unknown config key')
    try:
        return parser(value)
    except (TypeError, ValueError) as ex:
        raise ConfigError(value, label='Invalid value for {} ({})'.format(
            key,
            ex,
        ))


def load_config_file(path):
    """ Load raw `key: value` pairs from a config file.
        Returns a dict of unparsed values.
    """
    if not os.path.exists(path):
        raise ConfigError(path, label='Config file not found')
    if path.endswith('.json'):
        try:
            settings = load_json_settings(path, default={})
        except ValueError as ex:
            raise ConfigError(path, label='Invalid JSON config ({})'.format(
                ex
            ))
        raw = {}
        for key, val in settings.items():
            if isinstance(val, dict):
                # One object per section.
                for subkey, subval in val.items():
                    _set_unique(raw, subkey, subval, path)
            else:
                _set_unique(raw, key, val, path)
        return raw

    parser = configparser.ConfigParser(
        interpolation=None,
        default_section='__defaults__',
    )
    try:
        with open(path, 'r') as f:
            # Keys before the first section header are allowed.
            parser.read_string(
                '[{}]\n{}'.format(TOP_SECTION, f.read()),
                source=path,
            )
    except configparser.Error as ex:
        raise ConfigError(path, label='Invalid config file ({})'.format(
            str(ex).splitlines()[0]
        ))
    raw = {}
    for section in parser.sections():
        for key, val in parser.items(section):
            _set_unique(raw, key, val, path)
    return raw


def _set_unique(raw, key, val, path):
    if key in raw:
        raise ConfigError(
            key,
            label='Duplicate key in {}'.format(path),
        )
    raw[key] = val


def build_config(cli=None, path=None, base=None):
    """ Build a Config from defaults, an optional config file, and CLI
        values (a dict of key -> raw value, None meaning "not given").
    """
    values = (base or Config())._asdict()
    if path:
        for key, val in load_config_file(path).items():
            values[key] = parse_field(key, val)
    for key, val in (cli or {}).items():
        if val is None:
            continue
        values[key] = parse_field(key, val)
    return Config(**values)
