#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/rollout.py
    Seeded episode rollouts and episode traces.

    A trace is line-delimited JSON. The first line is a header:
        {"schema": "trace_v1", "scenario": ..., "seed": ..., ...}
    and every following line is one transition:
        {"episode": 0, "t": 0, "actions": [...], "team_reward": 0.0,
         "individual_rewards": [...], "done": false}

    The MIT License (MIT)
"""
import json

from .base import InvalidArg
from .config import (
    derive_rng,
    derive_seed,
)
from .output import atomic_write
from .policy import play_episode
from .scenarios import scenario_name

__all__ = [
    'TRACE_SCHEMA',
    'read_trace',
    'run_episodes',
    'trace_lines',
    'write_trace',
]

TRACE_SCHEMA = 'trace_v1'


def run_episodes(scenario, policies, episodes, seed):
    """ Yield (episode, EpisodeStep) for `episodes` seeded episodes.
        Episode e resets with derive_seed(seed, 'reset', e); one action rng
        derived from `seed` is shared by the whole run.
    """
    rng = derive_rng(seed, 'policy')
    for episode in range(episodes):
        reset_seed = derive_seed(seed, 'reset', episode)
        for epstep in play_episode(scenario, policies, reset_seed, rng):
            yield episode, epstep


def _dumps(record):
    return json.dumps(record, separators=(', ', ': '))


def trace_lines(scenario, policies, episodes, seed, policy_spec=''):
    """ Yield the lines (without newlines) of a trace_v1 file. """
    yield _dumps({
        'schema': TRACE_SCHEMA,
        'scenario': scenario_name(scenario),
        'seed': seed,
        'episodes': episodes,
        'agents': len(policies),
        'policy': policy_spec,
    })
    for episode, epstep in run_episodes(scenario, policies, episodes, seed):
        outcome = epstep.outcome
        yield _dumps({
            'episode': episode,
            't': epstep.t,
            'actions': [int(a) for a in epstep.joint],
            'team_reward': outcome.team_reward,
            'individual_rewards': list(outcome.individual_rewards),
            'done': outcome.done,
        })


def write_trace(path, scenario, policies, episodes, seed, policy_spec=''):
    """ Write a trace_v1 file. `episodes=0` writes the header only. """
    lines = trace_lines(
        scenario,
        policies,
        episodes,
        seed,
        policy_spec=policy_spec,
    )
    return atomic_write(path, ''.join('{}\n'.format(line) for line in lines))


def read_trace(path):
    """ Read a trace_v1 file, returning (header, records). """
    with open(path, 'r') as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise InvalidArg(path, label='Empty trace file')
    try:
        records = [json.loads(line) for line in lines]
    except ValueError as ex:
        raise InvalidArg(path, label='Invalid trace file ({})'.format(ex))
    header = records[0]
    if header.get('schema', None) != TRACE_SCHEMA:
        raise InvalidArg(
            header.get('schema', None),
            label='Expecting a {} trace, got'.format(TRACE_SCHEMA),
        )
    return header, records[1:]
