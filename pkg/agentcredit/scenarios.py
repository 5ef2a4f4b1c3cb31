#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/scenarios.py
    One entry point for scenario names, whatever the environment.

    The MIT License (MIT)
"""
from .base import (
    ParseError,
    environment_for,
)
from .lbf import (
    LbfScenario,
    parse_scenario,
)
from .warehouse import (
    WarehouseScenario,
    parse_warehouse_scenario,
)

__all__ = [
    'is_lbf',
    'load_environment',
    'load_scenario',
    'scenario_name',
]


def is_lbf(scenario):
    return isinstance(scenario, LbfScenario)


def load_environment(name, **kwargs):
    """ Parse a scenario name and return its Environment. """
    return environment_for(load_scenario(name, **kwargs))


def load_scenario(name, reward_rule='proportional', max_steps=None):
    """ Parse any known scenario name.
        `reward_rule` only applies to Foraging scenarios.
        Raises ParseError for unknown or malformed names.
    """
    if isinstance(name, (LbfScenario, WarehouseScenario)):
        return name
    if not isinstance(name, str):
        raise ParseError(name, 0, reason='expecting a str')
    if name.startswith('rware'):
        return parse_warehouse_scenario(name, max_steps=max_steps)
    if name.startswith('F'):
        return parse_scenario(
            name,
            reward_rule=reward_rule,
            max_steps=max_steps,
        )
    raise ParseError(name, 0, reason="expecting 'Foraging' or 'rware'")


def scenario_name(scenario):
    """ A printable name for a scenario value. """
    if scenario.name:
        return scenario.name
    if isinstance(scenario, LbfScenario):
        return 'Foraging{}-{}x{}-{}p-{}f{}'.format(
            '' if scenario.sight is None else '-{}s'.format(scenario.sight),
            scenario.width,
            scenario.height,
            scenario.n_agents,
            scenario.n_food,
            '-coop' if scenario.coop else '',
        )
    return 'rware-{}x{}-{}ag'.format(
        scenario.width,
        scenario.height,
        scenario.n_agents,
    )
