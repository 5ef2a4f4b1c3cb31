#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/base.py
    Environment core for agentcredit.

    States are immutable values (NamedTuples). An Environment only holds a
    scenario and a pure transition function, so a state can be stepped any
    number of times with different joint actions. That is what makes the
    counterfactual valuations in `agentcredit.attribution` possible without
    copying live simulator objects.

    Errors for the whole package live here too.

    The MIT License (MIT)
"""
import math
import operator
from functools import lru_cache
from typing import (
    Any,
    Callable,
    Dict,
    NamedTuple,
    Sequence,
    Tuple,
)

from colr import Colr

__version__ = '0.3.0'

__all__ = [
    '__version__',
    'AgentCreditError',
    'ConfigError',
    'DegenerateSeries',
    'Environment',
    'EpisodeFinished',
    'InfeasibleScenario',
    'InvalidAction',
    'InvalidArg',
    'InvalidScenario',
    'MissingSnapshot',
    'OUT_OF_GRID',
    'ParseError',
    'StepOutcome',
    'TooManyAgents',
    'environment_for',
    'make_outcome',
    'noop_action',
    'observe',
    'register_environment',
    'reset',
    'step',
]

# Cell code for anything outside of the grid, in every observation.
OUT_OF_GRID = -1

JointAction = Tuple[int, ...]
Observation = Tuple[int, ...]


class AgentCreditError(Exception):
    """ Base class for all agentcredit errors. """
    default_msg = 'agentcredit error'

    def __init__(self, msg=None):
        self.msg = msg or self.default_msg
        super().__init__(self.msg)

    def __str__(self):
        return self.msg

    def as_colr(self):
        return Colr(str(self), 'red')


class InvalidArg(AgentCreditError, ValueError):
    """ A ValueError for when the user uses invalid arguments. """
    default_label = 'Invalid argument'
    default_format = '{label}: {value}'

    def __init__(self, value, label=None):
        self.label = label or self.default_label
        self.value = value
        super().__init__(str(self))

    def __colr__(self):
        """ Allows Colr(InvalidArg()) with default styling. """
        return self.as_colr()

    def __str__(self):
        return self.default_format.format(
            label=self.label,
            value=repr(self.value)
        )

    def as_colr(self, label_args=None, value_args=None):
        """ Like __str__, except it returns a colorized Colr instance. """
        label_args = label_args or {'fore': 'red'}
        value_args = value_args or {'fore': 'blue', 'style': 'bright'}
        return Colr(self.default_format.format(
            label=Colr(self.label, **label_args),
            value=Colr(repr(self.value), **value_args),
        ))


class ConfigError(InvalidArg):
    """ Bad config file, key, or value. """
    default_label = 'Invalid config value'


class InvalidAction(InvalidArg):
    default_label = 'Invalid action'


class InvalidScenario(InvalidArg):
    default_label = 'Invalid scenario'


class ParseError(InvalidArg):
    """ A scenario name that does not follow the naming grammar.
        `offset` is the byte offset of the first violation.
    """
    default_label = 'Cannot parse scenario name'
    default_format = '{label}: {value} (at offset {offset}{reason})'

    def __init__(self, value, offset, reason=None, label=None):
        self.offset = offset
        self.reason = reason
        super().__init__(value, label=label)

    def __str__(self):
        return self.default_format.format(
            label=self.label,
            value=repr(self.value),
            offset=self.offset,
            reason=', {}'.format(self.reason) if self.reason else '',
        )

    def as_colr(self, label_args=None, value_args=None):
        label_args = label_args or {'fore': 'red'}
        value_args = value_args or {'fore': 'blue', 'style': 'bright'}
        return Colr(self.default_format.format(
            label=Colr(self.label, **label_args),
            value=Colr(repr(self.value), **value_args),
            offset=Colr(self.offset, **value_args),
            reason=', {}'.format(self.reason) if self.reason else '',
        ))


class DegenerateSeries(AgentCreditError):
    default_msg = 'Series has zero variance.'


class EpisodeFinished(AgentCreditError):
    default_msg = 'Cannot step a finished episode.'


class InfeasibleScenario(AgentCreditError):
    default_msg = 'Entities cannot be placed without overlap.'


class MissingSnapshot(AgentCreditError):
    default_msg = 'No policy snapshot stored for the best interval.'


class TooManyAgents(AgentCreditError):
    default_msg = 'Too many agents for exact Shapley values.'


class StepOutcome(NamedTuple):
    """ Result of a single transition. """
    next_state: Any
    team_reward: float
    individual_rewards: Tuple[float, ...]
    done: bool


def make_outcome(next_state, individual_rewards):
    """ Build a StepOutcome. The team reward is the sum of the individual
        rewards, for every bundled environment.
    """
    individual = tuple(float(r) for r in individual_rewards)
    return StepOutcome(
        next_state=next_state,
        team_reward=math.fsum(individual),
        individual_rewards=individual,
        done=next_state.done,
    )


class Environment(object):
    """ Pure-transition environment for a single scenario.
        Subclasses implement `transition`, `reset`, `observe`, and set
        `actions` (an IntEnum with a NOOP member).
        `step` checks the contract around `transition`, so subclasses do not
        have to.
    """
    actions = None  # type: Any

    def __init__(self, scenario):
        self.scenario = scenario

    def __repr__(self):
        return '{}({!r})'.format(type(self).__name__, self.scenario)

    @property
    def n_actions(self):
        return len(self.actions)

    @property
    def n_agents(self):
        return self.scenario.n_agents

    def check_joint(self, state, joint):
        """ Raise InvalidAction unless `joint` has one valid action per
            agent.
        """
        if len(joint) != self.n_agents:
            raise InvalidAction(
                joint,
                label='Expecting {} actions, got'.format(self.n_agents),
            )
        for agent, action in enumerate(joint):
            try:
                if isinstance(action, bool):
                    raise TypeError(action)
                index = operator.index(action)
            except TypeError:
                raise InvalidAction(
                    action,
                    label='Agent {} action is not an index'.format(agent),
                )
            if not (0 <= index < self.n_actions):
                raise InvalidAction(
                    action,
                    label='Agent {} action out of range 0-{}'.format(
                        agent,
                        self.n_actions - 1,
                    ),
                )

    def noop_action(self, state, agent):
        """ The action under which `agent` does not change the world. """
        return self.actions.NOOP

    def observe(self, state, agent):
        raise NotImplementedError('observe() must be implemented.')

    def render_text(self, state):
        raise NotImplementedError('render_text() must be implemented.')

    def reset(self, seed):
        raise NotImplementedError('reset() must be implemented.')

    def step(self, state, joint):
        """ Step `state` with `joint`, returning a StepOutcome.
            `state` is never mutated.
        """
        if state.done:
            raise EpisodeFinished()
        self.check_joint(state, joint)
        return self.transition(
            state,
            tuple(self.actions(int(a)) for a in joint),
        )

    def transition(self, state, joint):
        raise NotImplementedError('transition() must be implemented.')


# Scenario type -> Environment class, filled in by register_environment().
_env_classes = {}  # type: Dict[type, Callable[[Any], Environment]]


def register_environment(scenario_type):
    """ Class decorator, registers an Environment for a scenario type. """
    def decorator(cls):
        _env_classes[scenario_type] = cls
        return cls
    return decorator


@lru_cache(maxsize=64)
def environment_for(scenario):
    """ Return the (cached) Environment for a scenario value. """
    try:
        cls = _env_classes[type(scenario)]
    except KeyError:
        raise InvalidScenario(
            scenario,
            label='No environment registered for scenario',
        )
    return cls(scenario)


def noop_action(state, agent):
    """ Return the no-op action for `agent` in `state`. """
    return environment_for(state.scenario).noop_action(state, agent)


def observe(state, agent):
    return environment_for(state.scenario).observe(state, agent)


def reset(scenario, seed):
    """ Reset `scenario` with a 64-bit seed. Deterministic. """
    return environment_for(scenario).reset(seed)


def step(state, joint: Sequence[int]) -> StepOutcome:
    """ Pure transition: step `state` with `joint` actions. """
    return environment_for(state.scenario).step(state, joint)
