#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/lbf.py
    Level-Based Foraging.

    Leveled agents walk a grid and load leveled food. A food item is
    consumed when the combined level of the adjacent agents that chose Load
    is at least the food level. Rewards are split between the consuming
    agents in proportion to their levels and normalized by the total food
    level spawned, so an episode return lies in [0, 1].

    Scenario names follow:
        Foraging[-<s>s]-<x>x<y>-<n>p-<f>f[-coop][-det[-max-food-sum]][-v<k>]

    The MIT License (MIT)
"""
import re
from enum import IntEnum
from fractions import Fraction
from typing import (
    NamedTuple,
    Optional,
    Tuple,
)

import numpy as np

from .base import (
    OUT_OF_GRID,
    Environment,
    InfeasibleScenario,
    InvalidScenario,
    ParseError,
    make_outcome,
    register_environment,
)

__all__ = [
    'EMPTY_CELL',
    'FoodLevelMode',
    'LbfAction',
    'LbfScenario',
    'LbfState',
    'LevelBasedForaging',
    'MOVES',
    'RELIABILITY_SCENARIOS',
    'SCALABILITY_SCENARIOS',
    'agent_cell',
    'is_agent_cell',
    'is_food_cell',
    'lbf_observe',
    'lbf_reset',
    'lbf_transition',
    'parse_scenario',
    'reliability_scenarios',
    'scalability_scenarios',
]

Position = Tuple[int, int]

# Observation cell codes. Foods hold their level (1+). Agents are
# encoded below OUT_OF_GRID, so no food level can look like an agent.
EMPTY_CELL = 0

REWARD_RULES = ('proportional', 'paper_literal', 'inverse_level')
# Each loader earns food level / own level. 'inverse_level' is an alias.
INVERSE_LEVEL_RULES = ('paper_literal', 'inverse_level')

SCALABILITY_SCENARIOS = (
    'Foraging-5x5-2p-2f',
    'Foraging-10x10-4p-4f',
    'Foraging-15x15-10p-10f',
    'Foraging-20x20-20p-20f',
    'Foraging-25x25-50p-50f',
)
RELIABILITY_SCENARIOS = (
    'Foraging-15x15-3p-3f-det',
    'Foraging-15x15-3p-3f-det-max-food-sum',
)


class LbfAction(IntEnum):
    NOOP = 0
    UP = 1
    DOWN = 2
    LEFT = 3
    RIGHT = 4
    LOAD = 5


MOVES = {
    LbfAction.UP: (0, -1),
    LbfAction.DOWN: (0, 1),
    LbfAction.LEFT: (-1, 0),
    LbfAction.RIGHT: (1, 0),
}


class FoodLevelMode(NamedTuple):
    """ How food levels are drawn on reset.
        kind is one of: 'up_to_sum', 'fixed', 'range'.
    """
    kind: str = 'up_to_sum'
    lo: int = 1
    hi: int = 1

    @classmethod
    def fixed(cls, value):
        return cls('fixed', value, value)

    @classmethod
    def random_range(cls, lo, hi):
        return cls('range', lo, hi)

    @classmethod
    def up_to_sum(cls):
        return cls('up_to_sum', 1, 1)


class LbfScenario(NamedTuple):
    """ A Level-Based Foraging task.
        agent_levels=None means levels are drawn from 1..max_agent_level,
        otherwise they are used verbatim (one per agent).
        sight=None means full observability.
    """
    width: int
    height: int
    n_agents: int
    n_food: int
    sight: Optional[int] = None
    coop: bool = False
    agent_levels: Optional[Tuple[int, ...]] = None
    food_levels: FoodLevelMode = FoodLevelMode()
    max_agent_level: int = 3
    max_steps: int = 50
    reward_rule: str = 'proportional'
    name: str = ''

    def validate(self):
        """ Raise InvalidScenario for field values that can never work.
            Returns self, for chaining.
        """
        if self.width < 2 or self.height < 2:
            raise InvalidScenario(
                (self.width, self.height),
                label='Grid must be at least 2x2, got',
            )
        if self.n_agents < 1 or self.n_food < 1:
            raise InvalidScenario(
                (self.n_agents, self.n_food),
                label='Need at least one agent and one food, got',
            )
        if (self.sight is not None) and self.sight < 1:
            raise InvalidScenario(self.sight, label='Invalid sight range')
        if self.agent_levels is not None:
            if len(self.agent_levels) != self.n_agents:
                raise InvalidScenario(
                    self.agent_levels,
                    label='Expecting {} fixed agent levels, got'.format(
                        self.n_agents
                    ),
                )
            if min(self.agent_levels) < 1:
                raise InvalidScenario(
                    self.agent_levels,
                    label='Agent levels must be 1 or more',
                )
        if self.food_levels.kind not in ('up_to_sum', 'fixed', 'range'):
            raise InvalidScenario(
                self.food_levels.kind,
                label='Unknown food level mode',
            )
        if not (1 <= self.food_levels.lo <= self.food_levels.hi):
            raise InvalidScenario(
                self.food_levels,
                label='Invalid food level range',
            )
        if self.reward_rule not in REWARD_RULES:
            raise InvalidScenario(
                self.reward_rule,
                label='Expecting one of {}, got'.format(
                    ', '.join(REWARD_RULES)
                ),
            )
        if self.max_steps < 1:
            raise InvalidScenario(self.max_steps, label='Invalid max_steps')
        return self


class Agent(NamedTuple):
    position: Position
    level: int


class Food(NamedTuple):
    position: Position
    level: int
    present: bool = True


class LbfState(NamedTuple):
    scenario: LbfScenario
    step: int
    seed: int
    agents: Tuple[Agent, ...]
    foods: Tuple[Food, ...]
    total_food_level: int
    done: bool = False

    @property
    def max_steps(self):
        return self.scenario.max_steps


def agent_cell(level):
    """ Observation code for an agent of `level`. """
    return OUT_OF_GRID - level


def is_agent_cell(code):
    return code < OUT_OF_GRID


def is_food_cell(code):
    return code > EMPTY_CELL


def _byte_offset(name, index):
    return len(name[:index].encode('utf-8'))


def parse_scenario(name, reward_rule='proportional', max_steps=None):
    """ Parse a Foraging scenario name into an LbfScenario.
        Raises ParseError with the byte offset of the first violation.
    """
    if not isinstance(name, str):
        raise ParseError(name, 0, reason='expecting a str')
    prefix = 'Foraging'
    for i, char in enumerate(prefix):
        if i >= len(name) or name[i] != char:
            raise ParseError(
                name,
                _byte_offset(name, i),
                reason='expecting {!r}'.format(prefix),
            )
    # (offset, text) for every dash separated token.
    tokens = []
    offset = len(prefix)
    rest = name[offset:]
    if rest and not rest.startswith('-'):
        raise ParseError(name, _byte_offset(name, offset), reason="'-'")
    for part in rest.split('-')[1:]:
        offset += 1
        tokens.append((offset, part))
        offset += len(part)

    def error(index, reason):
        at = tokens[index][0] if index < len(tokens) else len(name)
        raise ParseError(name, _byte_offset(name, at), reason=reason)

    def token(index):
        return tokens[index][1] if index < len(tokens) else ''

    i = 0
    sight = None
    match = re.fullmatch(r'(\d+)s', token(i))
    if match:
        sight = int(match.group(1))
        if sight < 1:
            error(i, 'sight must be 1 or more')
        i += 1
    match = re.fullmatch(r'(\d+)x(\d+)', token(i))
    if not match:
        error(i, 'expecting <x>x<y>')
    width, height = int(match.group(1)), int(match.group(2))
    if width < 2 or height < 2:
        error(i, 'grid must be at least 2x2')
    i += 1
    match = re.fullmatch(r'(\d+)p', token(i))
    if not match:
        error(i, 'expecting <n>p')
    n_agents = int(match.group(1))
    if n_agents < 1:
        error(i, 'need at least one agent')
    i += 1
    match = re.fullmatch(r'(\d+)f', token(i))
    if not match:
        error(i, 'expecting <f>f')
    n_food = int(match.group(1))
    if n_food < 1:
        error(i, 'need at least one food')
    i += 1

    coop = False
    agent_levels = None
    food_levels = FoodLevelMode.up_to_sum()
    if token(i) == 'coop':
        coop = True
        i += 1
    if token(i) == 'det':
        # Reliability family: agents always have levels 1, 2, 3...
        agent_levels = tuple(range(1, n_agents + 1))
        food_levels = FoodLevelMode.fixed(3)
        i += 1
        if [token(j) for j in range(i, i + 3)] == ['max', 'food', 'sum']:
            food_levels = FoodLevelMode.random_range(1, 6)
            i += 3
    if re.fullmatch(r'v\d+', token(i)):
        i += 1
    if i < len(tokens):
        error(i, 'unexpected token {!r}'.format(token(i)))

    scenario = LbfScenario(
        width=width,
        height=height,
        n_agents=n_agents,
        n_food=n_food,
        sight=sight,
        coop=coop,
        agent_levels=agent_levels,
        food_levels=food_levels,
        max_agent_level=max(3, max(agent_levels or (0,))),
        max_steps=50 if max_steps is None else max_steps,
        reward_rule=reward_rule,
        name=name,
    )
    return scenario.validate()


def reliability_scenarios(**kwargs):
    """ The fixed-level scenarios, parsed. """
    return [parse_scenario(s, **kwargs) for s in RELIABILITY_SCENARIOS]


def scalability_scenarios(**kwargs):
    """ The growing scenario family (2 to 50 agents), parsed. """
    return [parse_scenario(s, **kwargs) for s in SCALABILITY_SCENARIOS]


def lbf_reset(scenario, seed):
    """ Spawn agents and food for `scenario`, deterministic given `seed`. """
    scenario.validate()
    cells = scenario.width * scenario.height
    if scenario.n_agents + scenario.n_food > cells:
        raise InfeasibleScenario(
            'Cannot place {} agents and {} food on {} cells.'.format(
                scenario.n_agents,
                scenario.n_food,
                cells,
            )
        )
    rng = np.random.default_rng(seed)
    if scenario.agent_levels is None:
        levels = [
            int(v)
            for v in rng.integers(
                1,
                scenario.max_agent_level + 1,
                size=scenario.n_agents,
            )
        ]
    else:
        levels = list(scenario.agent_levels)

    level_sum = sum(levels)
    mode = scenario.food_levels
    if scenario.coop:
        food_levels = [level_sum] * scenario.n_food
    elif mode.kind == 'fixed':
        food_levels = [mode.lo] * scenario.n_food
    elif mode.kind == 'range':
        food_levels = [
            int(v)
            for v in rng.integers(mode.lo, mode.hi + 1, size=scenario.n_food)
        ]
    else:
        food_levels = [
            int(v)
            for v in rng.integers(1, level_sum + 1, size=scenario.n_food)
        ]

    picks = rng.choice(
        cells,
        size=scenario.n_agents + scenario.n_food,
        replace=False,
    )
    positions = [
        (int(p) % scenario.width, int(p) // scenario.width)
        for p in picks
    ]
    agents = tuple(
        Agent(position=pos, level=lvl)
        for pos, lvl in zip(positions[:scenario.n_agents], levels)
    )
    foods = tuple(
        Food(position=pos, level=lvl)
        for pos, lvl in zip(positions[scenario.n_agents:], food_levels)
    )
    return LbfState(
        scenario=scenario,
        step=0,
        seed=int(seed),
        agents=agents,
        foods=foods,
        total_food_level=sum(food_levels),
    )


def _adjacent(a, b):
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def lbf_transition(state, joint):
    """ Move agents (index order), resolve loading, and hand out rewards.
        `state` is not modified, a StepOutcome is returned.
    """
    scenario = state.scenario
    n = len(state.agents)
    positions = [a.position for a in state.agents]
    occupied = set(positions)
    occupied.update(f.position for f in state.foods if f.present)
    for i, action in enumerate(joint):
        delta = MOVES.get(action, None)
        if delta is None:
            continue
        x, y = positions[i]
        target = (x + delta[0], y + delta[1])
        if not (
                0 <= target[0] < scenario.width and
                0 <= target[1] < scenario.height):
            continue
        if target in occupied:
            continue
        occupied.discard(positions[i])
        occupied.add(target)
        positions[i] = target

    rewards = [Fraction(0)] * n
    foods = list(state.foods)
    for f, food in enumerate(state.foods):
        if not food.present:
            continue
        loaders = [
            i for i in range(n)
            if joint[i] == LbfAction.LOAD and
            _adjacent(positions[i], food.position)
        ]
        if not loaders:
            continue
        loader_levels = sum(state.agents[i].level for i in loaders)
        if loader_levels < food.level:
            continue
        foods[f] = food._replace(present=False)
        for i in loaders:
            level = state.agents[i].level
            if scenario.reward_rule in INVERSE_LEVEL_RULES:
                share = Fraction(food.level, level)
            else:
                share = Fraction(food.level * level, loader_levels)
            rewards[i] += share / state.total_food_level

    step = state.step + 1
    done = (
        (not any(f.present for f in foods)) or
        step >= scenario.max_steps
    )
    next_state = state._replace(
        step=step,
        agents=tuple(
            a._replace(position=pos)
            for a, pos in zip(state.agents, positions)
        ),
        foods=tuple(foods),
        done=done,
    )
    return make_outcome(next_state, rewards)


def lbf_observe(state, agent, sight=None):
    """ Observation for `agent` as a canonical tuple of ints:
            (view_width, view_height, own_x, own_y, own_level, *cells)
        own_x/own_y are positions inside the view. Cells are row-major,
        EMPTY_CELL, OUT_OF_GRID, a food level, or agent_cell(agent level).
        With a sight range the view is the (2s+1)x(2s+1) window centred on
        the agent, otherwise it is the whole grid.
        `sight` overrides the scenario's sight range (tabular learners use
        a small window to keep their tables small).
    """
    scenario = state.scenario
    if sight is None:
        sight = scenario.sight
    me = state.agents[agent]
    grid = {}
    for food in state.foods:
        if food.present:
            grid[food.position] = food.level
    for other in state.agents:
        grid[other.position] = agent_cell(other.level)

    if sight is None:
        left, top = 0, 0
        view_w, view_h = scenario.width, scenario.height
    else:
        s = sight
        left, top = me.position[0] - s, me.position[1] - s
        view_w = view_h = 2 * s + 1
    cells = []
    for y in range(top, top + view_h):
        for x in range(left, left + view_w):
            if not (0 <= x < scenario.width and 0 <= y < scenario.height):
                cells.append(OUT_OF_GRID)
            else:
                cells.append(grid.get((x, y), EMPTY_CELL))
    return (
        view_w,
        view_h,
        me.position[0] - left,
        me.position[1] - top,
        me.level,
        *cells,
    )


@register_environment(LbfScenario)
class LevelBasedForaging(Environment):
    """ Level-Based Foraging, bound to one LbfScenario. """
    actions = LbfAction

    def observe(self, state, agent):
        return lbf_observe(state, agent)

    def render_text(self, state):
        """ Plain text grid: agents as A<level>, food as F<level>. """
        grid = {}
        for food in state.foods:
            if food.present:
                grid[food.position] = 'F{}'.format(food.level)
        for agent in state.agents:
            grid[agent.position] = 'A{}'.format(agent.level)
        return '\n'.join(
            ' '.join(
                grid.get((x, y), ' .').rjust(2)
                for x in range(self.scenario.width)
            )
            for y in range(self.scenario.height)
        )

    def reset(self, seed):
        return lbf_reset(self.scenario, seed)

    def transition(self, state, joint):
        return lbf_transition(state, joint)
