#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/warehouse.py
    A small robotic warehouse with sparse rewards.

    Agents fetch requested shelves and carry them onto a goal cell. The only
    reward is 1/n_requests for the delivering agent, on delivery. A delivered
    request is replaced right away by a new one, drawn deterministically from
    the episode seed and the delivery count, so transitions stay pure.

    There is no rotation. Agents that are not carrying walk under shelves;
    an agent carrying a shelf cannot enter a cell holding another shelf.

    Scenario names follow:
        rware-<size>-<n>ag[-v<k>]
    with size one of tiny (11x11), small (11x20), medium (16x20),
    large (16x29).

    The MIT License (MIT)
"""
import re
from enum import IntEnum
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
from .lbf import MOVES

__all__ = [
    'SIZES',
    'WarehouseAction',
    'WarehouseScenario',
    'WarehouseState',
    'Warehouse',
    'parse_warehouse_scenario',
    'warehouse_layout',
    'warehouse_observe',
    'warehouse_reset',
    'warehouse_transition',
]

Position = Tuple[int, int]

# size token -> (width, height)
SIZES = {
    'tiny': (11, 11),
    'small': (11, 20),
    'medium': (16, 20),
    'large': (16, 29),
}

# Observation cell codes. AGENT_FLAG is added when an agent is present.
FLOOR_CELL = 0
SHELF_CELL = 1
REQUESTED_CELL = 2
GOAL_CELL = 3
AGENT_FLAG = 10


class WarehouseAction(IntEnum):
    NOOP = 0
    UP = 1
    DOWN = 2
    LEFT = 3
    RIGHT = 4
    TOGGLE_LOAD = 5


# Movement deltas are the same as the foraging grid.
_moves = {
    WarehouseAction(int(action)): delta
    for action, delta in MOVES.items()
}


def warehouse_layout(width, height):
    """ Return (shelf_positions, goal_cells) for a grid size.
        Shelves fill rows 1..height-4 on every column not divisible by 3,
        leaving aisles for loaded agents. The goal cells are the two centre
        cells of the bottom row.
    """
    shelves = tuple(
        (x, y)
        for y in range(1, height - 3)
        for x in range(width)
        if x % 3 != 0
    )
    goals = ((width // 2 - 1, height - 1), (width // 2, height - 1))
    return shelves, goals


class WarehouseScenario(NamedTuple):
    width: int
    height: int
    n_agents: int
    n_requests: int
    shelf_positions: Tuple[Position, ...]
    goal_cells: Tuple[Position, ...]
    max_steps: int = 500
    name: str = ''

    @classmethod
    def from_size(
            cls, width, height, n_agents, n_requests=None, max_steps=500,
            name=''):
        shelves, goals = warehouse_layout(width, height)
        return cls(
            width=width,
            height=height,
            n_agents=n_agents,
            n_requests=n_agents if n_requests is None else n_requests,
            shelf_positions=shelves,
            goal_cells=goals,
            max_steps=max_steps,
            name=name,
        ).validate()

    @property
    def n_shelves(self):
        return len(self.shelf_positions)

    def in_grid(self, pos):
        return 0 <= pos[0] < self.width and 0 <= pos[1] < self.height

    def validate(self):
        if self.n_agents < 1:
            raise InvalidScenario(self.n_agents, label='Need an agent, got')
        for cell in self.goal_cells:
            if not self.in_grid(cell):
                raise InvalidScenario(cell, label='Goal cell off the grid')
        goals = set(self.goal_cells)
        for pos in self.shelf_positions:
            if (not self.in_grid(pos)) or (pos in goals):
                raise InvalidScenario(pos, label='Invalid shelf position')
        if len(set(self.shelf_positions)) != self.n_shelves:
            raise InvalidScenario(
                self.shelf_positions,
                label='Shelves overlap',
            )
        # A replacement request needs at least one unrequested shelf.
        if not (1 <= self.n_requests < self.n_shelves):
            raise InvalidScenario(
                self.n_requests,
                label='Expecting 1-{} requests, got'.format(
                    self.n_shelves - 1
                ),
            )
        if self.max_steps < 1:
            raise InvalidScenario(self.max_steps, label='Invalid max_steps')
        return self


class Robot(NamedTuple):
    position: Position
    carrying: Optional[int] = None


class Shelf(NamedTuple):
    home: Position
    position: Position
    requested: bool = False


class WarehouseState(NamedTuple):
    scenario: WarehouseScenario
    step: int
    seed: int
    agents: Tuple[Robot, ...]
    shelves: Tuple[Shelf, ...]
    request_queue: Tuple[int, ...]
    deliveries: int = 0
    done: bool = False


def parse_warehouse_scenario(name, max_steps=None):
    """ Parse an rware scenario name into a WarehouseScenario. """
    if not isinstance(name, str):
        raise ParseError(name, 0, reason='expecting a str')
    match = re.match(r'rware-', name)
    if not match:
        raise ParseError(name, 0, reason="expecting 'rware-'")
    pos = match.end()
    match = re.compile(r'([a-z]+)(?=-|$)').match(name, pos)
    if (not match) or (match.group(1) not in SIZES):
        raise ParseError(
            name,
            pos,
            reason='expecting one of: {}'.format(', '.join(SIZES)),
        )
    width, height = SIZES[match.group(1)]
    pos = match.end()
    match = re.compile(r'-(\d+)ag').match(name, pos)
    if not match:
        raise ParseError(name, min(pos + 1, len(name)), reason='<n>ag')
    n_agents = int(match.group(1))
    if n_agents < 1:
        raise ParseError(name, pos + 1, reason='need at least one agent')
    pos = match.end()
    match = re.compile(r'-v\d+').match(name, pos)
    if match:
        pos = match.end()
    if pos != len(name):
        raise ParseError(
            name,
            len(name[:pos].encode('utf-8')),
            reason='difficulty variants are not supported',
        )
    return WarehouseScenario.from_size(
        width,
        height,
        n_agents,
        max_steps=500 if max_steps is None else max_steps,
        name=name,
    )


def _new_request(state, shelves, delivered):
    """ Pick the shelf id that replaces a delivered request.
        Drawn from (episode seed, delivery count), so it is a pure function
        of the state.
    """
    candidates = [
        i for i, shelf in enumerate(shelves)
        if (not shelf.requested) and (i != delivered)
    ]
    rng = np.random.default_rng([state.seed, state.deliveries])
    return candidates[int(rng.integers(len(candidates)))]


def warehouse_reset(scenario, seed):
    scenario.validate()
    cells = scenario.width * scenario.height
    if scenario.n_agents > cells:
        raise InfeasibleScenario(
            'Cannot place {} agents on {} cells.'.format(
                scenario.n_agents,
                cells,
            )
        )
    rng = np.random.default_rng(seed)
    picks = rng.choice(cells, size=scenario.n_agents, replace=False)
    agents = tuple(
        Robot(position=(int(p) % scenario.width, int(p) // scenario.width))
        for p in picks
    )
    requests = tuple(
        int(i)
        for i in rng.choice(
            scenario.n_shelves,
            size=scenario.n_requests,
            replace=False,
        )
    )
    shelves = tuple(
        Shelf(home=pos, position=pos, requested=(i in requests))
        for i, pos in enumerate(scenario.shelf_positions)
    )
    return WarehouseState(
        scenario=scenario,
        step=0,
        seed=int(seed),
        agents=agents,
        shelves=shelves,
        request_queue=requests,
    )


def warehouse_transition(state, joint):
    scenario = state.scenario
    n = len(state.agents)
    positions = [a.position for a in state.agents]
    carrying = [a.carrying for a in state.agents]
    shelves = list(state.shelves)
    occupied = set(positions)
    moved = [False] * n
    for i, action in enumerate(joint):
        delta = _moves.get(action, None)
        if delta is None:
            continue
        x, y = positions[i]
        target = (x + delta[0], y + delta[1])
        if (not scenario.in_grid(target)) or (target in occupied):
            continue
        if carrying[i] is not None:
            blocked = any(
                shelf.position == target
                for s, shelf in enumerate(shelves)
                if s != carrying[i]
            )
            if blocked:
                continue
            shelves[carrying[i]] = shelves[carrying[i]]._replace(
                position=target
            )
        occupied.discard(positions[i])
        occupied.add(target)
        positions[i] = target
        moved[i] = True

    goals = set(scenario.goal_cells)
    for i, action in enumerate(joint):
        if action != WarehouseAction.TOGGLE_LOAD:
            continue
        if carrying[i] is not None:
            carrying[i] = None
            continue
        for s, shelf in enumerate(shelves):
            if shelf.position == positions[i] and s not in carrying:
                carrying[i] = s
                break

    rewards = [0.0] * n
    queue = list(state.request_queue)
    deliveries = state.deliveries
    for i in range(n):
        s = carrying[i]
        if not (moved[i] and positions[i] in goals and s is not None):
            continue
        if not shelves[s].requested:
            continue
        rewards[i] = 1.0 / scenario.n_requests
        shelves[s] = shelves[s]._replace(requested=False)
        queue.remove(s)
        fresh = _new_request(
            state._replace(deliveries=deliveries),
            shelves,
            s,
        )
        shelves[fresh] = shelves[fresh]._replace(requested=True)
        queue.append(fresh)
        deliveries += 1

    step = state.step + 1
    next_state = state._replace(
        step=step,
        agents=tuple(
            Robot(position=pos, carrying=carried)
            for pos, carried in zip(positions, carrying)
        ),
        shelves=tuple(shelves),
        request_queue=tuple(queue),
        deliveries=deliveries,
        done=step >= scenario.max_steps,
    )
    return make_outcome(next_state, rewards)


def warehouse_observe(state, agent):
    """ Observation for `agent`: its 3x3 neighbourhood as
            (3, 3, 1, 1, carrying, *cells)
        carrying is 0 (nothing), 1 (a shelf), or 2 (a requested shelf).
    """
    scenario = state.scenario
    me = state.agents[agent]
    grid = {pos: GOAL_CELL for pos in scenario.goal_cells}
    for shelf in state.shelves:
        grid[shelf.position] = REQUESTED_CELL if shelf.requested else SHELF_CELL
    agent_cells = {a.position for a in state.agents}
    cells = []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            pos = (me.position[0] + dx, me.position[1] + dy)
            if not scenario.in_grid(pos):
                cells.append(OUT_OF_GRID)
                continue
            code = grid.get(pos, FLOOR_CELL)
            if pos in agent_cells:
                code += AGENT_FLAG
            cells.append(code)
    if me.carrying is None:
        carried = 0
    else:
        carried = 2 if state.shelves[me.carrying].requested else 1
    return (3, 3, 1, 1, carried, *cells)


@register_environment(WarehouseScenario)
class Warehouse(Environment):
    actions = WarehouseAction

    def observe(self, state, agent):
        return warehouse_observe(state, agent)

    def render_text(self, state):
        """ Plain text grid: a/A agent (A carrying), S shelf, R requested,
            G goal.
        """
        grid = {pos: 'G' for pos in self.scenario.goal_cells}
        for shelf in state.shelves:
            grid[shelf.position] = 'R' if shelf.requested else 'S'
        for robot in state.agents:
            grid[robot.position] = 'a' if robot.carrying is None else 'A'
        return '\n'.join(
            ''.join(
                grid.get((x, y), '.')
                for x in range(self.scenario.width)
            )
            for y in range(self.scenario.height)
        )

    def reset(self, seed):
        return warehouse_reset(self.scenario, seed)

    def transition(self, state, joint):
        return warehouse_transition(state, joint)
