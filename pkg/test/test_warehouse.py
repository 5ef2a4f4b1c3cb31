#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" test_warehouse.py
    Unit tests for the robotic warehouse (agentcredit/warehouse.py).
"""
import math
import sys
import unittest

import numpy as np

from agentcredit import (
    InvalidScenario,
    ParseError,
    WarehouseAction,
    WarehouseScenario,
    WarehouseState,
    environment_for,
    parse_warehouse_scenario,
    reset,
    step,
)
from agentcredit.base import OUT_OF_GRID
from agentcredit.warehouse import (
    REQUESTED_CELL,
    Robot,
    Shelf,
    warehouse_layout,
    warehouse_observe,
)

from .testing_tools import AgentCreditTestCase


def carrying_state(requests, carried=0, position=(4, 9)):
    """ One robot on an 11x11 warehouse, holding shelf `carried` at
        `position`, right above the first goal cell.
    """
    scenario = WarehouseScenario.from_size(11, 11, 1, n_requests=4)
    shelves = [
        Shelf(home=pos, position=pos, requested=(i in requests))
        for i, pos in enumerate(scenario.shelf_positions)
    ]
    shelves[carried] = shelves[carried]._replace(position=position)
    return WarehouseState(
        scenario=scenario,
        step=0,
        seed=0,
        agents=(Robot(position=position, carrying=carried),),
        shelves=tuple(shelves),
        request_queue=tuple(requests),
    )


class ParseTests(AgentCreditTestCase):
    def test_parse_sizes(self):
        tiny = parse_warehouse_scenario('rware-tiny-2ag')
        self.assertEqual((tiny.width, tiny.height), (11, 11))
        self.assertEqual(tiny.n_agents, 2)
        self.assertEqual(tiny.n_requests, 2)
        self.assertEqual(tiny.max_steps, 500)
        small = parse_warehouse_scenario('rware-small-4ag-v1')
        self.assertEqual((small.width, small.height), (11, 20))
        self.assertEqual(small.n_agents, 4)

    def test_parse_errors(self):
        cases = {
            'rware-giant-3ag': 6,
            'warehouse-tiny-2ag': 0,
            'rware-tiny-2ag-hard': 14,
        }
        for name, offset in cases.items():
            with self.assertRaises(ParseError) as ctx:
                parse_warehouse_scenario(name)
            self.assertEqual(
                ctx.exception.offset,
                offset,
                msg='Wrong offset for: {}'.format(name),
            )

    def test_layout(self):
        shelves, goals = warehouse_layout(11, 11)
        self.assertEqual(goals, ((4, 10), (5, 10)))
        self.assertEqual(len(shelves), 49)
        self.assertTrue(all(x % 3 != 0 for x, _ in shelves))
        self.assertTrue(all(1 <= y <= 7 for _, y in shelves))

    def test_too_many_requests(self):
        with self.assertRaises(InvalidScenario):
            WarehouseScenario.from_size(11, 11, 1, n_requests=49)


class TransitionTests(AgentCreditTestCase):
    def test_delivery(self):
        """ carrying a requested shelf onto a goal earns 1/n_requests """
        state = carrying_state((0, 1, 2, 3))
        outcome = step(state, (WarehouseAction.DOWN,))
        self.assertEqual(outcome.individual_rewards, (0.25,))
        after = outcome.next_state
        self.assertEqual(after.agents[0].position, (4, 10))
        self.assertEqual(after.deliveries, 1)
        self.assertFalse(after.shelves[0].requested)
        # The delivered request was replaced by a new one.
        self.assertEqual(len(after.request_queue), 4)
        self.assertNotIn(0, after.request_queue)
        self.assertEqual(sum(s.requested for s in after.shelves), 4)
        for index in after.request_queue:
            self.assertTrue(after.shelves[index].requested)

    def test_delivery_deterministic(self):
        state = carrying_state((0, 1, 2, 3))
        self.assertEqual(
            step(state, (WarehouseAction.DOWN,)),
            step(state, (WarehouseAction.DOWN,)),
        )

    def test_unrequested_delivery(self):
        """ an unrequested shelf earns nothing on a goal """
        state = carrying_state((1, 2, 3, 4))
        outcome = step(state, (WarehouseAction.DOWN,))
        self.assertEqual(outcome.team_reward, 0.0)
        self.assertEqual(outcome.next_state.deliveries, 0)
        self.assertEqual(outcome.next_state.request_queue, (1, 2, 3, 4))

    def test_pickup_and_drop(self):
        scenario = WarehouseScenario.from_size(11, 11, 1, n_requests=4)
        home = scenario.shelf_positions[5]
        state = reset(scenario, 0)._replace(agents=(Robot(position=home),))
        outcome = step(state, (WarehouseAction.TOGGLE_LOAD,))
        self.assertEqual(outcome.next_state.agents[0].carrying, 5)
        outcome = step(outcome.next_state, (WarehouseAction.TOGGLE_LOAD,))
        self.assertIsNone(outcome.next_state.agents[0].carrying)
        self.assertEqual(outcome.team_reward, 0.0)

    def test_drop_on_goal(self):
        """ ToggleLoad drops a carried shelf on a goal cell too """
        state = carrying_state((1, 2, 3, 4), position=(4, 10))
        outcome = step(state, (WarehouseAction.TOGGLE_LOAD,))
        after = outcome.next_state
        self.assertIsNone(after.agents[0].carrying)
        self.assertEqual(after.shelves[0].position, (4, 10))
        self.assertEqual(outcome.team_reward, 0.0)
        self.assertEqual(after.deliveries, 0)

    def test_carrying_blocked_by_shelf(self):
        """ a loaded robot cannot walk into another shelf """
        scenario = WarehouseScenario.from_size(11, 11, 1, n_requests=4)
        # Shelves at (1, 1) and (2, 1), side by side.
        state = reset(scenario, 0)._replace(
            agents=(Robot(position=(1, 1), carrying=0),),
        )
        outcome = step(state, (WarehouseAction.RIGHT,))
        self.assertEqual(outcome.next_state.agents[0].position, (1, 1))
        # Unloaded robots walk under shelves.
        state = state._replace(agents=(Robot(position=(1, 1)),))
        outcome = step(state, (WarehouseAction.RIGHT,))
        self.assertEqual(outcome.next_state.agents[0].position, (2, 1))

    def test_noop_episode(self):
        """ an all-NOOP episode returns nothing and keeps its requests """
        scenario = parse_warehouse_scenario('rware-tiny-4ag', max_steps=20)
        state = reset(scenario, 3)
        total = 0.0
        while not state.done:
            outcome = step(state, (WarehouseAction.NOOP,) * 4)
            total += outcome.team_reward
            state = outcome.next_state
        self.assertEqual(total, 0.0)
        self.assertEqual(state.step, 20)
        self.assertEqual(sum(s.requested for s in state.shelves), 4)


class EpisodeInvariantTests(AgentCreditTestCase):
    """ Invariants checked over whole random-action episodes. """

    def run_episode(self, state, steps, seed, first=None):
        """ Step `state` with random joints, starting with `first` if given.
            Returns the states visited and the team rewards earned.
        """
        env = environment_for(state.scenario)
        rng = np.random.default_rng(seed)
        states, rewards = [state], []
        for _ in range(steps):
            if state.done:
                break
            joint = first or tuple(
                int(a) for a in rng.integers(env.n_actions, size=env.n_agents)
            )
            first = None
            outcome = step(state, joint)
            rewards.append(outcome.team_reward)
            state = outcome.next_state
            states.append(state)
        return states, rewards

    def episodes(self):
        for seed in range(3):
            scenario = parse_warehouse_scenario('rware-tiny-4ag', max_steps=150)
            yield self.run_episode(reset(scenario, seed), 150, seed)
        # Opens with a delivery, so the accounting covers a real one.
        yield self.run_episode(
            carrying_state((0, 1, 2, 3)),
            150,
            7,
            first=(WarehouseAction.DOWN,),
        )

    def test_shelf_conservation(self):
        for states, _ in self.episodes():
            homes = sorted(s.home for s in states[0].shelves)
            for state in states:
                self.assertEqual(sorted(s.home for s in state.shelves), homes)
                positions = [s.position for s in state.shelves]
                self.assertEqual(len(set(positions)), len(positions))

    def test_requested_count_constant(self):
        for states, _ in self.episodes():
            n_requests = states[0].scenario.n_requests
            for state in states:
                requested = [
                    i for i, s in enumerate(state.shelves) if s.requested
                ]
                self.assertEqual(len(requested), n_requests)
                self.assertEqual(sorted(state.request_queue), requested)

    def test_delivery_accounting(self):
        """ the episode return is deliveries / n_requests """
        delivered = 0
        for states, rewards in self.episodes():
            first, last = states[0], states[-1]
            deliveries = last.deliveries - first.deliveries
            delivered += deliveries
            self.assertAlmostEqual(
                math.fsum(rewards),
                deliveries / last.scenario.n_requests,
                delta=1e-12,
            )
            # Sparse: only delivery steps earn a reward.
            for before, after, reward in zip(states, states[1:], rewards):
                if after.deliveries == before.deliveries:
                    self.assertEqual(reward, 0.0)
        self.assertGreaterEqual(delivered, 1)


class ObserveTests(AgentCreditTestCase):
    def test_observe_corner(self):
        state = carrying_state((0, 1, 2, 3), position=(0, 0))
        obs = warehouse_observe(state, 0)
        self.assertEqual(obs[:5], (3, 3, 1, 1, 2))
        cells = obs[5:]
        self.assertEqual(len(cells), 9)
        self.assertEqual(cells[0], OUT_OF_GRID)
        self.assertEqual(cells[3], OUT_OF_GRID)
        # The carried, requested shelf under the robot.
        self.assertEqual(cells[4] % 10, REQUESTED_CELL)

    def test_render_text(self):
        state = carrying_state((0, 1, 2, 3))
        text = environment_for(state.scenario).render_text(state)
        lines = text.splitlines()
        self.assertEqual(len(lines), 11)
        self.assertEqual(lines[9][4], 'A')
        self.assertEqual(lines[10][4:6], 'GG')


if __name__ == '__main__':
    print(
        'Test runner not implemented, '
        'use `green` or `python -m unittest`.'
    )
    unittest.main(argv=sys.argv, verbosity=2)
