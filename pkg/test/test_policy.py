#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" test_policy.py
    Unit tests for policies and independent Q-learning
    (agentcredit/policy.py).
"""
import os
import sys
import unittest

import numpy as np

from agentcredit import (
    InvalidArg,
    LbfAction,
    Policy,
    PolicyKind,
    TrainConfig,
    evaluate_policies,
    load_policies,
    load_scenario,
    parse_policy_spec,
    save_policies,
    train_iql,
)
from agentcredit.lbf import agent_cell
from agentcredit.policy import (
    act,
    epsilon_at,
    greedy_lbf_action,
    interval_episodes,
    obs_hash,
    policy_set,
)

from .testing_tools import AgentCreditTestCase


def view3(cells):
    """ A 3x3 observation centred on a level 1 agent. """
    return (3, 3, 1, 1, 1, *cells)


class GreedyTests(AgentCreditTestCase):
    def test_adjacent_loads(self):
        rng = np.random.default_rng(0)
        obs = view3((0, 2, 0, 0, agent_cell(1), 0, 0, 0, 0))
        self.assertEqual(greedy_lbf_action(obs, rng), LbfAction.LOAD)

    def test_loads_high_level_food(self):
        rng = np.random.default_rng(0)
        obs = view3((0, 0, 0, 0, agent_cell(1), 101, 0, 0, 0))
        self.assertEqual(greedy_lbf_action(obs, rng), LbfAction.LOAD)
        obs = view3((101, 0, 0, 0, agent_cell(1), 0, 0, 0, 0))
        self.assertIn(
            greedy_lbf_action(obs, rng),
            (LbfAction.UP, LbfAction.LEFT),
        )

    def test_walks_toward_food(self):
        """ first distance-reducing move in up/down/left/right order """
        rng = np.random.default_rng(0)
        obs = view3((0, 0, 2, 0, agent_cell(1), 0, 0, 0, 0))
        self.assertEqual(greedy_lbf_action(obs, rng), LbfAction.UP)
        obs = view3((0, 0, 0, 0, agent_cell(1), 0, 0, 0, 2))
        self.assertEqual(greedy_lbf_action(obs, rng), LbfAction.DOWN)

    def test_prefers_free_cell(self):
        """ a blocked closer cell loses to a free one """
        rng = np.random.default_rng(0)
        obs = view3((
            0, agent_cell(2), 2,
            0, agent_cell(1), 0,
            0, 0, 0,
        ))
        self.assertEqual(greedy_lbf_action(obs, rng), LbfAction.RIGHT)

    def test_no_food_moves(self):
        rng = np.random.default_rng(0)
        obs = view3((0, 0, 0, 0, agent_cell(1), 0, 0, 0, 0))
        moves = {greedy_lbf_action(obs, rng) for _ in range(50)}
        self.assertTrue(moves)
        self.assertTrue(moves.issubset({
            LbfAction.UP,
            LbfAction.DOWN,
            LbfAction.LEFT,
            LbfAction.RIGHT,
        }))


class ActTests(AgentCreditTestCase):
    def test_noop(self):
        rng = np.random.default_rng(0)
        policy = Policy(PolicyKind.NoOp, 6)
        self.assertEqual(act(policy, (0,), 0, rng), 0)

    def test_random_reproducible(self):
        policy = Policy(PolicyKind.Random, 6)
        rng = np.random.default_rng(5)
        first = [act(policy, (0,), 0, rng) for _ in range(20)]
        rng = np.random.default_rng(5)
        second = [act(policy, (0,), 0, rng) for _ in range(20)]
        self.assertEqual(first, second)
        self.assertTrue(all(0 <= a < 6 for a in first))

    def test_tabular_argmax(self):
        obs = (1, 2, 3)
        row = np.array([0.0, 0.5, 0.2, 0.5, 0.0, 0.0])
        policy = Policy(PolicyKind.TabularQ, 6, q_table={obs_hash(obs): row})
        rng = np.random.default_rng(0)
        # Ties go to the lowest index.
        self.assertEqual(act(policy, obs, 0, rng), 1)
        # Unseen observations act like an all-zero row.
        self.assertEqual(act(policy, (9, 9), 0, rng), 0)

    def test_tabular_epsilon_rate(self):
        """ epsilon-greedy explores at rate epsilon * (n - 1) / n """
        obs = (4, 4)
        row = np.zeros(6)
        row[3] = 1.0
        policy = Policy(
            PolicyKind.TabularQ,
            6,
            q_table={obs_hash(obs): row},
            epsilon=0.2,
        )
        rng = np.random.default_rng(1)
        draws = 10000
        other = sum(act(policy, obs, 0, rng) != 3 for _ in range(draws))
        expected = 0.2 * 5 / 6
        sigma = (expected * (1 - expected) / draws) ** 0.5
        self.assertLess(abs(other / draws - expected), 5 * sigma)

    def test_invalid_epsilon(self):
        with self.assertRaises(InvalidArg):
            Policy(PolicyKind.Random, 6, epsilon=1.5)

    def test_evaluate_noop(self):
        scenario = load_scenario('Foraging-5x5-2p-2f', max_steps=10)
        policies = policy_set(PolicyKind.NoOp, 2, 6)
        self.assertEqual(evaluate_policies(scenario, policies, 3, 0), 0.0)


class TrainTests(AgentCreditTestCase):
    scenario = load_scenario('Foraging-5x5-2p-1f', max_steps=10)

    def test_deterministic(self):
        config = TrainConfig(episodes=20, seed=3, anneal_episodes=10)
        first = train_iql(self.scenario, config)
        second = train_iql(self.scenario, config)
        self.assertEqual(first.policies, second.policies)
        self.assertAllClose(first.returns, second.returns, atol=0)
        self.assertGreater(len(first.policies[0].q_table), 0)

    def test_zero_episodes(self):
        result = train_iql(self.scenario, TrainConfig(episodes=0))
        self.assertEqual(len(result.returns), 0)
        for policy in result.policies:
            self.assertEqual(policy.q_table, {})

    def test_single_update(self):
        """ with discount 0 and rate 1, Q holds the first reward """
        scenario = load_scenario('Foraging-2x2-1p-1f', max_steps=1)
        config = TrainConfig(episodes=1, learning_rate=1.0, discount=0.0)
        result = train_iql(scenario, config)
        table = result.policies[0].q_table
        self.assertEqual(len(table), 1)
        row = next(iter(table.values()))
        self.assertAlmostEqual(float(row.sum()), result.returns[0])

    def test_intervals(self):
        config = TrainConfig(
            episodes=10,
            eval_intervals=3,
            eval_episodes=2,
            seed=1,
        )
        result = train_iql(self.scenario, config)
        self.assertEqual(
            [r.episode for r in result.intervals],
            [0, 5, 10],
        )
        for record in result.intervals:
            self.assertEqual(record.episodes, 2)
            self.assertEqual(len(record.snapshot), 2)
            self.assertGreaterEqual(record.mean_return, 0.0)
            self.assertLessEqual(record.mean_return, 1.0)
            for policy in record.snapshot:
                self.assertEqual(policy.epsilon, config.eval_epsilon)

    def test_beats_random(self):
        """ a trained team outscores a uniformly random one """
        scenario = load_scenario('Foraging-5x5-2p-2f', max_steps=25)
        config = TrainConfig(episodes=1500, anneal_episodes=750, seed=4)
        trained = train_iql(scenario, config).policies
        randoms = policy_set(PolicyKind.Random, 2, len(LbfAction))
        self.assertGreater(
            evaluate_policies(scenario, trained, 100, 9),
            evaluate_policies(scenario, randoms, 100, 9),
        )

    def test_epsilon_at(self):
        config = TrainConfig(
            epsilon_start=1.0,
            epsilon_end=0.05,
            anneal_episodes=10,
        )
        self.assertAlmostEqual(epsilon_at(config, 0), 1.0)
        self.assertAlmostEqual(epsilon_at(config, 5), 0.525)
        self.assertAlmostEqual(epsilon_at(config, 50), 0.05)

    def test_interval_episodes(self):
        self.assertEqual(interval_episodes(100, 5), (0, 25, 50, 75, 100))
        self.assertEqual(interval_episodes(100, 1), (100, ))
        self.assertEqual(interval_episodes(100, 0), ())

    def test_invalid_config(self):
        with self.assertRaises(InvalidArg):
            TrainConfig(learning_rate=0.0).validate()
        with self.assertRaises(InvalidArg):
            TrainConfig(discount=1.5).validate()


class PolicyFileTests(AgentCreditTestCase):
    def test_save_load(self):
        scenario = load_scenario('Foraging-5x5-2p-1f', max_steps=10)
        result = train_iql(scenario, TrainConfig(episodes=5, seed=2))
        path = os.path.join(self.make_tempdir(), 'policy.txt')
        save_policies(path, result.policies, 'Foraging-5x5-2p-1f', seed=2)
        policies, header = load_policies(path)
        self.assertEqual(policies, result.policies)
        self.assertEqual(header['scenario'], 'Foraging-5x5-2p-1f')
        self.assertEqual(header['seed'], '2')
        # Loaded files work as policy specs too.
        self.assertEqual(parse_policy_spec(path, scenario), policies)

    def test_load_bad_file(self):
        dirpath = self.make_tempdir()
        cases = (
            'kind = tabular-q\n',
            '# policy_v1\nkind = tabular-q\nagents = 1\nactions = 6\n0 1 2\n',
            '# policy_v1\nagents = 1\nactions = 6\n',
            '# policy_v1\nkind = tabular-q\nagents = 1\nactions = 6\n'
            '0 1 9 0.5\n',
        )
        for i, content in enumerate(cases):
            path = self.write_file(dirpath, 'bad{}.txt'.format(i), content)
            with self.assertRaises(InvalidArg):
                load_policies(path)

    def test_parse_spec(self):
        scenario = load_scenario('Foraging-5x5-3p-1f')
        policies = parse_policy_spec('greedy,noop,random', scenario)
        self.assertEqual(
            [p.kind for p in policies],
            [PolicyKind.GreedyLbf, PolicyKind.NoOp, PolicyKind.Random],
        )
        policies = parse_policy_spec('greedy', scenario)
        self.assertEqual(len(policies), 3)

    def test_parse_spec_errors(self):
        scenario = load_scenario('Foraging-5x5-3p-1f')
        for spec in ('', 'greedy,noop', 'bogus', 'tabular-q'):
            with self.assertRaises(InvalidArg):
                parse_policy_spec(spec, scenario)
        with self.assertRaises(InvalidArg):
            parse_policy_spec('greedy', load_scenario('rware-tiny-2ag'))


if __name__ == '__main__':
    print(
        'Test runner not implemented, '
        'use `green` or `python -m unittest`.'
    )
    unittest.main(argv=sys.argv, verbosity=2)
