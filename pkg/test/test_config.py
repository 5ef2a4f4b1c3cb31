#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" test_config.py
    Unit tests for run configuration and seed derivation
    (agentcredit/config.py).
"""
import sys
import unittest

from agentcredit import (
    Config,
    TrainConfig,
    build_config,
    derive_seed,
    load_config_file,
)
from agentcredit.base import ConfigError
from agentcredit.config import (
    MAX_SEED,
    derive_rng,
    parse_field,
)

from .testing_tools import AgentCreditTestCase


class SeedTests(AgentCreditTestCase):
    def test_derive_seed_deterministic(self):
        self.assertEqual(
            derive_seed(7, 'reset', 3),
            derive_seed(7, 'reset', 3),
        )
        seed = derive_seed(7, 'reset', 3)
        self.assertGreaterEqual(seed, 0)
        self.assertLessEqual(seed, MAX_SEED)

    def test_derive_seed_distinct(self):
        """ every tag, index, and root gets its own stream """
        tags = (
            'reset',
            'policy',
            'train',
            'evaluation',
            'attribution',
            'interval',
            'bootstrap',
            'bench',
            'absolute',
        )
        seeds = {derive_seed(0, tag, 0) for tag in tags}
        self.assertEqual(len(seeds), len(tags))
        self.assertNotEqual(derive_seed(0, 'reset', 0), derive_seed(0, 'reset', 1))
        self.assertNotEqual(derive_seed(0, 'reset', 0), derive_seed(1, 'reset', 0))

    def test_derive_rng(self):
        first = derive_rng(3, 'policy').integers(1000, size=10).tolist()
        second = derive_rng(3, 'policy').integers(1000, size=10).tolist()
        self.assertEqual(first, second)


class FieldTests(AgentCreditTestCase):
    def test_parse_field(self):
        self.assertEqual(parse_field('seeds', '0, 1 2'), (0, 1, 2))
        self.assertEqual(parse_field('episodes', '0'), 0)
        self.assertEqual(parse_field('method', 'Shapley'), 'shapley')
        self.assertEqual(parse_field('max_steps', 'none'), None)
        self.assertEqual(parse_field('max_steps', '25'), 25)
        self.assertEqual(parse_field('bench_parallel', 'yes'), True)
        self.assertEqual(
            parse_field('bench_scenarios', 'Foraging-5x5-2p-2f, rware-tiny-2ag'),
            ('Foraging-5x5-2p-2f', 'rware-tiny-2ag'),
        )
        self.assertAlmostEqual(parse_field('learning_rate', '0.5'), 0.5)
        self.assertEqual(
            parse_field('reward_rule', 'paper_literal'),
            'paper_literal',
        )
        self.assertEqual(
            build_config(cli={'reward_rule': 'paper_literal'}).reward_rule,
            'paper_literal',
        )

    def test_parse_field_errors(self):
        cases = (
            ('seeds', ''),
            ('seeds', '-1'),
            ('seeds', str(MAX_SEED + 1)),
            ('episodes', '-1'),
            ('intervals', '0'),
            ('method', 'banzhaf'),
            ('proxy', 'nothing'),
            ('learning_rate', '0'),
            ('discount', '1.5'),
            ('bench_parallel', 'maybe'),
            ('tie_tolerance', 'nan'),
            ('not_a_key', '1'),
        )
        for key, value in cases:
            with self.assertRaises(ConfigError, msg='{}={!r}'.format(
                    key,
                    value)):
                parse_field(key, value)


class ConfigFileTests(AgentCreditTestCase):
    def test_ini_sections(self):
        path = self.write_file(
            self.make_tempdir(),
            'run.ini',
            '\n'.join((
                '[run]',
                'scenario = Foraging-10x10-4p-4f',
                'seeds = 3, 4',
                '',
                '[train]',
                'train_episodes = 100',
                '',
            )),
        )
        raw = load_config_file(path)
        self.assertEqual(raw, {
            'scenario': 'Foraging-10x10-4p-4f',
            'seeds': '3, 4',
            'train_episodes': '100',
        })
        config = build_config(path=path)
        self.assertEqual(config.seeds, (3, 4))
        self.assertEqual(config.root_seed, 3)
        self.assertEqual(config.train_episodes, 100)

    def test_ini_without_sections(self):
        path = self.write_file(
            self.make_tempdir(),
            'run.conf',
            'policy = noop\nepisodes = 4\n',
        )
        config = build_config(path=path)
        self.assertEqual(config.policy, 'noop')
        self.assertEqual(config.episodes, 4)

    def test_json(self):
        path = self.write_file(
            self.make_tempdir(),
            'run.json',
            '{"run": {"proxy": "copy"}, "workers": 2}',
        )
        config = build_config(path=path)
        self.assertEqual(config.proxy, 'copy')
        self.assertEqual(config.workers, 2)

    def test_duplicate_key(self):
        path = self.write_file(
            self.make_tempdir(),
            'run.ini',
            '[run]\nepisodes = 4\n[train]\nepisodes = 5\n',
        )
        with self.assertRaises(ConfigError):
            load_config_file(path)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config_file('/nonexistent/agentcredit/run.ini')

    def test_bad_value(self):
        path = self.write_file(
            self.make_tempdir(),
            'run.ini',
            '[run]\nintervals = zero\n',
        )
        with self.assertRaises(ConfigError):
            build_config(path=path)

    def test_train_config_fields(self):
        """ the intervals and episodes keys drive evaluation intervals """
        config = build_config(cli={'intervals': '5', 'episodes': '7'})
        train = TrainConfig.from_config(
            config,
            eval_intervals=config.intervals,
        )
        self.assertEqual(train.eval_intervals, 5)
        self.assertEqual(train.eval_episodes, 7)

    def test_precedence(self):
        """ CLI values beat the config file, which beats the defaults """
        path = self.write_file(
            self.make_tempdir(),
            'run.ini',
            '[run]\nepisodes = 4\nproxy = random\n',
        )
        config = build_config(
            cli={'episodes': '9', 'proxy': None},
            path=path,
        )
        self.assertEqual(config.episodes, 9)
        self.assertEqual(config.proxy, 'random')
        self.assertEqual(config.intervals, Config().intervals)
        self.assertEqual(build_config(), Config())


if __name__ == '__main__':
    print(
        'Test runner not implemented, '
        'use `green` or `python -m unittest`.'
    )
    unittest.main(argv=sys.argv, verbosity=2)
