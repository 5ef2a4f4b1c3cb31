#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/policy.py
    Action selection: random, no-op, scripted greedy foraging, and tabular
    independent Q-learning trained on the shared team reward.

    A "policy set" is a tuple with one Policy per agent.

    The MIT License (MIT)
"""
import hashlib
import math
import os
from enum import Enum
from typing import (
    Any,
    NamedTuple,
    Optional,
    Tuple,
)

import numpy as np

from .base import (
    InvalidArg,
    environment_for,
    observe,
    reset,
    step,
)
from .config import (
    debug,
    derive_rng,
    derive_seed,
)
from .lbf import (
    EMPTY_CELL,
    MOVES,
    LbfAction,
    LbfScenario,
    LbfState,
    is_food_cell,
    lbf_observe,
)
from .output import atomic_write

__all__ = [
    'IntervalRecord',
    'Policy',
    'PolicyKind',
    'TrainConfig',
    'TrainResult',
    'act',
    'epsilon_at',
    'evaluate_policies',
    'greedy_lbf_action',
    'interval_episodes',
    'joint_action',
    'load_policies',
    'obs_hash',
    'observation_for',
    'parse_policy_spec',
    'play_episode',
    'policy_set',
    'save_policies',
    'train_iql',
]

POLICY_SCHEMA = 'policy_v1'


class PolicyKind(Enum):
    Random = 'random'
    GreedyLbf = 'greedy'
    TabularQ = 'tabular-q'
    NoOp = 'noop'

    @classmethod
    def from_str(cls, s):
        for kind in cls:
            if s in (kind.value, kind.name):
                return kind
        raise InvalidArg(
            s,
            label='Expecting one of {}, got'.format(
                ', '.join(k.value for k in cls)
            ),
        )


class Policy(object):
    """ Parameters for one agent's behaviour.
        q_table maps an observation hash to a numpy row of action values.
        view, when set, is the egocentric sight range used to observe a
        foraging state (tabular learners only).
    """
    __slots__ = ('kind', 'n_actions', 'q_table', 'epsilon', 'view')

    def __init__(
            self, kind, n_actions, q_table=None, epsilon=0.0, view=None):
        self.kind = kind
        self.n_actions = n_actions
        self.q_table = {} if q_table is None else q_table
        if not (0.0 <= epsilon <= 1.0):
            raise InvalidArg(epsilon, label='Epsilon must be in [0, 1], got')
        self.epsilon = float(epsilon)
        self.view = view

    def __eq__(self, other):
        if not isinstance(other, Policy):
            return NotImplemented
        if (
                (self.kind, self.n_actions, self.epsilon, self.view) !=
                (other.kind, other.n_actions, other.epsilon, other.view)):
            return False
        if self.q_table.keys() != other.q_table.keys():
            return False
        return all(
            np.array_equal(row, other.q_table[key])
            for key, row in self.q_table.items()
        )

    def __repr__(self):
        return '{}(kind={}, n_actions={}, epsilon={}, view={}, rows={})'.format(
            type(self).__name__,
            self.kind.value,
            self.n_actions,
            self.epsilon,
            self.view,
            len(self.q_table),
        )

    def copy(self, epsilon=None):
        """ A deep copy, optionally with a new epsilon. """
        return type(self)(
            self.kind,
            self.n_actions,
            q_table={k: row.copy() for k, row in self.q_table.items()},
            epsilon=self.epsilon if epsilon is None else epsilon,
            view=self.view,
        )

    def q_row(self, key):
        """ The action-value row for an observation hash, created on demand.
        """
        row = self.q_table.get(key, None)
        if row is None:
            row = self.q_table[key] = np.zeros(self.n_actions)
        return row


def policy_set(kind, n_agents, n_actions, **kwargs):
    """ One policy of `kind` per agent. """
    return tuple(Policy(kind, n_actions, **kwargs) for _ in range(n_agents))


def obs_hash(observation):
    """ A 64-bit key for a canonical observation tuple.
        Distinct observations may collide; tables are small enough that
        this is accepted.
    """
    data = np.asarray(observation, dtype=np.int64).tobytes()
    return int.from_bytes(
        hashlib.blake2b(data, digest_size=8).digest(),
        'big',
    )


def observation_for(policy, state, agent):
    """ The observation a policy acts on. """
    if policy.view is not None and isinstance(state, LbfState):
        return lbf_observe(state, agent, sight=policy.view)
    return observe(state, agent)


def greedy_lbf_action(observation, rng):
    """ Walk towards the nearest visible food, Load when adjacent.
        Distance is Manhattan. The nearest food is the first found in
        row-major order. Moves are tried in the order up, down, left, right,
        preferring free cells. Without visible food a random move is made.
    """
    view_w, view_h, own_x, own_y = observation[:4]
    cells = observation[5:]
    target = None
    best = None
    for index, code in enumerate(cells):
        if not is_food_cell(code):
            continue
        x, y = index % view_w, index // view_w
        dist = abs(x - own_x) + abs(y - own_y)
        if best is None or dist < best:
            best, target = dist, (x, y)
    if target is None:
        return LbfAction(int(rng.integers(
            int(LbfAction.UP),
            int(LbfAction.LOAD),
        )))
    if best == 1:
        return LbfAction.LOAD

    closer = []
    for action, (dx, dy) in MOVES.items():
        x, y = own_x + dx, own_y + dy
        if abs(target[0] - x) + abs(target[1] - y) >= best:
            continue
        free = (
            0 <= x < view_w and
            0 <= y < view_h and
            cells[y * view_w + x] == EMPTY_CELL
        )
        closer.append((not free, action))
    # Free cells first, then the fixed move order.
    return min(closer, key=lambda pair: pair[0])[1]


def act(policy, observation, agent, rng):
    """ Pick an action index for `agent` from its observation. """
    kind = policy.kind
    if kind is PolicyKind.NoOp:
        return 0
    if kind is PolicyKind.Random:
        return int(rng.integers(policy.n_actions))
    if kind is PolicyKind.GreedyLbf:
        return int(greedy_lbf_action(observation, rng))
    return _act_key(policy, obs_hash(observation), rng)


def joint_action(policies, state, rng):
    """ Every agent acts on its own observation, in index order. """
    return tuple(
        act(policy, observation_for(policy, state, agent), agent, rng)
        for agent, policy in enumerate(policies)
    )


class EpisodeStep(NamedTuple):
    t: int
    state: Any
    joint: Tuple[int, ...]
    outcome: Any


def play_episode(scenario, policies, reset_seed, rng):
    """ Roll out one episode, yielding an EpisodeStep per transition. """
    check_policies(scenario, policies)
    state = reset(scenario, reset_seed)
    t = 0
    while not state.done:
        joint = joint_action(policies, state, rng)
        outcome = step(state, joint)
        yield EpisodeStep(t=t, state=state, joint=joint, outcome=outcome)
        state = outcome.next_state
        t += 1


def check_policies(scenario, policies):
    env = environment_for(scenario)
    if len(policies) != env.n_agents:
        raise InvalidArg(
            len(policies),
            label='Expecting {} policies, got'.format(env.n_agents),
        )
    for policy in policies:
        if policy.n_actions != env.n_actions:
            raise InvalidArg(
                policy.n_actions,
                label='Expecting policies with {} actions, got'.format(
                    env.n_actions
                ),
            )
        if policy.kind is PolicyKind.GreedyLbf and env.actions is not LbfAction:
            raise InvalidArg(
                policy.kind.value,
                label='Policy only works for Foraging scenarios',
            )


def episode_return(scenario, policies, reset_seed, rng):
    return math.fsum(
        s.outcome.team_reward
        for s in play_episode(scenario, policies, reset_seed, rng)
    )


def evaluate_policies(scenario, policies, episodes, seed):
    """ Mean team return over `episodes` evaluation episodes.
        Reset seeds and the action rng are derived from `seed`.
    """
    if episodes < 1:
        raise InvalidArg(episodes, label='Need at least one episode, got')
    rng = derive_rng(seed, 'policy')
    returns = [
        episode_return(scenario, policies, derive_seed(seed, 'reset', e), rng)
        for e in range(episodes)
    ]
    return math.fsum(returns) / episodes


class TrainConfig(NamedTuple):
    episodes: int = 20000
    learning_rate: float = 0.1
    discount: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    anneal_episodes: int = 10000
    seed: int = 0
    view: Optional[int] = 1
    eval_intervals: int = 0
    eval_episodes: int = 32
    eval_epsilon: float = 0.05

    @classmethod
    def from_config(cls, config, seed=None, eval_intervals=0):
        return cls(
            episodes=config.train_episodes,
            learning_rate=config.learning_rate,
            discount=config.discount,
            epsilon_start=config.epsilon_start,
            epsilon_end=config.epsilon_end,
            anneal_episodes=config.anneal_episodes,
            seed=config.root_seed if seed is None else seed,
            view=config.view,
            eval_intervals=eval_intervals,
            eval_episodes=max(1, config.episodes),
            eval_epsilon=config.eval_epsilon,
        ).validate()

    def validate(self):
        if self.episodes < 0:
            raise InvalidArg(self.episodes, label='Invalid episode count')
        if not (0.0 < self.learning_rate <= 1.0):
            raise InvalidArg(
                self.learning_rate,
                label='Learning rate must be in (0, 1], got',
            )
        for name in ('discount', 'epsilon_start', 'epsilon_end', 'eval_epsilon'):
            val = getattr(self, name)
            if not (0.0 <= val <= 1.0):
                raise InvalidArg(
                    val,
                    label='{} must be in [0, 1], got'.format(name),
                )
        if self.anneal_episodes < 0:
            raise InvalidArg(self.anneal_episodes, label='Invalid anneal')
        if (self.view is not None) and self.view < 1:
            raise InvalidArg(self.view, label='Invalid view range')
        if self.eval_intervals < 0 or self.eval_episodes < 1:
            raise InvalidArg(
                (self.eval_intervals, self.eval_episodes),
                label='Invalid evaluation intervals/episodes',
            )
        return self


class IntervalRecord(NamedTuple):
    """ One evaluation point during training. """
    index: int
    episode: int
    mean_return: float
    episodes: int
    snapshot: Optional[Tuple[Policy, ...]] = None


class TrainResult(NamedTuple):
    policies: Tuple[Policy, ...]
    returns: np.ndarray
    intervals: Tuple[IntervalRecord, ...] = ()


def epsilon_at(config, episode):
    """ Linearly annealed exploration rate for a training episode. """
    if config.anneal_episodes == 0:
        return config.epsilon_end
    frac = min(1.0, episode / config.anneal_episodes)
    return config.epsilon_start + (
        (config.epsilon_end - config.epsilon_start) * frac
    )


def interval_episodes(episodes, intervals):
    """ Training episode counts at which evaluation intervals are recorded,
        equally spaced from 0 to `episodes`.
    """
    if intervals < 1:
        return ()
    if intervals == 1:
        return (episodes, )
    return tuple(
        (k * episodes) // (intervals - 1)
        for k in range(intervals)
    )


def _record_interval(scenario, policies, config, index, episode):
    snapshot = tuple(p.copy(epsilon=config.eval_epsilon) for p in policies)
    mean = evaluate_policies(
        scenario,
        snapshot,
        config.eval_episodes,
        derive_seed(config.seed, 'evaluation', index),
    )
    debug('Interval {} (episode {}): mean return {:.4f}'.format(
        index,
        episode,
        mean,
    ))
    return IntervalRecord(
        index=index,
        episode=episode,
        mean_return=mean,
        episodes=config.eval_episodes,
        snapshot=snapshot,
    )


def train_iql(scenario, config):
    """ Independent tabular Q-learning. Every agent learns from its own
        observation and the shared team reward, with one-step updates:
            Q[o, a] += lr * (r + discount * max Q[o', .] - Q[o, a])
        (no bootstrap term on the final transition).
        Returns a TrainResult with the per-episode team returns and, when
        config.eval_intervals is set, the evaluation intervals.
    """
    config.validate()
    env = environment_for(scenario)
    policies = policy_set(
        PolicyKind.TabularQ,
        env.n_agents,
        env.n_actions,
        epsilon=config.epsilon_start,
        view=config.view if isinstance(scenario, LbfScenario) else None,
    )
    rng = derive_rng(config.seed, 'policy')
    lr, gamma = config.learning_rate, config.discount
    checkpoints = interval_episodes(config.episodes, config.eval_intervals)
    intervals = []
    returns = np.zeros(config.episodes)

    def record_due(episode):
        while (
                len(intervals) < len(checkpoints) and
                checkpoints[len(intervals)] == episode):
            intervals.append(_record_interval(
                scenario,
                policies,
                config,
                len(intervals),
                episode,
            ))

    record_due(0)
    for episode in range(config.episodes):
        epsilon = epsilon_at(config, episode)
        for policy in policies:
            policy.epsilon = epsilon
        state = reset(scenario, derive_seed(config.seed, 'train', episode))
        keys = [
            obs_hash(observation_for(p, state, i))
            for i, p in enumerate(policies)
        ]
        ep_rewards = []
        while not state.done:
            joint = tuple(
                _act_key(p, keys[i], rng)
                for i, p in enumerate(policies)
            )
            outcome = step(state, joint)
            reward = outcome.team_reward
            ep_rewards.append(reward)
            state = outcome.next_state
            next_keys = [
                obs_hash(observation_for(p, state, i))
                for i, p in enumerate(policies)
            ]
            for i, policy in enumerate(policies):
                row = policy.q_row(keys[i])
                target = reward
                if not outcome.done:
                    target += gamma * float(np.max(policy.q_row(next_keys[i])))
                row[joint[i]] += lr * (target - row[joint[i]])
            keys = next_keys
        returns[episode] = math.fsum(ep_rewards)
        record_due(episode + 1)

    for policy in policies:
        policy.epsilon = config.eval_epsilon
    debug('Trained {} episodes, {} table rows.'.format(
        config.episodes,
        sum(len(p.q_table) for p in policies),
    ))
    return TrainResult(
        policies=policies,
        returns=returns,
        intervals=tuple(intervals),
    )


def _act_key(policy, key, rng):
    """ Epsilon-greedy over a Q row, with the observation already hashed.
        Unseen observations act like an all-zero row.
    """
    if policy.epsilon > 0 and rng.random() < policy.epsilon:
        return int(rng.integers(policy.n_actions))
    row = policy.q_table.get(key, None)
    if row is None:
        return 0
    # argmax returns the lowest index among ties.
    return int(np.argmax(row))


def parse_policy_spec(spec, scenario):
    """ Build a policy set from a spec string: one kind name for every
        agent ('greedy'), a comma separated kind per agent
        ('greedy,greedy,noop'), or a policy_v1 file path.
    """
    env = environment_for(scenario)
    spec = (spec or '').strip()
    if not spec:
        raise InvalidArg(spec, label='Empty policy spec')
    if os.path.exists(spec):
        policies, _ = load_policies(spec)
        check_policies(scenario, policies)
        return policies
    names = [s.strip() for s in spec.split(',')]
    if len(names) == 1:
        names = names * env.n_agents
    if len(names) != env.n_agents:
        raise InvalidArg(
            spec,
            label='Expecting 1 or {} policy names, got'.format(env.n_agents),
        )
    kinds = [PolicyKind.from_str(name) for name in names]
    if PolicyKind.TabularQ in kinds:
        raise InvalidArg(
            spec,
            label='Tabular policies must be trained or loaded from a file',
        )
    policies = tuple(Policy(kind, env.n_actions) for kind in kinds)
    check_policies(scenario, policies)
    return policies


def save_policies(path, policies, scenario_name='', seed=0):
    """ Write a policy set as a policy_v1 text file:
            # policy_v1
            key = value header lines (kind, scenario, seed, ...)
            one `agent obs_hash action value` line per table entry,
            sorted by agent, hash, then action.
    """
    if not policies:
        raise InvalidArg(policies, label='No policies to save')
    first = policies[0]
    for policy in policies:
        if (policy.kind, policy.n_actions, policy.epsilon, policy.view) != (
                first.kind, first.n_actions, first.epsilon, first.view):
            raise InvalidArg(
                policy,
                label='Policy files hold one kind of policy, got',
            )
    lines = [
        '# {}'.format(POLICY_SCHEMA),
        'kind = {}'.format(first.kind.value),
        'scenario = {}'.format(scenario_name),
        'seed = {}'.format(seed),
        'agents = {}'.format(len(policies)),
        'actions = {}'.format(first.n_actions),
        'epsilon = {!r}'.format(first.epsilon),
        'view = {}'.format('none' if first.view is None else first.view),
        '# agent obs_hash action value',
    ]
    for agent, policy in enumerate(policies):
        for key in sorted(policy.q_table):
            row = policy.q_table[key]
            lines.extend(
                '{} {} {} {!r}'.format(agent, key, action, float(value))
                for action, value in enumerate(row)
            )
    return atomic_write(path, '\n'.join(lines) + '\n')


def load_policies(path):
    """ Read a policy_v1 file.
        Returns (policies, header), where header is a dict of the
        `key = value` lines.
    """
    def bad(lineno, reason):
        return InvalidArg(
            '{}:{}'.format(path, lineno),
            label='Invalid policy file ({})'.format(reason),
        )

    with open(path, 'r') as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != '# {}'.format(POLICY_SCHEMA):
        raise bad(1, 'expecting a {} header'.format(POLICY_SCHEMA))
    header = {}
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if (not line) or line.startswith('#'):
            continue
        if '=' in line:
            key, _, val = line.partition('=')
            header[key.strip()] = val.strip()
            continue
        parts = line.split()
        if len(parts) != 4:
            raise bad(lineno, 'expecting agent, hash, action, value')
        try:
            entries.append((
                int(parts[0]),
                int(parts[1]),
                int(parts[2]),
                float(parts[3]),
            ))
        except ValueError as ex:
            raise bad(lineno, ex)
    try:
        kind = PolicyKind.from_str(header['kind'])
        n_agents = int(header['agents'])
        n_actions = int(header['actions'])
        epsilon = float(header.get('epsilon', '0'))
        view = header.get('view', 'none')
        view = None if view == 'none' else int(view)
    except KeyError as ex:
        raise bad(1, 'missing header key {}'.format(ex))
    except ValueError as ex:
        raise bad(1, ex)
    policies = policy_set(
        kind,
        n_agents,
        n_actions,
        epsilon=epsilon,
        view=view,
    )
    for agent, key, action, value in entries:
        if not (0 <= agent < n_agents and 0 <= action < n_actions):
            raise bad(0, 'entry out of range: {}'.format(
                (agent, key, action)
            ))
        if not math.isfinite(value):
            raise bad(0, 'non-finite value for {}'.format((agent, key)))
        policies[agent].q_row(key)[action] = value
    return policies, header
