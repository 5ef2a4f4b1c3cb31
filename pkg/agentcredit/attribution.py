#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/attribution.py
    Per-agent credit for a shared team reward.

    Everything here is built on one kernel, `coalition_value`: the team
    reward of a single transition when every agent outside a coalition has
    its action replaced by a removal proxy. On top of it:

        importance_step      difference rewards, n counterfactual steps
        exact_shapley_step   exact Shapley values, 2**n counterfactual steps
        mc_shapley           sampled Shapley values (permutation or uniform
                             coalition sampling)

    and `attribute_rollout`/`attribute_interval`, which roll out evaluation
    episodes and average per-step values over an interval.

    The empty coalition is valued like any other: under the NoOp proxy it
    is the reward of the all-no-op joint action, which is 0 for the bundled
    environments.

    The MIT License (MIT)
"""
import itertools
import math
import multiprocessing
from contextlib import contextmanager
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import (
    NamedTuple,
    Tuple,
)

import numpy as np
import pandas as pd

from .base import (
    EpisodeFinished,
    InvalidArg,
    TooManyAgents,
    environment_for,
    step,
)
from .config import (
    debug,
    derive_rng,
    derive_seed,
)
from .output import write_csv
from .rollout import run_episodes

__all__ = [
    'AttributionOptions',
    'AttributionReport',
    'CoalitionMask',
    'EvalCounter',
    'IntervalSummary',
    'McShapleyResult',
    'Method',
    'RemovalProxy',
    'Sampler',
    'StepAttribution',
    'attribute_interval',
    'attribute_rollout',
    'coalition_value',
    'coalition_values',
    'exact_shapley_step',
    'importance_step',
    'mc_shapley',
    'shapley_from_values',
    'shapley_weights',
    'substitute_joint',
    'write_report',
]

MAX_AGENTS = 63
DEFAULT_SHAPLEY_CAP = 20
# Full permutation enumeration is n! coalition chains.
EXHAUSTIVE_CAP = 9

STEP_COLUMNS = ('interval', 't', 'agent', 'method', 'value')
SUMMARY_COLUMNS = (
    'interval',
    'agent',
    'method',
    'mean',
    'variance_across_team',
)


class _NamedEnum(Enum):
    """ An Enum that can be looked up by value or member name. """
    @classmethod
    def from_str(cls, s):
        if isinstance(s, cls):
            return s
        for member in cls:
            if s in (member.value, member.name):
                return member
        raise InvalidArg(
            s,
            label='Expecting one of {}, got'.format(
                ', '.join(m.value for m in cls)
            ),
        )


class RemovalProxy(_NamedEnum):
    """ How an agent outside the coalition is neutralized. """
    NoOp = 'noop'
    RandomAction = 'random'
    CopyOtherAgent = 'copy'


class Method(_NamedEnum):
    Importance = 'importance'
    ExactShapley = 'shapley'
    McShapley = 'mc-shapley'
    # The environment's own individual rewards, used as ground truth.
    Individual = 'individual'


class Sampler(_NamedEnum):
    UniformCoalition = 'uniform'
    Permutation = 'permutation'


class CoalitionMask(NamedTuple):
    """ The agents that are present, as a bitmask over n agents. """
    present: int
    n: int

    @classmethod
    def checked(cls, present, n):
        if not (0 <= n <= MAX_AGENTS):
            raise TooManyAgents(
                'Coalitions support up to {} agents, got {}.'.format(
                    MAX_AGENTS,
                    n,
                )
            )
        if not (0 <= present < (1 << n)):
            raise InvalidArg(present, label='Mask out of range for {}'.format(
                n
            ))
        return cls(present, n)

    @classmethod
    def empty(cls, n):
        return cls.checked(0, n)

    @classmethod
    def from_members(cls, members, n):
        present = 0
        for i in members:
            present |= 1 << i
        return cls.checked(present, n)

    @classmethod
    def grand(cls, n):
        return cls.checked((1 << n) - 1, n)

    def has(self, agent):
        return bool(self.present & (1 << agent))

    def size(self):
        return bin(self.present).count('1')

    def members(self):
        return tuple(i for i in range(self.n) if self.present & (1 << i))

    def with_agent(self, agent):
        return self._replace(present=self.present | (1 << agent))

    def without(self, agent):
        return self._replace(present=self.present & ~(1 << agent))


class EvalCounter(object):
    """ Counts transition evaluations. `counterfactual` only counts
        coalition valuations, `transitions` counts every step() call.
    """
    __slots__ = ('transitions', 'counterfactual')

    def __init__(self):
        self.transitions = 0
        self.counterfactual = 0

    def __repr__(self):
        return '{}(transitions={}, counterfactual={})'.format(
            type(self).__name__,
            self.transitions,
            self.counterfactual,
        )

    def add(self, transitions=0, counterfactual=0):
        self.transitions += transitions
        self.counterfactual += counterfactual

    def reset(self):
        self.transitions = 0
        self.counterfactual = 0


def _count(counter, transitions=0, counterfactual=0):
    if counter is not None:
        counter.add(transitions=transitions, counterfactual=counterfactual)


def substitute_joint(state, joint, mask, proxy=RemovalProxy.NoOp, rng=None):
    """ Replace the action of every agent outside `mask` using `proxy`.
        CopyOtherAgent copies the action of a uniformly drawn member, or
        falls back to a no-op for the empty coalition.
    """
    env = environment_for(state.scenario)
    if proxy is not RemovalProxy.NoOp and rng is None:
        raise InvalidArg(proxy.value, label='Removal proxy needs an rng')
    members = mask.members()
    actions = list(joint)
    for agent in range(len(joint)):
        if mask.has(agent):
            continue
        if proxy is RemovalProxy.NoOp or (
                proxy is RemovalProxy.CopyOtherAgent and not members):
            actions[agent] = int(env.noop_action(state, agent))
        elif proxy is RemovalProxy.RandomAction:
            actions[agent] = int(rng.integers(env.n_actions))
        else:
            actions[agent] = int(joint[members[int(rng.integers(len(members)))]])
    return tuple(actions)


def coalition_value(
        state, joint, mask, proxy=RemovalProxy.NoOp, rng=None, counter=None):
    """ Team reward of stepping `state` with the agents outside `mask`
        replaced per `proxy`. `state` is not modified.
    """
    if state.done:
        raise EpisodeFinished()
    if mask.n != len(joint):
        raise InvalidArg(mask, label='Mask does not match {} agents'.format(
            len(joint)
        ))
    outcome = step(state, substitute_joint(state, joint, mask, proxy, rng))
    _count(counter, transitions=1, counterfactual=1)
    return outcome.team_reward


def _noop_value_task(args):
    state, joint, present = args
    return coalition_value(
        state,
        joint,
        CoalitionMask(present, len(joint)),
    )


def coalition_values(
        state, joint, masks, proxy=RemovalProxy.NoOp, rng=None,
        counter=None, pool=None):
    """ coalition_value for several masks, in mask order.
        With a worker pool and the NoOp proxy the masks are valued in
        parallel; the results keep the order of `masks`.
    """
    masks = list(masks)
    if pool is not None and proxy is RemovalProxy.NoOp:
        if state.done:
            raise EpisodeFinished()
        values = pool.map(
            _noop_value_task,
            [(state, joint, m.present) for m in masks],
            chunksize=max(1, len(masks) // 64),
        )
        _count(counter, transitions=len(masks), counterfactual=len(masks))
        return values
    return [
        coalition_value(state, joint, m, proxy, rng, counter)
        for m in masks
    ]


class StepAttribution(NamedTuple):
    t: int
    values: Tuple[float, ...]
    method: Method
    episode: int = 0
    interval: int = 0


def importance_step(
        state, joint, proxy=RemovalProxy.NoOp, rng=None, counter=None,
        pool=None, t=0):
    """ Agent Importance summand for one step: the factual team reward
        minus the team reward with agent i removed, for every agent.
        Costs n + 1 transitions (the factual step and n counterfactuals).
    """
    if state.done:
        raise EpisodeFinished()
    n = len(joint)
    reward = step(state, joint).team_reward
    _count(counter, transitions=1)
    grand = CoalitionMask.grand(n)
    removed = coalition_values(
        state,
        joint,
        [grand.without(i) for i in range(n)],
        proxy=proxy,
        rng=rng,
        counter=counter,
        pool=pool,
    )
    return StepAttribution(
        t=t,
        values=tuple(reward - r for r in removed),
        method=Method.Importance,
    )


@lru_cache(maxsize=MAX_AGENTS + 1)
def shapley_weights(n):
    """ Shapley weights |C|!(n-|C|-1)!/n! indexed by coalition size,
        computed exactly and rounded once to floats.
    """
    fact = [math.factorial(k) for k in range(n + 1)]
    weights = np.array([
        float(Fraction(fact[k] * fact[n - k - 1], fact[n]))
        for k in range(n)
    ])
    weights.flags.writeable = False
    return weights


def _popcounts(masks, n):
    sizes = np.zeros(len(masks), dtype=np.int64)
    for bit in range(n):
        sizes += (masks >> bit) & 1
    return sizes


def shapley_from_values(values, n):
    """ Shapley values from a table of coalition values indexed by mask.
        Marginals are summed with math.fsum in ascending mask order.
    """
    values = np.asarray(values, dtype=np.float64)
    if len(values) != (1 << n):
        raise InvalidArg(
            len(values),
            label='Expecting {} coalition values, got'.format(1 << n),
        )
    weights = shapley_weights(n)
    masks = np.arange(1 << n, dtype=np.int64)
    sizes = _popcounts(masks, n)
    result = []
    for agent in range(n):
        bit = 1 << agent
        without = masks[(masks & bit) == 0]
        terms = weights[sizes[without]] * (values[without | bit] - values[without])
        result.append(math.fsum(terms.tolist()))
    return tuple(result)


def exact_shapley_step(
        state, joint, cap=DEFAULT_SHAPLEY_CAP, proxy=RemovalProxy.NoOp,
        rng=None, counter=None, pool=None, t=0):
    """ Exact Shapley values for one step. Every coalition is valued once
        (2**n counterfactual steps, the grand coalition included).
        Raises TooManyAgents above `cap` agents.
    """
    n = len(joint)
    if n > min(cap, MAX_AGENTS):
        raise TooManyAgents(
            'Exact Shapley values for {} agents exceed the cap of {}.'.format(
                n,
                min(cap, MAX_AGENTS),
            )
        )
    if state.done:
        raise EpisodeFinished()
    values = coalition_values(
        state,
        joint,
        (CoalitionMask(m, n) for m in range(1 << n)),
        proxy=proxy,
        rng=rng,
        counter=counter,
        pool=pool,
    )
    return StepAttribution(
        t=t,
        values=shapley_from_values(values, n),
        method=Method.ExactShapley,
    )


class McShapleyResult(NamedTuple):
    values: Tuple[float, ...]
    stderr: Tuple[float, ...]
    samples: int


def mc_shapley(
        states_with_actions, M, proxy=RemovalProxy.NoOp,
        sampler=Sampler.Permutation, rng=None, exhaustive=False,
        counter=None):
    """ Monte-Carlo Shapley values over a sequence of (state, joint) pairs.
        Each sample is a coalition C per agent i; its marginal is the mean
        over the pairs of v(C + i) - v(C).
            Permutation: C is i's predecessor set in a uniform permutation,
                one permutation serves every agent.
            UniformCoalition: C is a uniform subset of the other agents.
        exhaustive=True enumerates all n! permutations instead of sampling
        (M is ignored), which gives the exact Shapley values.
        Returns McShapleyResult(values, stderr, samples).
    """
    pairs = list(states_with_actions)
    if not pairs:
        raise InvalidArg(pairs, label='Need at least one (state, joint) pair')
    sampler = Sampler.from_str(sampler)
    n = len(pairs[0][1])
    for state, joint in pairs:
        if len(joint) != n:
            raise InvalidArg(joint, label='Expecting {} actions, got'.format(n))
        if state.done:
            raise EpisodeFinished()
    if exhaustive:
        if sampler is not Sampler.Permutation:
            raise InvalidArg(
                sampler.value,
                label='Full enumeration needs the permutation sampler',
            )
        if n > EXHAUSTIVE_CAP:
            raise TooManyAgents(
                'Full enumeration supports up to {} agents, got {}.'.format(
                    EXHAUSTIVE_CAP,
                    n,
                )
            )
    else:
        if M < 1:
            raise InvalidArg(M, label='Need at least one sample, got')
        if rng is None:
            raise InvalidArg(rng, label='Sampling needs an rng, got')

    # Coalition values are deterministic under NoOp, so they are cached.
    caches = [{} for _ in pairs] if proxy is RemovalProxy.NoOp else None

    def value(index, present):
        if caches is not None:
            cached = caches[index].get(present, None)
            if cached is not None:
                return cached
        state, joint = pairs[index]
        val = coalition_value(
            state,
            joint,
            CoalitionMask(present, n),
            proxy=proxy,
            rng=rng,
            counter=counter,
        )
        if caches is not None:
            caches[index][present] = val
        return val

    def marginal(agent, present):
        with_agent = present | (1 << agent)
        return math.fsum(
            value(k, with_agent) - value(k, present)
            for k in range(len(pairs))
        ) / len(pairs)

    def permutation_samples(perms):
        rows = []
        for perm in perms:
            row = [0.0] * n
            present = 0
            for agent in perm:
                row[int(agent)] = marginal(int(agent), present)
                present |= 1 << int(agent)
            rows.append(row)
        return rows

    if exhaustive:
        rows = permutation_samples(itertools.permutations(range(n)))
    elif sampler is Sampler.Permutation:
        rows = permutation_samples(rng.permutation(n) for _ in range(M))
    else:
        rows = []
        for _ in range(M):
            row = []
            for agent in range(n):
                bits = rng.integers(0, 2, size=n)
                present = sum(
                    1 << j for j in range(n)
                    if bits[j] and j != agent
                )
                row.append(marginal(agent, present))
            rows.append(row)

    samples = np.array(rows, dtype=np.float64).reshape(len(rows), n)
    count = len(rows)
    values = tuple(math.fsum(samples[:, i].tolist()) / count for i in range(n))
    if exhaustive or count < 2:
        stderr = (0.0, ) * n
    else:
        stderr = tuple(
            float(np.std(samples[:, i], ddof=1) / math.sqrt(count))
            for i in range(n)
        )
    return McShapleyResult(values=values, stderr=stderr, samples=count)


class AttributionOptions(NamedTuple):
    proxy: RemovalProxy = RemovalProxy.NoOp
    shapley_cap: int = DEFAULT_SHAPLEY_CAP
    mc_samples: int = 1000
    sampler: Sampler = Sampler.Permutation
    seed: int = 0
    workers: int = 1

    @classmethod
    def from_config(cls, config, seed=None):
        return cls(
            proxy=RemovalProxy.from_str(config.proxy),
            shapley_cap=config.shapley_cap,
            mc_samples=config.mc_samples,
            sampler=Sampler.from_str(config.sampler),
            seed=config.root_seed if seed is None else seed,
            workers=config.workers,
        )


class IntervalSummary(NamedTuple):
    """ Interval means for one method: mean over the interval's T steps,
        and the population variance of those means across the team.
    """
    interval: int
    method: Method
    steps: int
    means: Tuple[float, ...]
    variance: float


def _population_variance(values):
    mean = math.fsum(values) / len(values)
    return math.fsum((v - mean) ** 2 for v in values) / len(values)


class AttributionReport(object):
    """ Per-step attribution values for one or more methods and intervals,
        with per-interval summaries.
    """
    __slots__ = ('n_agents', 'steps', 'counter')

    def __init__(self, n_agents, steps=(), counter=None):
        self.n_agents = n_agents
        self.steps = tuple(steps)
        self.counter = counter or EvalCounter()

    def __repr__(self):
        return '{}(n_agents={}, methods={}, intervals={}, steps={})'.format(
            type(self).__name__,
            self.n_agents,
            [m.value for m in self.methods],
            len(self.intervals),
            len(self.steps),
        )

    @classmethod
    def merge(cls, reports):
        """ Combine reports for different intervals of the same team. """
        reports = list(reports)
        if not reports:
            raise InvalidArg(reports, label='No reports to merge')
        n_agents = reports[0].n_agents
        counter = EvalCounter()
        steps = []
        for report in reports:
            if report.n_agents != n_agents:
                raise InvalidArg(
                    report.n_agents,
                    label='Expecting reports for {} agents, got'.format(
                        n_agents
                    ),
                )
            steps.extend(report.steps)
            counter.add(
                transitions=report.counter.transitions,
                counterfactual=report.counter.counterfactual,
            )
        return cls(n_agents, steps=steps, counter=counter)

    @property
    def intervals(self):
        return tuple(sorted({s.interval for s in self.steps}))

    @property
    def methods(self):
        seen = []
        for s in self.steps:
            if s.method not in seen:
                seen.append(s.method)
        return tuple(seen)

    def series(self, method, interval=None):
        """ Step values as an array of shape (T, n_agents). """
        method = Method.from_str(method)
        rows = [
            s.values for s in self.steps
            if s.method is method and (
                interval is None or s.interval == interval
            )
        ]
        return np.array(rows, dtype=np.float64).reshape(
            len(rows),
            self.n_agents,
        )

    def summary(self, method, interval):
        method = Method.from_str(method)
        rows = [
            s.values for s in self.steps
            if s.method is method and s.interval == interval
        ]
        if not rows:
            raise InvalidArg(
                (method.value, interval),
                label='No steps recorded for',
            )
        means = tuple(
            math.fsum(row[agent] for row in rows) / len(rows)
            for agent in range(self.n_agents)
        )
        return IntervalSummary(
            interval=interval,
            method=method,
            steps=len(rows),
            means=means,
            variance=_population_variance(means),
        )

    def summaries(self):
        return [
            self.summary(method, interval)
            for interval in self.intervals
            for method in self.methods
        ]

    def interval_means(self, method):
        """ Interval means as an array of shape (intervals, n_agents). """
        return np.array(
            [self.summary(method, i).means for i in self.intervals],
            dtype=np.float64,
        ).reshape(len(self.intervals), self.n_agents)

    def steps_frame(self):
        return pd.DataFrame(
            [
                (s.interval, s.t, agent, s.method.value, value)
                for s in self.steps
                for agent, value in enumerate(s.values)
            ],
            columns=list(STEP_COLUMNS),
        )

    def summary_frame(self):
        return pd.DataFrame(
            [
                (summ.interval, agent, summ.method.value, mean, summ.variance)
                for summ in self.summaries()
                for agent, mean in enumerate(summ.means)
            ],
            columns=list(SUMMARY_COLUMNS),
        )


def write_report(report, steps_path=None, summary_path=None):
    """ Write the per-step and/or summary CSVs for a report. """
    written = []
    if steps_path:
        written.append(write_csv(steps_path, report.steps_frame(), STEP_COLUMNS))
    if summary_path:
        written.append(
            write_csv(summary_path, report.summary_frame(), SUMMARY_COLUMNS)
        )
    return written


@contextmanager
def worker_pool(workers):
    """ A multiprocessing pool for more than one worker, otherwise None. """
    if workers is None or workers < 2:
        yield None
        return
    pool = multiprocessing.Pool(workers)
    try:
        yield pool
    finally:
        pool.close()
        pool.join()


def attribute_step(
        method, state, joint, outcome, options, rng, counter=None,
        pool=None):
    """ Per-agent values for one method at one step. """
    if method is Method.Individual:
        return tuple(outcome.individual_rewards)
    if method is Method.Importance:
        result = importance_step(
            state,
            joint,
            proxy=options.proxy,
            rng=rng,
            counter=counter,
            pool=pool,
        )
    elif method is Method.ExactShapley:
        result = exact_shapley_step(
            state,
            joint,
            cap=options.shapley_cap,
            proxy=options.proxy,
            rng=rng,
            counter=counter,
            pool=pool,
        )
    else:
        return mc_shapley(
            [(state, joint)],
            options.mc_samples,
            proxy=options.proxy,
            sampler=options.sampler,
            rng=rng,
            counter=counter,
        ).values
    return result.values


def attribute_rollout(
        scenario, policies, episodes, methods=(Method.Importance, ),
        options=None, interval=0):
    """ Roll out `episodes` evaluation episodes and attribute every step
        with every method in `methods`, on the same trajectories.
        Episodes are seeded from (options.seed, interval), so every interval
        sees its own episodes and reruns are reproducible.
    """
    if episodes < 1:
        raise InvalidArg(episodes, label='Need at least one episode, got')
    options = options or AttributionOptions()
    methods = tuple(Method.from_str(m) for m in methods)
    n = environment_for(scenario).n_agents
    if n > MAX_AGENTS:
        raise TooManyAgents(
            'Attribution supports up to {} agents, got {}.'.format(
                MAX_AGENTS,
                n,
            )
        )
    rng = derive_rng(options.seed, 'attribution', interval)
    counter = EvalCounter()
    steps = []
    t = 0
    run_seed = derive_seed(options.seed, 'interval', interval)
    with worker_pool(options.workers) as pool:
        for episode, epstep in run_episodes(
                scenario, policies, episodes, run_seed):
            for method in methods:
                values = attribute_step(
                    method,
                    epstep.state,
                    epstep.joint,
                    epstep.outcome,
                    options,
                    rng,
                    counter=counter,
                    pool=pool,
                )
                steps.append(StepAttribution(
                    t=t,
                    values=tuple(float(v) for v in values),
                    method=method,
                    episode=episode,
                    interval=interval,
                ))
            t += 1
    debug('Interval {}: {} steps, {} counterfactual evaluations.'.format(
        interval,
        t,
        counter.counterfactual,
    ))
    return AttributionReport(n, steps=steps, counter=counter)


def attribute_interval(
        env, policies, episodes, method=Method.Importance, options=None,
        interval=0):
    """ Attribute one evaluation interval with a single method.
        `env` is an Environment or a scenario.
    """
    scenario = getattr(env, 'scenario', env)
    return attribute_rollout(
        scenario,
        policies,
        episodes,
        methods=(method, ),
        options=options,
        interval=interval,
    )
