#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/bench.py
    Scaling benchmark: time per environment step for a plain transition,
    Agent Importance, and exact Shapley values, across team sizes.

    Every timed step is also counted, so the number of counterfactual
    evaluations per step is reported exactly, next to the noisy timings.

    The MIT License (MIT)
"""
import math
from enum import Enum
from timeit import Timer
from typing import (
    NamedTuple,
    Optional,
)

import numpy as np

from .attribution import (
    EvalCounter,
    exact_shapley_step,
    importance_step,
    worker_pool,
)
from .base import (
    AgentCreditError,
    InvalidArg,
    TooManyAgents,
    environment_for,
    reset,
    step,
)
from .config import (
    debug,
    derive_rng,
    derive_seed,
)
from .lbf import SCALABILITY_SCENARIOS
from .output import write_csv
from .policy import (
    PolicyKind,
    joint_action,
    policy_set,
)
from .scenarios import (
    load_scenario,
    scenario_name,
)

__all__ = [
    'BENCH_COLUMNS',
    'BenchMethod',
    'BenchResult',
    'expected_evals',
    'run_scaling',
    'sample_steps',
    'speedup',
    'write_results',
]

BENCH_COLUMNS = (
    'n_agents',
    'method',
    'mean_s_per_step',
    'std_s_per_step',
    'evals_per_step',
    'parallel',
)
DEFAULT_SHAPLEY_CAP = 10


class BenchMethod(Enum):
    Baseline = 'baseline'
    Importance = 'importance'
    ExactShapley = 'shapley'

    @classmethod
    def from_str(cls, s):
        if isinstance(s, cls):
            return s
        for method in cls:
            if s in (method.value, method.name):
                return method
        raise InvalidArg(
            s,
            label='Expecting one of {}, got'.format(
                ', '.join(m.value for m in cls)
            ),
        )


class BenchResult(NamedTuple):
    """ Timing for one (scenario, method). A skipped result has no timing
        (NaN) and keeps the expected evaluation count.
    """
    n_agents: int
    method: BenchMethod
    mean_s_per_step: float
    std_s_per_step: float
    evals_per_step: int
    parallel: bool = False
    scenario: str = ''
    skipped: bool = False

    def as_row(self):
        return (
            self.n_agents,
            'skipped:{}'.format(self.method.value) if self.skipped
            else self.method.value,
            self.mean_s_per_step,
            self.std_s_per_step,
            self.evals_per_step,
            self.parallel,
        )


def expected_evals(method, n_agents):
    """ Counterfactual evaluations per step for a method. """
    if method is BenchMethod.Baseline:
        return 0
    if method is BenchMethod.Importance:
        return n_agents
    return 2 ** n_agents


def sample_steps(scenario, steps, seed):
    """ (state, joint) pairs visited by random untrained policies.
        Finished episodes are reset with the next derived seed.
    """
    env = environment_for(scenario)
    policies = policy_set(PolicyKind.Random, env.n_agents, env.n_actions)
    rng = derive_rng(seed, 'policy')
    episode = 0
    state = reset(scenario, derive_seed(seed, 'reset', episode))
    pairs = []
    while len(pairs) < steps:
        if state.done:
            episode += 1
            state = reset(scenario, derive_seed(seed, 'reset', episode))
        joint = joint_action(policies, state, rng)
        pairs.append((state, joint))
        state = step(state, joint).next_state
    return pairs


def _timed_call(method, pairs, counter, shapley_cap, pool):
    if method is BenchMethod.Baseline:
        def run():
            for state, joint in pairs:
                step(state, joint)
    elif method is BenchMethod.Importance:
        def run():
            for state, joint in pairs:
                importance_step(state, joint, counter=counter, pool=pool)
    else:
        def run():
            for state, joint in pairs:
                exact_shapley_step(
                    state,
                    joint,
                    cap=shapley_cap,
                    counter=counter,
                    pool=pool,
                )
    return run


def run_scaling(
        scenarios=SCALABILITY_SCENARIOS, methods=tuple(BenchMethod),
        reps=3, steps_per_rep=100, shapley_cap=DEFAULT_SHAPLEY_CAP, seed=0,
        parallel=False, workers=None, force=False):
    """ Time every method on every scenario.
        Each repetition samples `steps_per_rep` states with random policies
        (not timed), then times the method over those states. Results hold
        the mean and standard deviation of seconds per step over `reps`.
        ExactShapley above `shapley_cap` agents is reported as skipped,
        unless `force` is set, in which case TooManyAgents is raised.
    """
    if reps < 1 or steps_per_rep < 1:
        raise InvalidArg(
            (reps, steps_per_rep),
            label='Need 1+ repetitions and 1+ steps, got',
        )
    methods = [BenchMethod.from_str(m) for m in methods]
    results = []
    with worker_pool(workers if parallel else None) as pool:
        for scenario_index, scenario in enumerate(scenarios):
            scenario = load_scenario(scenario)
            name = scenario_name(scenario)
            n = environment_for(scenario).n_agents
            samples = [
                sample_steps(
                    scenario,
                    steps_per_rep,
                    derive_seed(seed, 'bench', scenario_index * reps + rep),
                )
                for rep in range(reps)
            ]
            for method in methods:
                results.append(_bench_method(
                    method,
                    name,
                    n,
                    samples,
                    shapley_cap,
                    pool,
                    force,
                ))
    return results


def _bench_method(method, name, n, samples, shapley_cap, pool, force):
    expected = expected_evals(method, n)
    parallel = pool is not None and method is not BenchMethod.Baseline
    if method is BenchMethod.ExactShapley and n > shapley_cap:
        if force:
            raise TooManyAgents(
                'Exact Shapley values for {} agents exceed the cap of '
                '{}.'.format(n, shapley_cap)
            )
        debug('Skipping {} for {} ({} agents).'.format(
            method.value,
            name,
            n,
        ))
        return BenchResult(
            n_agents=n,
            method=method,
            mean_s_per_step=math.nan,
            std_s_per_step=math.nan,
            evals_per_step=expected,
            parallel=parallel,
            scenario=name,
            skipped=True,
        )
    per_step = []
    for pairs in samples:
        counter = EvalCounter()
        timer = Timer(_timed_call(
            method,
            pairs,
            counter,
            shapley_cap,
            pool,
        ))
        per_step.append(timer.timeit(number=1) / len(pairs))
        counted = counter.counterfactual / len(pairs)
        if counted != expected:
            raise AgentCreditError(
                '{} on {}: counted {} evaluations per step, expected {}.'.format(
                    method.value,
                    name,
                    counted,
                    expected,
                )
            )
    times = np.array(per_step)
    debug('{:<28} {:<10} {:.6f}s/step'.format(
        name,
        method.value,
        float(times.mean()),
    ))
    return BenchResult(
        n_agents=n,
        method=method,
        mean_s_per_step=float(times.mean()),
        std_s_per_step=float(times.std()),
        evals_per_step=expected,
        parallel=parallel,
        scenario=name,
    )


def write_results(path, results):
    return write_csv(path, [r.as_row() for r in results], BENCH_COLUMNS)


def speedup(results, n_agents, slow=BenchMethod.ExactShapley,
            fast=BenchMethod.Importance) -> Optional[float]:
    """ Ratio of mean seconds per step, slow / fast, for a team size. """
    by_method = {
        r.method: r for r in results
        if r.n_agents == n_agents and not r.skipped
    }
    if slow not in by_method or fast not in by_method:
        return None
    return by_method[slow].mean_s_per_step / by_method[fast].mean_s_per_step
