#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit/evaluation.py
    Validation statistics: correlation and ranking agreement between
    attribution metrics, and the aggregate score suite (median, IQM, mean,
    optimality gap, performance profiles, probability of improvement, and
    the absolute metric).

    Scores are held in a RunMatrix of shape (runs, tasks) or
    (runs, tasks, intervals), with normalization bounds per task.

    The MIT License (MIT)
"""
import itertools
import math
from typing import NamedTuple

import numpy as np
import pandas as pd

from .attribution import Method
from .base import (
    DegenerateSeries,
    InvalidArg,
    MissingSnapshot,
)
from .config import (
    debug,
    derive_rng,
)
from .policy import evaluate_policies

__all__ = [
    'AGGREGATE_COLUMNS',
    'AGREEMENT_COLUMNS',
    'CORRELATION_COLUMNS',
    'PROFILE_COLUMNS',
    'Estimate',
    'RunMatrix',
    'absolute_metric',
    'aggregate',
    'aggregate_frame',
    'agreement_table',
    'correlation_table',
    'importance_variance',
    'iqm',
    'normalize_scores',
    'optimality_gap',
    'pearson',
    'performance_profile',
    'probability_of_improvement',
    'rank_agreement_by_agent',
    'rank_agreement_rate',
    'rank_vector',
    'sample_efficiency_curve',
]

DEFAULT_TIE_TOLERANCE = 1e-9
DEFAULT_RESAMPLES = 2000

CORRELATION_COLUMNS = ('metric_a', 'metric_b', 'agent', 'r')
AGREEMENT_COLUMNS = ('pair', 'agent', 'rate')
PROFILE_COLUMNS = ('tau', 'fraction')
AGGREGATE_COLUMNS = ('statistic', 'value', 'ci_lo', 'ci_hi')


def _series(values, name='series'):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArg(arr.shape, label='Expecting a 1-d {}, got'.format(
            name
        ))
    if not np.all(np.isfinite(arr)):
        raise InvalidArg(name, label='Non-finite values in')
    return arr


def pearson(x, y):
    """ Pearson correlation coefficient of two equal length series.
        Raises DegenerateSeries when either series is constant.
    """
    x = _series(x, 'x')
    y = _series(y, 'y')
    if len(x) != len(y) or len(x) < 2:
        raise InvalidArg(
            (len(x), len(y)),
            label='Expecting equal lengths of 2 or more, got',
        )
    dx = x - math.fsum(x.tolist()) / len(x)
    dy = y - math.fsum(y.tolist()) / len(y)
    sxx = math.fsum((dx * dx).tolist())
    syy = math.fsum((dy * dy).tolist())
    if sxx == 0 or syy == 0:
        raise DegenerateSeries()
    sxy = math.fsum((dx * dy).tolist())
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def rank_vector(values, eps=DEFAULT_TIE_TOLERANCE):
    """ Dense ranks (0 is the highest value), with values within `eps` of a
        tie group's highest value sharing its rank.
    """
    values = [float(v) for v in values]
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    ranks = [0] * len(values)
    rank = -1
    leader = None
    for i in order:
        if leader is None or values[i] < leader - eps:
            rank += 1
            leader = values[i]
        ranks[i] = rank
    return tuple(ranks)


def _interval_rows(series, name):
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InvalidArg(
            arr.shape,
            label='Expecting {} as (intervals, agents) with 1+ interval'.format(
                name
            ),
        )
    return arr


def rank_agreement_rate(metric, truth, eps=DEFAULT_TIE_TOLERANCE):
    """ Fraction of intervals where the tie-aware rank vectors of `metric`
        and `truth` (both shaped (intervals, agents)) are identical.
    """
    metric = _interval_rows(metric, 'metric')
    truth = _interval_rows(truth, 'truth')
    if metric.shape != truth.shape:
        raise InvalidArg(
            (metric.shape, truth.shape),
            label='Metric and truth shapes differ',
        )
    matches = sum(
        rank_vector(m, eps) == rank_vector(t, eps)
        for m, t in zip(metric, truth)
    )
    return matches / metric.shape[0]


def rank_agreement_by_agent(metric, truth, eps=DEFAULT_TIE_TOLERANCE):
    """ Per agent, the fraction of intervals where its rank under `metric`
        equals its rank under `truth`.
    """
    metric = _interval_rows(metric, 'metric')
    truth = _interval_rows(truth, 'truth')
    if metric.shape != truth.shape:
        raise InvalidArg(
            (metric.shape, truth.shape),
            label='Metric and truth shapes differ',
        )
    hits = np.zeros(metric.shape[1])
    for m, t in zip(metric, truth):
        hits += np.equal(rank_vector(m, eps), rank_vector(t, eps))
    return tuple(float(h) / metric.shape[0] for h in hits)


def normalize_scores(scores, lo, hi):
    """ Map scores from [lo, hi] to [0, 1], clamping outliers. """
    if not hi > lo:
        raise InvalidArg((lo, hi), label='Invalid normalization bounds')
    arr = (np.asarray(scores, dtype=np.float64) - lo) / (hi - lo)
    return np.clip(arr, 0.0, 1.0)


class RunMatrix(object):
    """ Returns per (run, task) or (run, task, interval), with per-task
        normalization bounds (lo, hi).
    """
    __slots__ = ('scores', 'tasks', 'bounds')

    def __init__(self, scores, tasks=None, bounds=None):
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores.reshape(-1, 1)
        if scores.ndim not in (2, 3) or scores.shape[0] < 1 or (
                scores.shape[1] < 1):
            raise InvalidArg(
                scores.shape,
                label='Expecting (runs, tasks[, intervals]) scores, got',
            )
        if not np.all(np.isfinite(scores)):
            raise InvalidArg('scores', label='Non-finite values in')
        n_tasks = scores.shape[1]
        self.scores = scores
        self.tasks = tuple(
            tasks or ('task{}'.format(i) for i in range(n_tasks))
        )
        if len(self.tasks) != n_tasks:
            raise InvalidArg(self.tasks, label='Expecting {} task names'.format(
                n_tasks
            ))
        # Foraging returns are in [0, 1] by construction.
        self.bounds = tuple(bounds or ((0.0, 1.0), ) * n_tasks)
        if len(self.bounds) != n_tasks:
            raise InvalidArg(self.bounds, label='Expecting {} bounds'.format(
                n_tasks
            ))

    def __repr__(self):
        return '{}(shape={}, tasks={})'.format(
            type(self).__name__,
            self.scores.shape,
            self.tasks,
        )

    @classmethod
    def with_empirical_bounds(cls, scores, tasks=None):
        """ Bounds of [0, max score per task], for tasks without a known
            maximum return (the warehouse).
        """
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores.reshape(-1, 1)
        axes = tuple(i for i in range(scores.ndim) if i != 1)
        highs = scores.max(axis=axes)
        bounds = tuple(
            (0.0, float(hi) if hi > 0 else 1.0)
            for hi in highs
        )
        return cls(scores, tasks=tasks, bounds=bounds)

    @property
    def n_runs(self):
        return self.scores.shape[0]

    @property
    def n_tasks(self):
        return self.scores.shape[1]

    def at_interval(self, interval):
        if self.scores.ndim != 3:
            raise InvalidArg(self.scores.shape, label='No intervals in')
        return RunMatrix(
            self.scores[:, :, interval],
            tasks=self.tasks,
            bounds=self.bounds,
        )

    def normalized(self):
        out = np.empty_like(self.scores)
        for task, (lo, hi) in enumerate(self.bounds):
            out[:, task] = normalize_scores(self.scores[:, task], lo, hi)
        return out


def _as_matrix(matrix):
    return matrix if isinstance(matrix, RunMatrix) else RunMatrix(matrix)


def iqm(values):
    """ Interquartile mean: drop the lowest and highest floor(n/4) values
        by count, then take the mean of the rest.
    """
    arr = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if arr.size == 0:
        raise InvalidArg(arr.size, label='Need at least one value, got')
    trim = arr.size // 4
    kept = arr[trim:arr.size - trim]
    return math.fsum(kept.tolist()) / kept.size


def _mean(values):
    arr = np.asarray(values, dtype=np.float64).ravel()
    return math.fsum(arr.tolist()) / arr.size


def _median(values):
    return float(np.median(np.asarray(values, dtype=np.float64)))


def optimality_gap(values):
    """ Mean shortfall of normalized scores below 1 (scores above 1 count
        as 0).
    """
    arr = np.asarray(values, dtype=np.float64)
    return _mean(np.maximum(1.0 - arr, 0.0))


STATISTICS = (
    ('median', _median),
    ('iqm', iqm),
    ('mean', _mean),
    ('optimality_gap', optimality_gap),
)


class Estimate(NamedTuple):
    value: float
    ci_lo: float
    ci_hi: float


def _stratified_resample(scores, rng):
    """ Resample runs with replacement, independently for every task. """
    runs, tasks = scores.shape[:2]
    picks = rng.integers(0, runs, size=(runs, tasks))
    return scores[picks, np.arange(tasks)]


def aggregate(
        matrix, resamples=DEFAULT_RESAMPLES, confidence=0.95, seed=0,
        normalize=True):
    """ Median, IQM, mean and optimality gap of a (runs, tasks) matrix,
        each with a stratified bootstrap confidence interval.
        Returns {statistic name: Estimate}.
    """
    matrix = _as_matrix(matrix)
    if matrix.scores.ndim != 2:
        raise InvalidArg(
            matrix.scores.shape,
            label='Expecting (runs, tasks) scores, got',
        )
    if not (0.0 < confidence < 1.0):
        raise InvalidArg(confidence, label='Invalid confidence level')
    scores = matrix.normalized() if normalize else matrix.scores
    rng = derive_rng(seed, 'bootstrap')
    boot = {name: np.empty(resamples) for name, _ in STATISTICS}
    for b in range(resamples):
        sample = _stratified_resample(scores, rng)
        for name, func in STATISTICS:
            boot[name][b] = func(sample)
    tail = (1.0 - confidence) / 2.0 * 100.0
    result = {}
    for name, func in STATISTICS:
        value = func(scores)
        if resamples:
            lo, hi = np.percentile(boot[name], [tail, 100.0 - tail])
        else:
            lo = hi = value
        result[name] = Estimate(value=value, ci_lo=float(lo), ci_hi=float(hi))
    debug('Aggregated {} scores over {} resamples.'.format(
        scores.size,
        resamples,
    ))
    return result


def aggregate_frame(estimates):
    """ A {statistic, value, ci_lo, ci_hi} frame from aggregate(). """
    return pd.DataFrame(
        [
            (name, est.value, est.ci_lo, est.ci_hi)
            for name, est in estimates.items()
        ],
        columns=list(AGGREGATE_COLUMNS),
    )


def performance_profile(matrix, taus, normalize=True):
    """ For every tau, the fraction of (run, task) scores above tau. """
    matrix = _as_matrix(matrix)
    scores = matrix.normalized() if normalize else matrix.scores
    flat = scores.ravel()
    taus = np.asarray(taus, dtype=np.float64)
    if np.any((taus < 0) | (taus > 1)):
        raise InvalidArg(taus.tolist(), label='Tau values must be in [0, 1]')
    return np.array([np.count_nonzero(flat > tau) / flat.size for tau in taus])


def probability_of_improvement(matrix_x, matrix_y):
    """ Probability that X beats Y on a task: the mean over tasks of the
        mean over all run pairs of [x > y], with ties counting 0.5.
    """
    x = _as_matrix(matrix_x).scores
    y = _as_matrix(matrix_y).scores
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise InvalidArg(
            (x.shape, y.shape),
            label='Expecting (runs, tasks) matrices with matching tasks',
        )
    per_task = []
    for task in range(x.shape[1]):
        xs = x[:, task][:, None]
        ys = y[:, task][None, :]
        wins = (xs > ys).astype(np.float64) + 0.5 * (xs == ys)
        per_task.append(math.fsum(wins.ravel().tolist()) / wins.size)
    return math.fsum(per_task) / len(per_task)


def absolute_metric(intervals, scenario, multiplier=10, seed=0):
    """ Re-evaluate the policy snapshot of the best interval (the earliest
        one on ties) for `multiplier` times its evaluation episodes.
        Returns the mean return.
    """
    intervals = list(intervals)
    if not intervals:
        raise InvalidArg(intervals, label='Need at least one interval, got')
    if multiplier < 1:
        raise InvalidArg(multiplier, label='Invalid episode multiplier')
    best = intervals[0]
    for record in intervals[1:]:
        if record.mean_return > best.mean_return:
            best = record
    if best.snapshot is None:
        raise MissingSnapshot(
            'No policy snapshot stored for interval {}.'.format(best.index)
        )
    debug('Best interval: {} (mean return {})'.format(
        best.index,
        best.mean_return,
    ))
    return evaluate_policies(
        scenario,
        best.snapshot,
        multiplier * best.episodes,
        seed,
    )


def importance_variance(report, method=Method.Importance):
    """ Population variance across agents of the interval-mean values,
        for every interval in the report.
    """
    if report.n_agents < 2:
        raise InvalidArg(
            report.n_agents,
            label='Variance across the team needs 2 or more agents, got',
        )
    return tuple(
        report.summary(method, interval).variance
        for interval in report.intervals
    )


def sample_efficiency_curve(
        matrix, resamples=DEFAULT_RESAMPLES, confidence=0.95, seed=0):
    """ Mean normalized return at every evaluation interval of a
        (runs, tasks, intervals) matrix, with stratified bootstrap CIs.
        Returns a frame of {interval, mean, ci_lo, ci_hi}.
    """
    matrix = _as_matrix(matrix)
    if matrix.scores.ndim != 3:
        raise InvalidArg(
            matrix.scores.shape,
            label='Expecting (runs, tasks, intervals) scores, got',
        )
    rows = []
    for interval in range(matrix.scores.shape[2]):
        est = aggregate(
            matrix.at_interval(interval),
            resamples=resamples,
            confidence=confidence,
            seed=seed + interval,
        )['mean']
        rows.append((interval, est.value, est.ci_lo, est.ci_hi))
    return pd.DataFrame(rows, columns=['interval', 'mean', 'ci_lo', 'ci_hi'])


def correlation_table(series_by_metric, metrics=None):
    """ Per-agent Pearson r between every pair of metrics (a metric with
        itself included). Each series is shaped (intervals, agents).
        A constant series gives r = NaN for that agent, so one degenerate
        agent does not stop the table.
    """
    metrics = list(metrics or series_by_metric)
    arrays = {
        m: _interval_rows(series_by_metric[m], m)
        for m in metrics
    }
    rows = []
    for a, b in itertools.combinations_with_replacement(metrics, 2):
        xa, xb = arrays[a], arrays[b]
        if xa.shape != xb.shape:
            raise InvalidArg(
                (a, b),
                label='Metric shapes differ for',
            )
        for agent in range(xa.shape[1]):
            try:
                r = pearson(xa[:, agent], xb[:, agent])
            except DegenerateSeries:
                debug('Degenerate series for agent {}: {} ~ {}'.format(
                    agent,
                    a,
                    b,
                ))
                r = float('nan')
            except InvalidArg:
                r = float('nan')
            rows.append((a, b, agent, r))
    return pd.DataFrame(rows, columns=list(CORRELATION_COLUMNS))


def agreement_table(
        series_by_metric, truth='individual', metrics=None,
        eps=DEFAULT_TIE_TOLERANCE):
    """ Ranking agreement of every metric against `truth`, per agent and
        for the whole ranking (agent 'all').
    """
    metrics = [
        m for m in (metrics or series_by_metric)
        if m != truth
    ]
    truth_rows = series_by_metric[truth]
    rows = []
    for metric in metrics:
        pair = '{}~{}'.format(metric, truth)
        rates = rank_agreement_by_agent(
            series_by_metric[metric],
            truth_rows,
            eps=eps,
        )
        rows.extend((pair, str(agent), rate) for agent, rate in enumerate(rates))
        rows.append((
            pair,
            'all',
            rank_agreement_rate(series_by_metric[metric], truth_rows, eps=eps),
        ))
    return pd.DataFrame(rows, columns=list(AGREEMENT_COLUMNS))
