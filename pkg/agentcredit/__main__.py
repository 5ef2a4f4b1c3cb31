#!/usr/bin/env python3
# -*- coding: utf-8 -*-

""" agentcredit.__main__.py
    Command line tool for agentcredit: simulate episodes, train tabular
    learners, attribute team rewards to agents, validate the attribution
    metrics against each other, and benchmark their cost.
    Example:
        python3 -m agentcredit attribute -s Foraging-8x8-2p-2f -p greedy
        # or, with a config file:
        agentcredit correlate --config experiment.ini --seed 0,1,2

    The MIT License (MIT)
"""

import glob
import os
import sys
import traceback
from contextlib import contextmanager, suppress
from multiprocessing import Pool

import pandas as pd

from colr import (
    AnimatedProgress,
    Colr as C,
)

from .attribution import (
    AttributionOptions,
    AttributionReport,
    Method,
    attribute_rollout,
    write_report,
)
from .base import (
    __version__,
    AgentCreditError,
    InvalidArg,
)
from .bench import (
    run_scaling,
    speedup,
    write_results,
)
from .config import (
    FIELDS,
    build_config,
    debug,
    derive_seed,
    enable_debug,
)
from .evaluation import (
    AGGREGATE_COLUMNS,
    AGREEMENT_COLUMNS,
    CORRELATION_COLUMNS,
    PROFILE_COLUMNS,
    RunMatrix,
    absolute_metric,
    aggregate,
    aggregate_frame,
    agreement_table,
    correlation_table,
    importance_variance,
    performance_profile,
)
from .output import write_csv
from .policy import (
    TrainConfig,
    parse_policy_spec,
    save_policies,
    train_iql,
)
from .rollout import (
    run_episodes,
    write_trace,
)
from .scenarios import (
    is_lbf,
    load_environment,
    load_scenario,
    scenario_name,
)

try:
    from colr import docopt
except ImportError as eximp:
    print('\n'.join((
        'Import error: {}',
        '\nThe agentcredit tool requires docopt to parse command line args.',
        'You can install it using pip:',
        '    pip install docopt'
    )).format(eximp))
    sys.exit(1)

NAME = 'agentcredit'
VERSIONSTR = '{} v. {}'.format(NAME, __version__)
SCRIPT = 'agentcredit'
SCRIPTDIR = os.path.abspath(sys.path[0])

USAGESTR = """{versionstr}
    Usage:
        {script} -h | -v
        {script} simulate [options] [--show]
        {script} train [options]
        {script} attribute [options]
        {script} correlate [options]
        {script} bench [options] [--parallel] [--force]
        {script} report [options] [RUN_DIR...]

    Options:
        RUN_DIR                      : Output directories to merge.
                                       Default: the --out directory
        -c file,--config file        : Config file with `key = value` lines
                                       (or a .json file). Flags override it.
        -D,--debug                   : Debug mode, print more information
                                       while running, or on errors.
        -e num,--episodes num        : Evaluation episodes per interval.
                                       Default: 32
        -h,--help                    : Show this help message.
        -i num,--intervals num       : Evaluation intervals.
                                       Default: 201
        -m name,--method name        : Attribution method:
                                       importance, shapley, mc-shapley.
                                       Default: importance
        -o dir,--out dir             : Output directory.
                                       Default: agentcredit_out
        -p spec,--policy spec        : Policies: random, greedy, noop, iql,
                                       one name per agent (greedy,noop),
                                       or a policy file.
                                       Default: greedy
        -P name,--proxy name         : Removal proxy: noop, random, copy.
                                       Default: noop
        -s name,--scenario name      : Scenario name, like
                                       Foraging-8x8-2p-2f or rware-tiny-2ag.
        -S seeds,--seed seeds        : Root seed, or comma separated seeds
                                       for several runs.
                                       Default: 0
        -v,--version                 : Show version.
        -w num,--workers num         : Worker processes for runs and
                                       counterfactual evaluation.
                                       Default: 1
        --anneal-episodes num        : Episodes to anneal epsilon over.
        --bench-methods names        : Bench methods, comma separated:
                                       baseline, importance, shapley.
        --bench-reps num             : Bench repetitions. Default: 3
        --bench-scenarios names      : Bench scenarios, comma separated.
                                       Default: the scalability family
        --bench-shapley-cap num      : Skip exact Shapley above this many
                                       agents. Default: 10
        --bench-steps num            : Timed steps per repetition.
                                       Default: 100
        --discount num               : Q-learning discount. Default: 0.95
        --epsilon-end num            : Final exploration rate.
        --epsilon-start num          : Initial exploration rate.
        --eval-epsilon num           : Exploration rate of trained policies.
        --force                      : Fail instead of skipping exact
                                       Shapley above the cap.
        --learning-rate num          : Q-learning rate. Default: 0.1
        --max-steps num              : Episode step cap.
        --mc-samples num             : MC-Shapley samples. Default: 1000
        --parallel                   : Bench with the counterfactual pool.
        --resamples num              : Bootstrap resamples. Default: 2000
        --reward-rule rule           : Foraging reward rule: proportional,
                                       paper_literal (alias: inverse_level).
        --sampler name               : MC-Shapley sampler: permutation,
                                       uniform.
        --shapley-cap num            : Maximum agents for exact Shapley.
                                       Default: 20
        --show                       : Print the first episode as text.
        --tie-tolerance eps          : Ranking tie tolerance. Default: 1e-9
        --train-episodes num         : Training episodes. Default: 20000
        --view num                   : Sight range of tabular learners.

    Every option can also be set in a config file, using the long option
    name with underscores (train_episodes = 100).
    Exit status is 2 for argument and config errors, 3 for other errors.
""".format(script=SCRIPT, versionstr=VERSIONSTR)  # noqa

DEBUG = False

# Config keys that do not map to a `--<key>` flag.
FLAG_NAMES = {
    'seeds': '--seed',
    'bench_parallel': '--parallel',
}


def main(argd=None):
    """ Main entry point, expects docopt arg dict as argd. """
    global DEBUG

    # The argd parameter for main() is for testing purposes only.
    argd = argd or docopt(
        USAGESTR,
        version=VERSIONSTR,
        script=SCRIPT,
        colors={
            'header': {'fore': 'yellow'},
            'script': {'fore': 'lightblue', 'style': 'bright'},
            'version': {'fore': 'lightblue'},
        }
    )
    DEBUG = bool(argd.get('--debug', False))
    enable_debug(DEBUG)

    config = build_config(
        cli=config_args(argd),
        path=argd.get('--config', None),
    )
    debug('Config: {!r}'.format(config))
    for cmdname, func in COMMANDS.items():
        if argd.get(cmdname, False):
            return func(config, argd)
    raise InvalidArg(argd, label='No command given')


def config_args(argd):
    """ Map docopt flags to raw config values (None when not given). """
    args = {}
    for key in FIELDS:
        flag = FLAG_NAMES.get(key, '--{}'.format(key.replace('_', '-')))
        val = argd.get(flag, None)
        if val is False:
            val = None
        args[key] = val
    return args


@contextmanager
def progress(text):
    """ A spinner on stderr while a long command runs. """
    if DEBUG or not sys.stderr.isatty():
        yield
        return
    with AnimatedProgress(text, show_time=True, file=sys.stderr):
        yield


def run_pool(func, config):
    """ Call func(config, index, seed) for every seed, in a bounded pool
        when there are several seeds and workers.
        Results are returned in seed order.
    """
    tasks = [(config, i, seed) for i, seed in enumerate(config.seeds)]
    workers = min(config.workers, len(tasks))
    if workers < 2:
        return [func(*task) for task in tasks]
    # Pool workers cannot start their own pools.
    tasks = [
        (config._replace(workers=1), i, seed)
        for _, i, seed in tasks
    ]
    with Pool(workers) as pool:
        return pool.starmap(func, tasks)


def out_path(config, fmt, **kwargs):
    return os.path.join(config.out, fmt.format(**kwargs))


def scenario_for(config):
    return load_scenario(
        config.scenario,
        reward_rule=config.reward_rule,
        max_steps=config.max_steps,
    )


def trained_spec(spec):
    return spec.strip().lower() in ('iql', 'tabular-q')


def train_config(config, seed):
    return TrainConfig.from_config(
        config,
        seed=seed,
        eval_intervals=config.intervals,
    )


def interval_policies(config, scenario, seed):
    """ One policy set per evaluation interval. Trained policies use the
        snapshot recorded at each interval, scripted ones are fixed.
    """
    if trained_spec(config.policy):
        result = train_iql(scenario, train_config(config, seed))
        return [record.snapshot for record in result.intervals]
    policies = parse_policy_spec(config.policy, scenario)
    return [policies] * config.intervals


def cmd_simulate(config, argd):
    """ Roll out episodes and write one trace_v1 file per seed. """
    paths = run_pool(simulate_run, config)
    if argd.get('--show', False) and config.episodes:
        show_episode(config)
    for path in paths:
        print(path)
    return 0


def simulate_run(config, index, seed):
    scenario = scenario_for(config)
    if trained_spec(config.policy):
        policies = train_iql(scenario, train_config(config, seed)).policies
    else:
        policies = parse_policy_spec(config.policy, scenario)
    return write_trace(
        out_path(config, 'trace_seed{seed}.jsonl', seed=seed),
        scenario,
        policies,
        config.episodes,
        seed,
        policy_spec=config.policy,
    )


def show_episode(config):
    """ Print the first episode of the first seed as text grids. """
    env = load_environment(
        config.scenario,
        reward_rule=config.reward_rule,
        max_steps=config.max_steps,
    )
    seed = config.root_seed
    if trained_spec(config.policy):
        policies = train_iql(
            env.scenario,
            train_config(config, seed),
        ).policies
    else:
        policies = parse_policy_spec(config.policy, env.scenario)
    for episode, epstep in run_episodes(env.scenario, policies, 1, seed):
        print(C('t={} actions={}'.format(epstep.t, list(epstep.joint)), 'cyan'))
        print(env.render_text(epstep.state))
        if epstep.outcome.done:
            print(C('done, team reward {}'.format(
                epstep.outcome.team_reward
            ), 'green'))
            print(env.render_text(epstep.outcome.next_state))


def cmd_train(config, argd):
    """ Train tabular IQL for every seed. """
    with progress('Training {} ({} seeds)...'.format(
            config.scenario,
            len(config.seeds))):
        rows = run_pool(train_run, config)
    write_csv(
        out_path(config, 'train_summary.csv'),
        rows,
        TRAIN_SUMMARY_COLUMNS,
    )
    for row in rows:
        print('seed {}: last-100 mean return {:.4f}, absolute {:.4f}'.format(
            row[0],
            row[1],
            row[4],
        ))
    return 0


TRAIN_SUMMARY_COLUMNS = (
    'seed',
    'final_mean_return',
    'best_interval',
    'best_mean_return',
    'absolute_metric',
)


def train_run(config, index, seed):
    scenario = scenario_for(config)
    result = train_iql(scenario, train_config(config, seed))
    save_policies(
        out_path(config, 'policy_seed{seed}.txt', seed=seed),
        result.policies,
        scenario_name=scenario_name(scenario),
        seed=seed,
    )
    write_csv(
        out_path(config, 'learning_curve_seed{seed}.csv', seed=seed),
        enumerate(result.returns.tolist()),
        ('episode', 'return'),
    )
    write_csv(
        out_path(config, 'intervals_seed{seed}.csv', seed=seed),
        [
            (r.index, r.episode, r.mean_return, r.episodes)
            for r in result.intervals
        ],
        ('interval', 'episode', 'mean_return', 'episodes'),
    )
    tail = result.returns[-100:]
    final = float(tail.mean()) if len(tail) else 0.0
    best = max(result.intervals, key=lambda r: r.mean_return)
    return (
        seed,
        final,
        best.index,
        best.mean_return,
        absolute_metric(
            result.intervals,
            scenario,
            seed=derive_seed(seed, 'absolute'),
        ),
    )


def attribute_reports(config, seed, methods):
    scenario = scenario_for(config)
    options = AttributionOptions.from_config(config, seed=seed)
    return AttributionReport.merge(
        attribute_rollout(
            scenario,
            policies,
            config.episodes,
            methods=methods,
            options=options,
            interval=interval,
        )
        for interval, policies in enumerate(
            interval_policies(config, scenario, seed)
        )
    )


def cmd_attribute(config, argd):
    """ Attribute every evaluation interval, per seed. """
    with progress('Attributing {} with {} ({} seeds)...'.format(
            config.scenario,
            config.method,
            len(config.seeds))):
        paths = run_pool(attribute_run, config)
    for steps_path, summary_path in paths:
        print(steps_path)
        print(summary_path)
    return 0


def attribute_run(config, index, seed):
    report = attribute_reports(
        config,
        seed,
        (Method.from_str(config.method), ),
    )
    return write_report(
        report,
        steps_path=out_path(config, 'attribution_seed{seed}.csv', seed=seed),
        summary_path=out_path(
            config,
            'attribution_summary_seed{seed}.csv',
            seed=seed,
        ),
    )


def cmd_correlate(config, argd):
    """ Correlation and ranking agreement between attribution metrics. """
    with progress('Correlating metrics on {} ({} seeds)...'.format(
            config.scenario,
            len(config.seeds))):
        results = run_pool(correlate_run, config)
    for paths, warnings in results:
        for warning in warnings:
            print_err(warning)
        for path in paths:
            print(path)
    return 0


def correlate_run(config, index, seed):
    methods = [Method.Importance, Method.ExactShapley, Method.Individual]
    if config.method == Method.McShapley.value:
        methods.insert(2, Method.McShapley)
    report = attribute_reports(config, seed, methods)
    series = {m.value: report.interval_means(m) for m in methods}
    corr = correlation_table(series)
    warnings = [
        'DegenerateSeries: seed {}, agent {} ({} ~ {})'.format(
            seed,
            row.agent,
            row.metric_a,
            row.metric_b,
        )
        for row in corr.itertuples()
        if pd.isna(row.r)
    ]
    agree = agreement_table(
        series,
        truth=Method.Individual.value,
        eps=config.tie_tolerance,
    )
    paths = [
        write_csv(
            out_path(config, 'correlation_seed{seed}.csv', seed=seed),
            corr,
            CORRELATION_COLUMNS,
        ),
        write_csv(
            out_path(config, 'agreement_seed{seed}.csv', seed=seed),
            agree,
            AGREEMENT_COLUMNS,
        ),
    ]
    if report.n_agents > 1:
        paths.append(write_csv(
            out_path(config, 'variance_seed{seed}.csv', seed=seed),
            enumerate(importance_variance(report)),
            ('interval', 'variance'),
        ))
    return paths, warnings


def cmd_bench(config, argd):
    """ Time plain steps, Agent Importance and exact Shapley. """
    with progress('Benchmarking {} scenarios...'.format(
            len(config.bench_scenarios))):
        results = run_scaling(
            scenarios=config.bench_scenarios,
            methods=config.bench_methods,
            reps=config.bench_reps,
            steps_per_rep=config.bench_steps,
            shapley_cap=config.bench_shapley_cap,
            seed=config.root_seed,
            parallel=config.bench_parallel,
            workers=config.workers,
            force=argd.get('--force', False),
        )
    path = write_results(out_path(config, 'bench.csv'), results)
    for result in results:
        debug('{}: {}'.format(result.scenario, result))
    for n_agents in sorted({r.n_agents for r in results}):
        ratio = speedup(results, n_agents)
        if ratio is not None:
            print('{:>3} agents: shapley/importance time ratio {:.1f}'.format(
                n_agents,
                ratio,
            ))
    print(path)
    return 0


def read_csvs(dirs, pattern):
    paths = sorted(
        path
        for d in dirs
        for path in glob.glob(os.path.join(d, pattern))
    )
    if not paths:
        return None
    return pd.concat(
        (pd.read_csv(path).assign(source=path) for path in paths),
        ignore_index=True,
    )


def cmd_report(config, argd):
    """ Merge per-run CSVs into summaries in the --out directory. """
    dirs = argd.get('RUN_DIR', None) or [config.out]
    written = []
    attribution = read_csvs(dirs, 'attribution_summary_seed*.csv')
    if attribution is not None:
        merged = attribution.groupby(
            ['interval', 'agent', 'method'],
            as_index=False,
        ).agg(
            mean=('mean', 'mean'),
            std_across_runs=('mean', 'std'),
            runs=('mean', 'size'),
        )
        written.append(write_csv(
            out_path(config, 'summary_attribution.csv'),
            merged,
            ('interval', 'agent', 'method', 'mean', 'std_across_runs', 'runs'),
        ))
    correlation = read_csvs(dirs, 'correlation_seed*.csv')
    if correlation is not None:
        merged = correlation.groupby(
            ['metric_a', 'metric_b', 'agent'],
            as_index=False,
        ).agg(r_mean=('r', 'mean'), r_std=('r', 'std'), runs=('r', 'count'))
        written.append(write_csv(
            out_path(config, 'summary_correlation.csv'),
            merged,
            ('metric_a', 'metric_b', 'agent', 'r_mean', 'r_std', 'runs'),
        ))
    agreement = read_csvs(dirs, 'agreement_seed*.csv')
    if agreement is not None:
        merged = agreement.groupby(
            ['pair', 'agent'],
            as_index=False,
        ).agg(rate=('rate', 'mean'), runs=('rate', 'size'))
        written.append(write_csv(
            out_path(config, 'summary_agreement.csv'),
            merged,
            ('pair', 'agent', 'rate', 'runs'),
        ))
    training = read_csvs(dirs, 'train_summary.csv')
    if training is not None:
        written.extend(report_training(config, training))
    if not written:
        raise InvalidArg(dirs, label='No result files found in')
    for path in written:
        print(path)
    return 0


def report_training(config, training):
    """ Aggregate scores and a performance profile over training runs. """
    scenario = scenario_for(config)
    scores = training['absolute_metric'].to_numpy()
    if is_lbf(scenario):
        matrix = RunMatrix(scores, tasks=[scenario_name(scenario)])
    else:
        matrix = RunMatrix.with_empirical_bounds(
            scores,
            tasks=[scenario_name(scenario)],
        )
    estimates = aggregate(
        matrix,
        resamples=config.resamples,
        seed=config.root_seed,
    )
    taus = [i / 20 for i in range(21)]
    profile = performance_profile(matrix, taus)
    return [
        write_csv(
            out_path(config, 'summary_aggregate.csv'),
            aggregate_frame(estimates),
            AGGREGATE_COLUMNS,
        ),
        write_csv(
            out_path(config, 'summary_profile.csv'),
            zip(taus, profile.tolist()),
            PROFILE_COLUMNS,
        ),
    ]


COMMANDS = {
    'simulate': cmd_simulate,
    'train': cmd_train,
    'attribute': cmd_attribute,
    'correlate': cmd_correlate,
    'bench': cmd_bench,
    'report': cmd_report,
}


def dict_pop_or(d, key, default=None):
    """ Try popping a key from a dict.
        Instead of raising KeyError, just return the default value.
    """
    val = default
    with suppress(KeyError):
        val = d.pop(key)
    return val


def handle_err(*args):
    """ Handle fatal errors, caught in __main__ scope.
        If DEBUG is set, print a real traceback.
        Otherwise, `print_err` any arguments passed.
    """
    if DEBUG:
        print_err(traceback.format_exc(), color=False)
    else:
        print_err(*args, newline=True)


def print_err(*args, **kwargs):
    """ A wrapper for print() that uses stderr by default. """
    if kwargs.get('file', None) is None:
        kwargs['file'] = sys.stderr

    color = dict_pop_or(kwargs, 'color', True)
    # Use color if asked, but only if the file is a tty.
    if color and kwargs['file'].isatty():
        # Keep any Colr args passed, convert strs into Colrs.
        msg = kwargs.get('sep', ' ').join(
            str(a) if isinstance(a, C) else str(C(a, 'red'))
            for a in args
        )
    else:
        # The file is not a tty anyway, no escape codes.
        msg = kwargs.get('sep', ' ').join(
            str(a.stripped() if isinstance(a, C) else a)
            for a in args
        )
    newline = dict_pop_or(kwargs, 'newline', False)
    if newline:
        msg = '\n{}'.format(msg)
    print(msg, **kwargs)


def entry_point(argd=None):
    """ An entry point for setuptools. This is required because
        `if __name__ == '__main__'` is not fired when the entry point
        is 'main()'. This just wraps the old behavior in a function so
        it can be called from setuptools.
    """
    # `argd` is for testing purposes only.
    # docopt supplies the real `argd` in main().
    try:
        mainret = main(argd=argd)
    except SystemExit as exdoc:
        # docopt exits with the usage string for bad arguments.
        if isinstance(exdoc.code, str):
            print_err(exdoc.code)
            mainret = 2
        else:
            raise
    except (EOFError, KeyboardInterrupt):
        print_err('\nUser cancelled.\n')
        mainret = 3
    except BrokenPipeError:
        print_err('\nBroken pipe, input/output was interrupted.\n')
        mainret = 3
    except InvalidArg as exarg:
        handle_err(exarg.as_colr())
        mainret = 2
    except (AgentCreditError, OSError) as ex:
        handle_err(C(str(ex), 'red'))
        mainret = 3

    sys.exit(mainret)


if __name__ == '__main__':
    entry_point()
