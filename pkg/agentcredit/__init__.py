""" agentcredit
    Credit attribution for cooperative multi-agent teams: how much of the
    shared team reward did each agent earn?

    Importing the package registers the bundled environments (Level-Based
    Foraging and the robotic warehouse).

    The MIT License (MIT)
"""
from .base import (  # noqa
    __version__,
    AgentCreditError,
    ConfigError,
    DegenerateSeries,
    Environment,
    EpisodeFinished,
    InfeasibleScenario,
    InvalidAction,
    InvalidArg,
    InvalidScenario,
    MissingSnapshot,
    ParseError,
    StepOutcome,
    TooManyAgents,
    environment_for,
    noop_action,
    observe,
    reset,
    step,
)

from .lbf import (
    LbfAction,
    LbfScenario,
    LbfState,
    LevelBasedForaging,
    RELIABILITY_SCENARIOS,
    SCALABILITY_SCENARIOS,
    parse_scenario,
)

from .warehouse import (
    Warehouse,
    WarehouseAction,
    WarehouseScenario,
    WarehouseState,
    parse_warehouse_scenario,
)

from .scenarios import (
    load_environment,
    load_scenario,
    scenario_name,
)

from .config import (
    Config,
    build_config,
    derive_rng,
    derive_seed,
    load_config_file,
)

from .policy import (
    Policy,
    PolicyKind,
    TrainConfig,
    evaluate_policies,
    load_policies,
    parse_policy_spec,
    play_episode,
    save_policies,
    train_iql,
)

from .rollout import (
    read_trace,
    run_episodes,
    write_trace,
)

from .attribution import (
    AttributionOptions,
    AttributionReport,
    CoalitionMask,
    Method,
    RemovalProxy,
    Sampler,
    attribute_interval,
    attribute_rollout,
    exact_shapley_step,
    importance_step,
    mc_shapley,
)

from .evaluation import (
    RunMatrix,
    absolute_metric,
    aggregate,
    agreement_table,
    correlation_table,
    iqm,
    pearson,
    performance_profile,
    probability_of_improvement,
    rank_agreement_rate,
    rank_vector,
)

from .bench import (
    BenchMethod,
    BenchResult,
    run_scaling,
)

__all__ = [
    # base classes/functions made available.
    '__version__',
    'AgentCreditError',
    'ConfigError',
    'DegenerateSeries',
    'Environment',
    'EpisodeFinished',
    'InfeasibleScenario',
    'InvalidAction',
    'InvalidArg',
    'InvalidScenario',
    'MissingSnapshot',
    'ParseError',
    'StepOutcome',
    'TooManyAgents',
    'environment_for',
    'noop_action',
    'observe',
    'reset',
    'step',
    # environments made available.
    'LbfAction',
    'LbfScenario',
    'LbfState',
    'LevelBasedForaging',
    'RELIABILITY_SCENARIOS',
    'SCALABILITY_SCENARIOS',
    'parse_scenario',
    'Warehouse',
    'WarehouseAction',
    'WarehouseScenario',
    'WarehouseState',
    'parse_warehouse_scenario',
    'load_environment',
    'load_scenario',
    'scenario_name',
    # config functions/classes made available.
    'Config',
    'build_config',
    'derive_rng',
    'derive_seed',
    'load_config_file',
    # policy functions/classes made available.
    'Policy',
    'PolicyKind',
    'TrainConfig',
    'evaluate_policies',
    'load_policies',
    'parse_policy_spec',
    'play_episode',
    'save_policies',
    'train_iql',
    'read_trace',
    'run_episodes',
    'write_trace',
    # attribution functions/classes made available.
    'AttributionOptions',
    'AttributionReport',
    'CoalitionMask',
    'Method',
    'RemovalProxy',
    'Sampler',
    'attribute_interval',
    'attribute_rollout',
    'exact_shapley_step',
    'importance_step',
    'mc_shapley',
    # evaluation functions/classes made available.
    'RunMatrix',
    'absolute_metric',
    'aggregate',
    'agreement_table',
    'correlation_table',
    'iqm',
    'pearson',
    'performance_profile',
    'probability_of_improvement',
    'rank_agreement_rate',
    'rank_vector',
    # bench functions/classes made available.
    'BenchMethod',
    'BenchResult',
    'run_scaling',
]
