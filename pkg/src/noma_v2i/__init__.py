"""Optimal dynamic power, rate and decoding-order allocation for a two-user
NOMA downlink under an outage constraint on the reliability-critical user."""

from .dual import DualSearchResult, bisection_search, lagrangian
from .dynamics import Action, ActionTable, Order, OutcomeDistribution, action_table, outcome_distribution
from .mdp import (
    EvaluationResult,
    State,
    ValueTable,
    backward_induction,
    build_state_space,
    evaluate_policy_exact,
    extract_policy,
    policy_value,
    solve,
    value_iteration,
)
from .scenario import ConfigError, ScenarioConfig, load_config, reference_scenario, placement_scenario
from .sim import monte_carlo, sample_episode

__version__ = "0.1.0"
