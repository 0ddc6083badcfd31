"""Optimal stopping for heralded entanglement distribution.

A super-node distributes ebits to S clients over N slotted attempts with
per-attempt success probability p, and must decide after every slot whether
another round is worth it.  This package provides the exact finite-horizon
solver, bound-based pruning, one-step look-ahead and midpoint stopping rules,
and a seeded Monte Carlo harness for evaluating policies.
"""

from .model import (
    Absorbed,
    Action,
    Connected,
    ModelParams,
    SystemState,
    allowed_actions,
    expected_next_cluster,
    extended_kernel,
    extended_transition_prob,
    initial_distribution,
    transition_matrix,
    transition_prob,
    transition_row,
)
from .rewards import (
    GeometricPayoff,
    LinearTradeoffPayoff,
    RatioPayoff,
    RewardSpec,
    TabularPayoff,
    check_property1,
    check_property2,
    cost,
    cost_table,
    payoff,
    payoff_table,
    reward,
)
from .simulator import (
    SimulationSummary,
    TrialRecord,
    random_policy,
    run_trial,
    run_trials,
    sweep,
)
from .solver import (
    ActionMatrix,
    Policy,
    PropertyViolationError,
    PruneReport,
    ValueTable,
    action_matrix,
    backward_induction,
    evaluate_policy,
    majorant,
    majorant_table,
    midpoint_policy,
    minorant,
    minorant_table,
    ola_closedness_check,
    ola_policy,
    ola_set,
    ola_threshold,
    pruned_solve,
)

__version__ = "0.1.0"
