"""Exact and accelerated policy computation for the stopping problem.

The exact solver sweeps the horizon backwards: at the final slot the process
must stop and collect the payoff, and at every earlier slot the value of a
state is the better of stopping now versus paying the continuation cost and
averaging next-slot values under the binomial kernel.  Ties between stopping
and continuing always resolve to stopping.

Two computable bounds sandwich the exact continuation value of any state:

  minorant  v-(s, n)  continue one step, then stop: the kernel-weighted mean
                      of next-slot payoffs, minus the continuation cost.
  majorant  v+(s, n)  run every remaining slot's attempts but pay a single
                      continuation cost and collect the payoff as if the final
                      cluster had been reached in one step.

Whenever the stop payoff clears the majorant the state stops under the optimal
policy, and whenever it falls strictly below the minorant the state continues,
both decidable without looking at the future value table.  That classification
needs the payoff to be non-decreasing in the cluster size and non-increasing
in the slot (and nonnegative costs); `pruned_solve` refuses otherwise.

The one-step look-ahead (OLA) rule stops exactly on the states where stopping
beats continuing one step and then stopping, i.e. where the payoff reaches the
minorant.  For the geometric and linear families that rule is optimal and has
a closed-form cluster threshold; for the ratio family the stop region is not
closed under the dynamics and the rule can be strictly sub-optimal, which
`ola_closedness_check` detects.  The midpoint rule stops once the payoff
reaches the average of the two bounds; it needs no assumptions on the reward
but is generally sub-optimal.

All numeric comparisons are exact double comparisons with no epsilon slack.
Every rule reads the same shared payoff table and computes kernel averages
through the same matrix-vector product, so exact ties resolve identically
across the exact solver, the classification, and the look-ahead rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import (
    Action,
    ModelParams,
    extended_kernel,
    initial_distribution,
    transition_matrix,
)
from .rewards import (
    GeometricPayoff,
    LinearTradeoffPayoff,
    RewardSpec,
    check_property1,
    check_property2,
    cost_table,
    payoff_table,
)

__all__ = [
    "ActionMatrix",
    "Policy",
    "PropertyViolationError",
    "PruneReport",
    "ValueTable",
    "action_matrix",
    "backward_induction",
    "evaluate_policy",
    "majorant",
    "majorant_table",
    "midpoint_policy",
    "minorant",
    "minorant_table",
    "ola_closedness_check",
    "ola_policy",
    "ola_set",
    "ola_threshold",
    "pruned_solve",
]

UNRESOLVED = 0
STOP_BY_MAJORANT = 1
CONTINUE_BY_MINORANT = 2

CLASS_LABELS = {
    UNRESOLVED: "unresolved",
    STOP_BY_MAJORANT: "stop_by_majorant",
    CONTINUE_BY_MINORANT: "continue_by_minorant",
}


class PropertyViolationError(ValueError):
    """Raised when a solver needs a payoff monotonicity that does not hold."""


@dataclass(frozen=True)
class Policy:
    """Deterministic action table; stop[s, n-1] is True where the action is to stop.

    Stopping is forced at the full cluster and in the final slot.
    """

    stop: np.ndarray
    origin: str

    def action_at(self, s: int, n: int) -> Action:
        return Action.STOP if self.stop[s, n - 1] else Action.CONTINUE


@dataclass(frozen=True)
class ValueTable:
    """Expected remaining reward per state, plus its average over the first slot."""

    values: np.ndarray
    v_initial: float

    def value_at(self, s: int, n: int) -> float:
        return float(self.values[s, n - 1])


@dataclass(frozen=True)
class PruneReport:
    """Per-state bound classification for slots 1..N-1, plus counts.

    Codes: 0 unresolved, 1 stop decided by the majorant, 2 continue decided by
    the minorant.  Unresolved states fell back to the exact recursion.
    """

    classification: np.ndarray

    @property
    def n_stop_by_majorant(self) -> int:
        return int(np.sum(self.classification == STOP_BY_MAJORANT))

    @property
    def n_continue_by_minorant(self) -> int:
        return int(np.sum(self.classification == CONTINUE_BY_MINORANT))

    @property
    def n_unresolved(self) -> int:
        return int(np.sum(self.classification == UNRESOLVED))

    @property
    def n_states(self) -> int:
        return int(self.classification.size)


@dataclass(frozen=True)
class ActionMatrix:
    """Per-state stop/continue threshold over a probability grid.

    thresholds[s, n-1] is the largest grid probability at which stopping is
    optimal (NaN if stopping is never optimal on the grid).  monotone[s, n-1]
    records whether the stop region was a prefix of the grid, i.e. whether a
    single threshold faithfully summarizes the policy across the grid.
    """

    thresholds: np.ndarray
    monotone: np.ndarray
    p_grid: np.ndarray


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _solve(params: ModelParams, spec: RewardSpec, classify: bool):
    """Backward sweep shared by the exact and the bound-classifying solvers."""
    S, N = params.clients, params.horizon
    m = transition_matrix(params)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)

    values = np.empty((S + 1, N))
    stop = np.zeros((S + 1, N), dtype=bool)
    values[:, N - 1] = g[:, N - 1]
    stop[:, N - 1] = True

    classification = np.zeros((S + 1, N - 1), dtype=np.uint8) if classify else None
    ext = None
    for n in range(N - 1, 0, -1):
        g_now = g[:, n - 1]
        cont = -f[:, n - 1] + m @ values[:, n]
        choose_stop = g_now >= cont
        choose_stop[S] = True
        col = np.where(choose_stop, g_now, cont)
        col[S] = g_now[S]
        values[:, n - 1] = col
        stop[:, n - 1] = choose_stop
        if classify:
            ext = m if ext is None else m @ ext
            v_minus = -f[:, n - 1] + m @ g[:, n]
            v_plus = -f[:, n - 1] + ext @ g[:, n]
            classification[:, n - 1] = np.where(
                g_now >= v_plus,
                STOP_BY_MAJORANT,
                np.where(g_now < v_minus, CONTINUE_BY_MINORANT, UNRESOLVED),
            )

    v_initial = float(initial_distribution(params) @ values[:, 0])
    return values, stop, v_initial, classification


def backward_induction(params: ModelParams, spec: RewardSpec) -> tuple[ValueTable, Policy]:
    """Exact optimal values and policy for the stopping problem."""
    values, stop, v_initial, _ = _solve(params, spec, classify=False)
    return (
        ValueTable(_freeze(values), v_initial),
        Policy(_freeze(stop), origin="optimal"),
    )


def _validate_policy(policy: Policy, params: ModelParams) -> None:
    S, N = params.clients, params.horizon
    if policy.stop.shape != (S + 1, N):
        raise ValueError(f"policy shape {policy.stop.shape} != {(S + 1, N)}")
    if not policy.stop[S, :].all():
        raise ValueError("policy must stop at the full cluster")
    if not policy.stop[:, N - 1].all():
        raise ValueError("policy must stop in the final slot")


def evaluate_policy(policy: Policy, params: ModelParams, spec: RewardSpec) -> ValueTable:
    """Exact expected reward of an arbitrary (possibly sub-optimal) policy."""
    _validate_policy(policy, params)
    S, N = params.clients, params.horizon
    m = transition_matrix(params)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)

    values = np.empty((S + 1, N))
    values[:, N - 1] = g[:, N - 1]
    for n in range(N - 1, 0, -1):
        cont = -f[:, n - 1] + m @ values[:, n]
        values[:, n - 1] = np.where(policy.stop[:, n - 1], g[:, n - 1], cont)
    v_initial = float(initial_distribution(params) @ values[:, 0])
    return ValueTable(_freeze(values), v_initial)


def minorant_table(params: ModelParams, spec: RewardSpec) -> np.ndarray:
    """Continue-once-then-stop values for slots 1..N-1, shape (S+1, N-1)."""
    S, N = params.clients, params.horizon
    if N < 2:
        return np.zeros((S + 1, 0))
    m = transition_matrix(params)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)
    out = np.empty((S + 1, N - 1))
    for n in range(1, N):
        out[:, n - 1] = -f[:, n - 1] + m @ g[:, n]
    return out


def majorant_table(params: ModelParams, spec: RewardSpec) -> np.ndarray:
    """Single-cost free-run bounds for slots 1..N-1, shape (S+1, N-1)."""
    S, N = params.clients, params.horizon
    if N < 2:
        return np.zeros((S + 1, 0))
    m = transition_matrix(params)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)
    out = np.empty((S + 1, N - 1))
    ext = None
    for n in range(N - 1, 0, -1):
        ext = m if ext is None else m @ ext
        out[:, n - 1] = -f[:, n - 1] + ext @ g[:, n]
    return out


def _check_bound_slot(n: int, params: ModelParams) -> None:
    if not 1 <= n < params.horizon:
        raise ValueError(f"slot {n} outside [1, {params.horizon - 1}]: bounds need a next slot")


def minorant(s: int, n: int, params: ModelParams, spec: RewardSpec) -> float:
    """Expected reward of continuing one step from (s, n) and then stopping."""
    _check_bound_slot(n, params)
    if not 0 <= s <= params.clients:
        raise ValueError(f"cluster size {s} outside [0, {params.clients}]")
    m = transition_matrix(params)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)
    return float((-f[:, n - 1] + m @ g[:, n])[s])


def majorant(s: int, n: int, params: ModelParams, spec: RewardSpec) -> float:
    """Upper bound on the continuation value of (s, n).

    Runs the attempts of every remaining slot but pays only one continuation
    cost and evaluates the payoff at slot n+1.
    """
    _check_bound_slot(n, params)
    if not 0 <= s <= params.clients:
        raise ValueError(f"cluster size {s} outside [0, {params.clients}]")
    ext = extended_kernel(params, params.horizon - n)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)
    return float((-f[:, n - 1] + ext @ g[:, n])[s])


def pruned_solve(
    params: ModelParams, spec: RewardSpec
) -> tuple[ValueTable, Policy, PruneReport]:
    """Solve with the bound classification deciding actions wherever it fires.

    States whose payoff reaches the majorant stop, states whose payoff falls
    strictly below the minorant continue, and only the remaining states take
    their action from the exact recursion (whose value columns are computed
    once and shared).  The resulting policy and values agree with
    `backward_induction`.
    """
    ok, cex = check_property1(spec, params)
    if not ok:
        raise PropertyViolationError(
            f"payoff not non-decreasing in cluster size: g({cex[0]},{cex[2]}) > g({cex[1]},{cex[2]})"
        )
    ok, cex = check_property2(spec, params)
    if not ok:
        raise PropertyViolationError(
            f"payoff not non-increasing in slot: g({cex[0]},{cex[1]}) < g({cex[0]},{cex[2]})"
        )
    values, stop_exact, v_initial, classification = _solve(params, spec, classify=True)
    S, N = params.clients, params.horizon
    stop = np.empty_like(stop_exact)
    stop[:, N - 1] = True
    if N > 1:
        cls = classification
        stop[:, : N - 1] = np.where(
            cls == STOP_BY_MAJORANT,
            True,
            np.where(cls == CONTINUE_BY_MINORANT, False, stop_exact[:, : N - 1]),
        )
        stop[S, :] = True
    return (
        ValueTable(_freeze(values), v_initial),
        Policy(_freeze(stop), origin="optimal"),
        PruneReport(_freeze(classification)),
    )


def ola_set(n: int, params: ModelParams, spec: RewardSpec) -> set[int]:
    """Cluster sizes at slot n where stopping beats continuing once then stopping."""
    _check_bound_slot(n, params)
    m = transition_matrix(params)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)
    v_minus = -f[:, n - 1] + m @ g[:, n]
    members = np.nonzero(g[:, n - 1] >= v_minus)[0]
    return set(int(s) for s in members)


def ola_policy(params: ModelParams, spec: RewardSpec) -> Policy:
    """One-step look-ahead rule: stop wherever the payoff reaches the minorant."""
    S, N = params.clients, params.horizon
    stop = np.zeros((S + 1, N), dtype=bool)
    stop[:, N - 1] = True
    if N > 1:
        g = payoff_table(spec, params)
        stop[:, : N - 1] = g[:, : N - 1] >= minorant_table(params, spec)
        stop[S, :] = True
    return Policy(_freeze(stop), origin="ola")


def _membership_faithful(t_exact: Fraction) -> float:
    """Round an exact threshold so integer membership under `s >= t` survives.

    Plain nearest rounding can step across an integer (for example an exact
    threshold of S computed as a float quotient lands just above S), silently
    changing which cluster sizes clear the threshold.  Nudge by ulps until the
    float classifies every integer exactly like the rational does.
    """
    t = float(t_exact)
    m = math.ceil(t_exact)
    while math.ceil(t) < m:
        t = math.nextafter(t, math.inf)
    while math.ceil(t) > m:
        t = math.nextafter(t, -math.inf)
    return t


def ola_threshold(spec: RewardSpec, params: ModelParams) -> float | None:
    """Closed-form cluster threshold above which the look-ahead rule stops.

    Only the geometric and linear families admit one; returns None otherwise.
    The rule stops at (s, n) exactly when s >= threshold, at every slot.  The
    threshold is evaluated in exact rational arithmetic over the (binary)
    parameter values and rounded so integer comparisons are preserved.
    """
    S = params.clients
    if isinstance(spec, GeometricPayoff):
        lam, p = Fraction(spec.lam), Fraction(params.p)
        denom = 1 - lam + lam * p
        if denom == 0:
            # lam == 1 and p == 0: payoff constant, stopping never loses.
            return 0.0
        return _membership_faithful(lam * S * p / denom)
    if isinstance(spec, LinearTradeoffPayoff):
        if params.p == 0.0:
            return float("-inf")
        p = Fraction(params.p)
        return _membership_faithful(S - Fraction(S) / (params.horizon * p))
    return None


def ola_closedness_check(
    params: ModelParams, spec: RewardSpec
) -> tuple[bool, tuple[int, int, int] | None]:
    """Check whether the look-ahead stop region is closed under the dynamics.

    Closed means: from any stop-region state, every reachable next cluster is
    again in the next slot's stop region, which is exactly when the look-ahead
    rule is optimal.  Returns (True, None) or (False, (s, n, s_reached)) for
    the first escape found.
    """
    S, N = params.clients, params.horizon
    m = transition_matrix(params)
    for n in range(1, N - 1):
        members = sorted(ola_set(n, params, spec))
        next_members = ola_set(n + 1, params, spec)
        for s in members:
            reachable = np.nonzero(m[s] > 0.0)[0]
            for s_reached in reachable:
                if int(s_reached) not in next_members:
                    return False, (s, n, int(s_reached))
    return True, None


def midpoint_policy(params: ModelParams, spec: RewardSpec) -> Policy:
    """Stop once the payoff reaches the average of the two continuation bounds.

    Needs no payoff monotonicity, at the price of sub-optimal decisions.
    """
    S, N = params.clients, params.horizon
    stop = np.zeros((S + 1, N), dtype=bool)
    stop[:, N - 1] = True
    if N > 1:
        g = payoff_table(spec, params)
        mid = (majorant_table(params, spec) + minorant_table(params, spec)) / 2.0
        stop[:, : N - 1] = g[:, : N - 1] >= mid
        stop[S, :] = True
    return Policy(_freeze(stop), origin="midpoint")


def action_matrix(
    clients: int, horizon: int, spec: RewardSpec, p_grid: "np.ndarray | list[float]"
) -> ActionMatrix:
    """Solve across a probability grid and compress the policies into thresholds.

    For each state, records the largest grid probability at which stopping is
    optimal (NaN if none), plus whether the stop region was a grid prefix.
    """
    grid = np.asarray(p_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("p_grid must not be empty")
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise ValueError("p_grid values must lie in [0, 1]")
    if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
        raise ValueError("p_grid must be strictly increasing")

    stops = np.empty((grid.size, clients + 1, horizon), dtype=bool)
    for i, p in enumerate(grid):
        _, policy = backward_induction(ModelParams(clients, horizon, float(p)), spec)
        stops[i] = policy.stop

    thresholds = np.full((clients + 1, horizon), np.nan)
    monotone = np.empty((clients + 1, horizon), dtype=bool)
    for s in range(clients + 1):
        for n_idx in range(horizon):
            stop_at = np.nonzero(stops[:, s, n_idx])[0]
            if stop_at.size:
                thresholds[s, n_idx] = grid[stop_at[-1]]
            # Prefix check: every stop index sits before every continue index.
            monotone[s, n_idx] = stop_at.size == 0 or stop_at[-1] == stop_at.size - 1
    return ActionMatrix(_freeze(thresholds), _freeze(monotone), _freeze(grid.copy()))
