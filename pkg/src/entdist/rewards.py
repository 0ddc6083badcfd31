"""Reward families: a continuation cost f and a stop payoff g over states (s, n).

Three built-in payoff families, all with zero continuation cost (the price of
waiting is folded into the payoff itself):

  ratio       g(s, n) = s / n          connected clients per slot spent
  geometric   g(s, n) = lam**n * s     cluster size discounted each slot
  linear      g(s, n) = s/S - n/N      fraction connected minus fraction of
                                       the horizon consumed

A tabular family takes explicit g and f tables so the solver machinery can be
exercised on rewards outside the built-ins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Absorbed, Action, ModelParams, SystemState, allowed_actions

__all__ = [
    "GeometricPayoff",
    "LinearTradeoffPayoff",
    "RatioPayoff",
    "RewardSpec",
    "TabularPayoff",
    "check_property1",
    "check_property2",
    "cost",
    "cost_table",
    "payoff",
    "payoff_table",
    "reward",
]


@dataclass(frozen=True)
class RatioPayoff:
    pass


@dataclass(frozen=True)
class GeometricPayoff:
    lam: float

    def __post_init__(self) -> None:
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lambda must lie in (0,1]")


@dataclass(frozen=True)
class LinearTradeoffPayoff:
    pass


@dataclass(frozen=True, eq=False)
class TabularPayoff:
    """Explicit payoff (and optional nonnegative cost) tables over [0,S] x [1,N].

    Row index is the cluster size, column index is slot - 1.
    """

    payoff: np.ndarray
    cost: np.ndarray | None = None


RewardSpec = RatioPayoff | GeometricPayoff | LinearTradeoffPayoff | TabularPayoff


def _check_range(s: int, n: int, params: ModelParams) -> None:
    if not 0 <= s <= params.clients:
        raise ValueError(f"cluster size {s} outside [0, {params.clients}]")
    if not 1 <= n <= params.horizon:
        raise ValueError(f"slot {n} outside [1, {params.horizon}]")


def _check_tables(spec: TabularPayoff, params: ModelParams) -> None:
    shape = (params.clients + 1, params.horizon)
    if spec.payoff.shape != shape:
        raise ValueError(f"payoff table shape {spec.payoff.shape} != {shape}")
    if spec.cost is not None:
        if spec.cost.shape != shape:
            raise ValueError(f"cost table shape {spec.cost.shape} != {shape}")
        if np.any(spec.cost < 0):
            raise ValueError("cost table entries must be nonnegative")


def payoff(spec: RewardSpec, s: int, n: int, params: ModelParams) -> float:
    """Payoff g(s, n) collected when stopping with cluster s at slot n."""
    _check_range(s, n, params)
    if isinstance(spec, RatioPayoff):
        return s / n
    if isinstance(spec, GeometricPayoff):
        return spec.lam**n * s
    if isinstance(spec, LinearTradeoffPayoff):
        return s / params.clients - n / params.horizon
    _check_tables(spec, params)
    return float(spec.payoff[s, n - 1])


def cost(spec: RewardSpec, s: int, n: int, params: ModelParams) -> float:
    """Continuation cost f(s, n) paid when continuing from cluster s at slot n."""
    _check_range(s, n, params)
    if isinstance(spec, TabularPayoff) and spec.cost is not None:
        _check_tables(spec, params)
        return float(spec.cost[s, n - 1])
    return 0.0


def payoff_table(spec: RewardSpec, params: ModelParams) -> np.ndarray:
    """Payoff over the full grid, shape (S+1, N); column n-1 holds slot n.

    Entries match the scalar `payoff` bit for bit; solvers and look-ahead sets
    must compare against one shared table so exact ties resolve consistently.
    """
    S, N = params.clients, params.horizon
    sizes = np.arange(S + 1, dtype=float)
    slots = np.arange(1, N + 1, dtype=float)
    if isinstance(spec, RatioPayoff):
        return sizes[:, None] / slots[None, :]
    if isinstance(spec, GeometricPayoff):
        powers = np.array([spec.lam**n for n in range(1, N + 1)])
        return sizes[:, None] * powers[None, :]
    if isinstance(spec, LinearTradeoffPayoff):
        return (sizes / S)[:, None] - (slots / N)[None, :]
    _check_tables(spec, params)
    return np.asarray(spec.payoff, dtype=float)


def cost_table(spec: RewardSpec, params: ModelParams) -> np.ndarray:
    """Continuation cost over the full grid, shape (S+1, N)."""
    if isinstance(spec, TabularPayoff) and spec.cost is not None:
        _check_tables(spec, params)
        return np.asarray(spec.cost, dtype=float)
    return np.zeros((params.clients + 1, params.horizon))


def reward(spec: RewardSpec, state: SystemState, action: Action, params: ModelParams) -> float:
    """Reward for taking `action` in `state`: -f to continue, g to stop, 0 once absorbed."""
    if action not in allowed_actions(state, params):
        raise ValueError(f"action {action.value} not allowed in {state!r}")
    if isinstance(state, Absorbed):
        return 0.0
    if action is Action.CONTINUE:
        return -cost(spec, state.size, state.slot, params)
    return payoff(spec, state.size, state.slot, params)


def check_property1(
    spec: RewardSpec, params: ModelParams
) -> tuple[bool, tuple[int, int, int] | None]:
    """Check that g is non-decreasing in the cluster size at every slot.

    Returns (True, None), or (False, (s, s_bigger, n)) for the first violating
    adjacent pair scanning slots then sizes.
    """
    g = payoff_table(spec, params)
    for n in range(1, params.horizon + 1):
        col = g[:, n - 1]
        for s in range(params.clients):
            if col[s] > col[s + 1]:
                return False, (s, s + 1, n)
    return True, None


def check_property2(
    spec: RewardSpec, params: ModelParams
) -> tuple[bool, tuple[int, int, int] | None]:
    """Check that g is non-increasing in the slot at every cluster size.

    Returns (True, None), or (False, (s, n, n_later)) for the first violating
    adjacent pair scanning sizes then slots.
    """
    g = payoff_table(spec, params)
    for s in range(params.clients + 1):
        row = g[s]
        for n in range(1, params.horizon):
            if row[n - 1] < row[n]:
                return False, (s, n, n + 1)
    return True, None
