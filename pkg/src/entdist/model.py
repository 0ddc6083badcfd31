"""Markov model of heralded ebit distribution from a super-node to its clients.

A super-node tries to deliver one ebit to each of S client nodes over a slotted
horizon of N attempts.  Each per-client attempt succeeds independently with
probability p, and the heralded scheme tells the super-node which clients are
still missing, so retries target only those and the connected count never
decreases.  At the end of every slot the super-node either continues (another
round of attempts toward the missing clients) or stops, after which the process
sits in an absorbing state and nothing further happens.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Absorbed",
    "Action",
    "Connected",
    "ModelParams",
    "SystemState",
    "allowed_actions",
    "expected_next_cluster",
    "extended_kernel",
    "extended_transition_prob",
    "initial_distribution",
    "transition_matrix",
    "transition_prob",
    "transition_row",
]


@dataclass(frozen=True)
class ModelParams:
    """A problem instance: S clients, N time slots, per-attempt success probability p."""

    clients: int
    horizon: int
    p: float

    def __post_init__(self) -> None:
        if self.clients < 1:
            raise ValueError("clients must be a positive integer")
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @property
    def q(self) -> float:
        """Per-attempt loss probability."""
        return 1.0 - self.p


class Action(Enum):
    CONTINUE = "continue"
    STOP = "stop"


@dataclass(frozen=True)
class Connected:
    """`size` clients hold an ebit at the end of slot `slot`."""

    size: int
    slot: int


@dataclass(frozen=True)
class Absorbed:
    """Distribution has been stopped.

    Stopping during slot n parks the process at slot n + 1, so the absorbing
    slot may point one past the horizon.
    """

    slot: int


SystemState = Connected | Absorbed


def validate_state(state: SystemState, params: ModelParams) -> None:
    """Raise ValueError unless `state` is a valid state for `params`."""
    if isinstance(state, Connected):
        if not 0 <= state.size <= params.clients:
            raise ValueError(f"cluster size {state.size} outside [0, {params.clients}]")
        if not 1 <= state.slot <= params.horizon:
            raise ValueError(f"slot {state.slot} outside [1, {params.horizon}]")
    elif isinstance(state, Absorbed):
        if not 1 <= state.slot <= params.horizon + 1:
            raise ValueError(f"absorbed slot {state.slot} outside [1, {params.horizon + 1}]")
    else:
        raise TypeError(f"not a system state: {state!r}")


def allowed_actions(state: SystemState, params: ModelParams) -> set[Action]:
    """Actions available to the super-node in `state`.

    Continuing is possible only while some client is still missing and at
    least one slot remains; otherwise the only option is to stop.
    """
    validate_state(state, params)
    if (
        isinstance(state, Connected)
        and state.size < params.clients
        and state.slot < params.horizon
    ):
        return {Action.CONTINUE, Action.STOP}
    return {Action.STOP}


def _binom_pmf(k: int, j: int, p: float, q: float) -> float:
    # math.comb is exact; conversion and the two multiplies each round once,
    # keeping rows normalized well within 1e-12 up to a few hundred clients.
    return math.comb(k, j) * p**j * q ** (k - j)


def transition_row(s: int, params: ModelParams) -> np.ndarray:
    """Distribution of the next cluster size after one more round of attempts.

    Entry j is the probability of landing on s + j connected clients, i.e. of
    exactly j of the `clients - s` missing clients succeeding.  The returned
    vector has length clients - s + 1 and sums to 1.
    """
    if not 0 <= s <= params.clients:
        raise ValueError(f"cluster size {s} outside [0, {params.clients}]")
    k = params.clients - s
    q = params.q
    return np.array([_binom_pmf(k, j, params.p, q) for j in range(k + 1)])


def transition_matrix(params: ModelParams) -> np.ndarray:
    """One-step kernel under continuation, shape (S+1, S+1), row = from-size."""
    S = params.clients
    m = np.zeros((S + 1, S + 1))
    for s in range(S + 1):
        m[s, s:] = transition_row(s, params)
    return m


def transition_prob(
    from_state: SystemState,
    action: Action,
    to_state: SystemState,
    params: ModelParams,
) -> float:
    """Probability of moving from `from_state` to `to_state` under `action`.

    Continuation moves Connected(s, n) to Connected(s~, n+1) with the binomial
    weight of s~ - s successes among the missing clients; there is no way back
    to smaller clusters and no way into the absorbing state.  Stopping moves
    any state to Absorbed(n+1) with certainty.
    """
    validate_state(from_state, params)
    validate_state(to_state, params)
    if action not in allowed_actions(from_state, params):
        raise ValueError(f"action {action.value} not allowed in {from_state!r}")
    if to_state.slot != from_state.slot + 1:
        raise ValueError(
            f"transition must advance one slot, got {from_state.slot} -> {to_state.slot}"
        )
    if action is Action.STOP:
        return 1.0 if isinstance(to_state, Absorbed) else 0.0
    # CONTINUE from a Connected state with missing clients.
    if isinstance(to_state, Absorbed):
        return 0.0
    if to_state.size < from_state.size:
        return 0.0
    k = params.clients - from_state.size
    j = to_state.size - from_state.size
    return _binom_pmf(k, j, params.p, params.q)


def extended_kernel(params: ModelParams, k: int) -> np.ndarray:
    """k-step all-continue kernel, the one-step kernel composed with itself.

    Built by peeling one step off the front: the k-step kernel is the one-step
    kernel applied to the (k-1)-step kernel.
    """
    if k < 1:
        raise ValueError("step count k must be >= 1")
    m = transition_matrix(params)
    e = m
    for _ in range(k - 1):
        e = m @ e
    return e


def extended_transition_prob(s: int, k: int, s_target: int, params: ModelParams) -> float:
    """Probability of going from cluster s to s_target in k always-continue steps."""
    if not 0 <= s <= params.clients:
        raise ValueError(f"cluster size {s} outside [0, {params.clients}]")
    if not 0 <= s_target <= params.clients:
        raise ValueError(f"cluster size {s_target} outside [0, {params.clients}]")
    if s_target < s:
        return 0.0
    return float(extended_kernel(params, k)[s, s_target])


def initial_distribution(params: ModelParams) -> np.ndarray:
    """Cluster-size distribution after the unconditional first round of attempts.

    The super-node transmits to all S clients simultaneously, so the connected
    count after slot 1 is binomial(S, p).  Entry s of the returned length-S+1
    vector is the probability of exactly s successes; identical to the
    one-step row out of the empty cluster.
    """
    return transition_row(0, params)


def expected_next_cluster(s: int, params: ModelParams) -> float:
    """Mean cluster size after one more round: s + p * (clients - s)."""
    if not 0 <= s <= params.clients:
        raise ValueError(f"cluster size {s} outside [0, {params.clients}]")
    return s + params.p * (params.clients - s)
