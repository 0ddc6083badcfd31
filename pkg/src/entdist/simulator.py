"""Seeded Monte Carlo engine for running policies on the distribution process.

Seeding contract: trial i of a run with master seed m draws from
numpy's default generator seeded with SeedSequence(entropy=m, spawn_key=(i,)).
Grid sweeps prepend (policy_index, grid_index) to the spawn key.  Seeds are a
pure function of the indices, and per-trial results land in arrays addressed
by trial index, so summaries are bit-identical no matter how trials are
scheduled across workers.

Each trial samples, for every client, the slot of its first successful ebit
delivery (geometric with the per-attempt success probability).  The cluster
trajectory is the running count of clients whose first success has occurred,
which makes every per-slot increment binomial over the missing clients, and
the policy is consulted slot by slot until it stops.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import Action, ModelParams
from .rewards import RewardSpec, cost_table, payoff_table
from .solver import Policy, backward_induction, midpoint_policy, ola_policy

__all__ = [
    "SimulationSummary",
    "TrialRecord",
    "random_policy",
    "run_trial",
    "run_trials",
    "sweep",
]


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one simulated distribution process."""

    final_cluster: int
    stop_slot: int
    total_reward: float
    trajectory: list[tuple[int, int, Action]] | None = None


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregate statistics over a batch of trials.

    Standard deviations are population standard deviations over the batch;
    standard errors divide them by the square root of the trial count.
    """

    trial_count: int
    master_seed: int
    mean_reward: float
    std_reward: float
    se_reward: float
    mean_cluster: float
    std_cluster: float
    se_cluster: float
    mean_stoptime: float
    std_stoptime: float
    se_stoptime: float


def _cluster_sizes(rng: np.random.Generator, params: ModelParams) -> np.ndarray:
    """Cluster size after each slot 1..N if the process always continued."""
    S, N = params.clients, params.horizon
    if params.p == 0.0:
        return np.zeros(N, dtype=np.int64)
    first_success = rng.geometric(params.p, size=S)
    per_slot = np.bincount(np.minimum(first_success, N + 1), minlength=N + 2)
    return np.cumsum(per_slot[1 : N + 1])


def _simulate(
    rng: np.random.Generator,
    stop: np.ndarray,
    g: np.ndarray,
    f: np.ndarray,
    has_cost: bool,
    params: ModelParams,
    log_trajectory: bool,
) -> TrialRecord:
    sizes = _cluster_sizes(rng, params)
    stop_slot = params.horizon
    for n in range(1, params.horizon + 1):
        if stop[sizes[n - 1], n - 1]:
            stop_slot = n
            break
    final = int(sizes[stop_slot - 1])
    total = float(g[final, stop_slot - 1])
    if has_cost:
        for n in range(1, stop_slot):
            total -= float(f[sizes[n - 1], n - 1])
    trajectory = None
    if log_trajectory:
        trajectory = [
            (int(sizes[n - 1]), n, Action.CONTINUE) for n in range(1, stop_slot)
        ]
        trajectory.append((final, stop_slot, Action.STOP))
    return TrialRecord(final, stop_slot, total, trajectory)


def run_trial(
    policy: Policy,
    params: ModelParams,
    spec: RewardSpec,
    seed: "int | np.random.SeedSequence",
    log_trajectory: bool = False,
) -> TrialRecord:
    """Run one seeded trial of the distribution process under `policy`."""
    _require_valid(policy, params)
    rng = np.random.default_rng(seed)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)
    return _simulate(rng, policy.stop, g, f, bool(f.any()), params, log_trajectory)


def _require_valid(policy: Policy, params: ModelParams) -> None:
    S, N = params.clients, params.horizon
    if policy.stop.shape != (S + 1, N):
        raise ValueError(f"policy shape {policy.stop.shape} != {(S + 1, N)}")
    if not policy.stop[S, :].all() or not policy.stop[:, N - 1].all():
        raise ValueError("policy must stop at the full cluster and in the final slot")


def run_trials(
    policy: Policy,
    params: ModelParams,
    spec: RewardSpec,
    master_seed: int,
    count: int,
    workers: int = 1,
    key_prefix: tuple[int, ...] = (),
) -> SimulationSummary:
    """Run `count` trials and aggregate; trial i is keyed key_prefix + (i,)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    _require_valid(policy, params)
    g = payoff_table(spec, params)
    f = cost_table(spec, params)
    has_cost = bool(f.any())
    stop = policy.stop

    rewards = np.empty(count)
    clusters = np.empty(count)
    stoptimes = np.empty(count)

    def run_range(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            seq = np.random.SeedSequence(entropy=master_seed, spawn_key=key_prefix + (i,))
            rng = np.random.default_rng(seq)
            rec = _simulate(rng, stop, g, f, has_cost, params, False)
            rewards[i] = rec.total_reward
            clusters[i] = rec.final_cluster
            stoptimes[i] = rec.stop_slot

    if workers <= 1:
        run_range(0, count)
    else:
        chunk = -(-count // workers)
        bounds = [(lo, min(lo + chunk, count)) for lo in range(0, count, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: run_range(*b), bounds))

    def stats(x: np.ndarray) -> tuple[float, float, float]:
        std = float(np.std(x))
        return float(np.mean(x)), std, float(std / np.sqrt(count))

    mr, sr, er = stats(rewards)
    mc, sc, ec = stats(clusters)
    mt, st, et = stats(stoptimes)
    return SimulationSummary(count, master_seed, mr, sr, er, mc, sc, ec, mt, st, et)


def random_policy(params: ModelParams, seed: int) -> Policy:
    """Uniformly random action wherever both actions are allowed."""
    S, N = params.clients, params.horizon
    rng = np.random.default_rng(seed)
    stop = rng.integers(0, 2, size=(S + 1, N)).astype(bool)
    stop[S, :] = True
    stop[:, N - 1] = True
    stop.flags.writeable = False
    return Policy(stop, origin=f"random(seed={seed})")


def _resolve(kind: "str | Policy", params: ModelParams, spec: RewardSpec) -> Policy:
    if isinstance(kind, Policy):
        return kind
    if kind == "optimal":
        return backward_induction(params, spec)[1]
    if kind == "ola":
        return ola_policy(params, spec)
    if kind == "midpoint":
        return midpoint_policy(params, spec)
    raise ValueError(f"unknown policy kind: {kind!r}")


def sweep(
    policies: list[tuple[str, "str | Policy"]],
    clients: int,
    horizon: int,
    spec: RewardSpec,
    p_grid: "np.ndarray | list[float]",
    trials_per_point: int,
    master_seed: int,
    workers: int = 1,
) -> list[tuple[str, float, SimulationSummary]]:
    """Run every (policy, p) cell of the grid and return one summary per cell.

    Probability-dependent policies (optimal, ola, midpoint) are re-solved at
    every grid point; concrete Policy objects are reused as-is.  Cell (i, j)
    seeds its trials with spawn key (i, j, trial).
    """
    grid = [float(p) for p in p_grid]
    if not grid:
        raise ValueError("p_grid must not be empty")
    rows = []
    for i, (label, kind) in enumerate(policies):
        for j, p in enumerate(grid):
            params = ModelParams(clients, horizon, p)
            policy = _resolve(kind, params, spec)
            summary = run_trials(
                policy,
                params,
                spec,
                master_seed,
                trials_per_point,
                workers=workers,
                key_prefix=(i, j),
            )
            rows.append((label, p, summary))
    return rows
