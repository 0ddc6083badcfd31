"""Command-line front end: JSON-configured experiments emitting deterministic CSV.

Commands:

  solve          exact policy/value tables for a single p, plus the bound
                 classification report
  simulate       Monte Carlo sweep of one or more policies over a p grid
  action-matrix  per-state stop thresholds over a p grid
  thresholds     closed-form look-ahead threshold vs. the exhaustive stop set

Every command is a pure function of (config, master_seed) to output bytes:
no timestamps, repr float formatting, fixed row order (policy as listed, then
p ascending, then cluster size, then slot).  Exit codes: 0 ok, 2 config
error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .model import ModelParams
from .rewards import (
    GeometricPayoff,
    LinearTradeoffPayoff,
    RatioPayoff,
    RewardSpec,
)
from .simulator import random_policy, sweep
from .solver import (
    CLASS_LABELS,
    action_matrix,
    ola_set,
    ola_threshold,
    pruned_solve,
)

__all__ = ["ConfigError", "main"]

SCHEMA_PREFIX = "entdist-csv"


class ConfigError(Exception):
    """Bad or missing configuration; the message names the offending field."""


def _require(cfg: dict, field: str):
    if field not in cfg or cfg[field] is None:
        raise ConfigError(f"missing required field: {field}")
    return cfg[field]


def _positive_int(cfg: dict, field: str) -> int:
    value = _require(cfg, field)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{field} must be a positive integer")
    return value


def build_params(cfg: dict, p: float) -> ModelParams:
    S = _positive_int(cfg, "S")
    N = _positive_int(cfg, "N")
    if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
        raise ConfigError("p must lie in [0, 1]")
    return ModelParams(S, N, float(p))


def build_reward(cfg: dict) -> RewardSpec:
    reward = cfg.get("reward") or {}
    family = reward.get("family")
    if family == "ratio":
        return RatioPayoff()
    if family == "geometric":
        lam = reward.get("lambda")
        if not isinstance(lam, (int, float)) or not 0.0 < lam <= 1.0:
            raise ConfigError("lambda must lie in (0,1]")
        return GeometricPayoff(float(lam))
    if family == "linear":
        return LinearTradeoffPayoff()
    raise ConfigError("reward.family must be one of ratio|geometric|linear")


def build_p_grid(cfg: dict) -> list[float]:
    grid = _require(cfg, "p_grid")
    if not isinstance(grid, dict):
        raise ConfigError("p_grid must be an object with start/stop/step")
    try:
        start, stop, step = (float(grid[k]) for k in ("start", "stop", "step"))
    except KeyError as missing:
        raise ConfigError(f"p_grid.{missing.args[0]} is required") from None
    if step <= 0.0:
        raise ConfigError("p_grid.step must be > 0")
    if not 0.0 <= start <= stop <= 1.0:
        raise ConfigError("p_grid must satisfy 0 <= start <= stop <= 1")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    # Clamp against accumulated rounding so the last point never exceeds stop.
    return [min(start + i * step, stop) for i in range(count)]


def build_policies(cfg: dict) -> list[tuple[str, object]]:
    """Expand the configured policy list into (label, kind-or-Policy) pairs."""
    entries = _require(cfg, "policies")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("policies must be a non-empty list")
    S = _positive_int(cfg, "S")
    N = _positive_int(cfg, "N")
    out: list[tuple[str, object]] = []
    for entry in entries:
        if entry in ("optimal", "ola", "midpoint"):
            out.append((entry, entry))
        elif isinstance(entry, dict) and set(entry) == {"random"}:
            spec = entry["random"]
            count = spec.get("count")
            seed = spec.get("seed")
            if not isinstance(count, int) or count < 1:
                raise ConfigError("policies.random.count must be a positive integer")
            if not isinstance(seed, int):
                raise ConfigError("policies.random.seed must be an integer")
            shape_params = ModelParams(S, N, 0.5)  # allowed actions ignore p
            for i in range(count):
                out.append((f"random-{i:02d}", random_policy(shape_params, seed + i)))
        else:
            raise ConfigError(
                "policies entries must be optimal|ola|midpoint or {\"random\": {\"count\": ..., \"seed\": ...}}"
            )
    return out


def _master_seed(cfg: dict) -> int:
    seed = _require(cfg, "master_seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("master_seed must be an integer")
    return seed


def _out_path(cfg: dict, name: str) -> Path:
    prefix = cfg.get("out", "out")
    if not isinstance(prefix, str) or not prefix:
        raise ConfigError("out must be a non-empty string path prefix")
    path = Path(f"{prefix}_{name}")
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, schema: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {SCHEMA_PREFIX}:{schema}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def cmd_solve(cfg: dict) -> int:
    if "p" not in cfg:
        raise ConfigError("solve needs a single p (use simulate for a p_grid)")
    params = build_params(cfg, _require(cfg, "p"))
    spec = build_reward(cfg)
    values, policy, report = pruned_solve(params, spec)

    S, N = params.clients, params.horizon
    _write_csv(
        _out_path(cfg, "policy.csv"),
        "policy-v1",
        ["s", "n", "action"],
        (
            (s, n, policy.action_at(s, n).value)
            for s in range(S + 1)
            for n in range(1, N + 1)
        ),
    )
    _write_csv(
        _out_path(cfg, "value.csv"),
        "value-v1",
        ["s", "n", "v"],
        ((s, n, values.value_at(s, n)) for s in range(S + 1) for n in range(1, N + 1)),
    )

    def classification(s: int, n: int) -> str:
        if n == N:
            return "forced"
        return CLASS_LABELS[int(report.classification[s, n - 1])]

    _write_csv(
        _out_path(cfg, "prune_report.csv"),
        "prune-report-v1",
        ["s", "n", "classification"],
        ((s, n, classification(s, n)) for s in range(S + 1) for n in range(1, N + 1)),
    )
    print(f"v_initial {values.v_initial!r}")
    return 0


def cmd_simulate(cfg: dict) -> int:
    grid = build_p_grid(cfg)
    spec = build_reward(cfg)
    policies = build_policies(cfg)
    trials = _positive_int(cfg, "trials")
    master_seed = _master_seed(cfg)
    workers = cfg.get("threads", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("threads must be a positive integer")

    rows = sweep(
        policies,
        _positive_int(cfg, "S"),
        _positive_int(cfg, "N"),
        spec,
        grid,
        trials,
        master_seed,
        workers=workers,
    )
    _write_csv(
        _out_path(cfg, "sweep.csv"),
        "sweep-v1",
        [
            "policy_label",
            "p",
            "mean_reward",
            "std_reward",
            "se_reward",
            "mean_cluster",
            "std_cluster",
            "mean_stoptime",
            "std_stoptime",
            "trials",
            "master_seed",
        ],
        (
            (
                label,
                p,
                s.mean_reward,
                s.std_reward,
                s.se_reward,
                s.mean_cluster,
                s.std_cluster,
                s.mean_stoptime,
                s.std_stoptime,
                s.trial_count,
                s.master_seed,
            )
            for label, p, s in rows
        ),
    )
    return 0


def cmd_action_matrix(cfg: dict) -> int:
    grid = build_p_grid(cfg)
    spec = build_reward(cfg)
    S = _positive_int(cfg, "S")
    N = _positive_int(cfg, "N")
    matrix = action_matrix(S, N, spec, grid)
    _write_csv(
        _out_path(cfg, "action_matrix.csv"),
        "action-matrix-v1",
        ["s", "n", "p_threshold", "monotone_flag"],
        (
            (
                s,
                n,
                float(matrix.thresholds[s, n - 1]),
                "true" if matrix.monotone[s, n - 1] else "false",
            )
            for s in range(S + 1)
            for n in range(1, N + 1)
        ),
    )
    return 0


def cmd_thresholds(cfg: dict) -> int:
    spec = build_reward(cfg)
    if isinstance(spec, RatioPayoff):
        print("no closed form: the one-step look-ahead rule is not optimal for the ratio payoff")
        return 2
    params = build_params(cfg, _require(cfg, "p"))
    if params.horizon < 2:
        raise ConfigError("thresholds needs N >= 2 so a look-ahead slot exists")
    t = ola_threshold(spec, params)
    members = ola_set(1, params, spec)
    print(f"closed_form_threshold {t!r}")
    print(f"ola_set_min {min(members) if members else 'empty'}")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "action-matrix": cmd_action_matrix,
    "thresholds": cmd_thresholds,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entdist",
        description="Stopping-rule experiments for heralded entanglement distribution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", type=str, default=None, help="JSON config file")
        cmd.add_argument("--S", type=int, default=None)
        cmd.add_argument("--N", type=int, default=None)
        cmd.add_argument("--p", type=float, default=None)
        cmd.add_argument("--p-start", type=float, default=None)
        cmd.add_argument("--p-stop", type=float, default=None)
        cmd.add_argument("--p-step", type=float, default=None)
        cmd.add_argument("--family", type=str, default=None)
        cmd.add_argument("--lambda", dest="lam", type=float, default=None)
        cmd.add_argument("--policies", type=str, default=None,
                         help="comma list: optimal,ola,midpoint,random:<count>:<seed>")
        cmd.add_argument("--trials", type=int, default=None)
        cmd.add_argument("--master-seed", type=int, default=None)
        cmd.add_argument("--out", type=str, default=None)
        cmd.add_argument("--threads", type=int, default=None)
    return parser


def _parse_policies_flag(text: str) -> list:
    entries: list = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token.startswith("random:"):
            parts = token.split(":")
            if len(parts) != 3:
                raise ConfigError("random policy flag must look like random:<count>:<seed>")
            try:
                entries.append({"random": {"count": int(parts[1]), "seed": int(parts[2])}})
            except ValueError:
                raise ConfigError("random policy flag must look like random:<count>:<seed>") from None
        else:
            entries.append(token)
    return entries


def _merge_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file is not valid JSON: {err}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    for field in ("S", "N", "p", "trials", "out", "threads"):
        value = getattr(args, field)
        if value is not None:
            cfg[field] = value
    if args.master_seed is not None:
        cfg["master_seed"] = args.master_seed
    if any(v is not None for v in (args.p_start, args.p_stop, args.p_step)):
        grid = dict(cfg.get("p_grid") or {})
        if args.p_start is not None:
            grid["start"] = args.p_start
        if args.p_stop is not None:
            grid["stop"] = args.p_stop
        if args.p_step is not None:
            grid["step"] = args.p_step
        cfg["p_grid"] = grid
    if args.family is not None or args.lam is not None:
        reward = dict(cfg.get("reward") or {})
        if args.family is not None:
            reward["family"] = args.family
        if args.lam is not None:
            reward["lambda"] = args.lam
        cfg["reward"] = reward
    if args.policies is not None:
        cfg["policies"] = _parse_policies_flag(args.policies)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - surfaced as invariant violation
        print(f"internal error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
